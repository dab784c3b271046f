import pytest
from hypothesis import given, strategies as st

from sfwmsim import channels
from conftest import PUMP_NM, TABLE_A1

pairs = st.integers(1, channels.N_PAIRS)


@pytest.mark.parametrize("k", sorted(TABLE_A1))
def test_pair_matches_table(k):
    s, i, ls, li = TABLE_A1[k]
    p = channels.channel_pair(k)
    assert (p.signal_channel, p.idler_channel) == (s, i)
    assert abs(p.signal_wavelength_nm - ls) < 0.01
    assert abs(p.idler_wavelength_nm - li) < 0.01


def test_pump_wavelength():
    g = channels.DEFAULT_GRID
    assert abs(g.wavelength_nm(g.pump_channel) - PUMP_NM) < 0.01


@pytest.mark.parametrize("k, ghz", [(1, 200), (8, 900), (14, 1500)])
def test_detuning_examples(k, ghz):
    assert channels.detuning_ghz(k) == ghz


@given(pairs)
def test_energy_conservation_is_integer_identity(k):
    g = channels.DEFAULT_GRID
    p = channels.channel_pair(k)
    assert channels.energy_mismatch_slots(k) == 0
    total = g.frequency_ghz(p.signal_channel) + g.frequency_ghz(p.idler_channel)
    assert isinstance(total, int) and total == 2 * g.frequency_ghz(g.pump_channel)


@given(st.integers(1, channels.N_PAIRS - 1))
def test_detuning_strictly_increasing(k):
    assert channels.detuning_ghz(k + 1) > channels.detuning_ghz(k)


@given(st.integers(19, 49))
def test_grid_frequencies_are_100ghz_multiples_of_anchor(c):
    g = channels.DEFAULT_GRID
    assert (g.frequency_ghz(c) - 193100) % 100 == 0
    assert g.wavelength_nm(c) == pytest.approx(channels.SPEED_OF_LIGHT / (g.frequency_ghz(c) * 1e9) * 1e9)


@pytest.mark.parametrize("k", [0, 15, -1, 2.0, True])
def test_out_of_range_pair_rejected(k):
    with pytest.raises(ValueError):
        channels.channel_pair(k)


@pytest.mark.parametrize("c", [18, 50])
def test_out_of_grid_channel_rejected(c):
    with pytest.raises(ValueError):
        channels.DEFAULT_GRID.wavelength_nm(c)


def test_guard_channels_not_exposed():
    used = {c for p in channels.all_pairs() for c in (p.signal_channel, p.idler_channel)}
    assert not used & {33, 34, 35}
    assert len(used) == 28


def test_table_export_layout():
    text = channels.write_pair_table()
    lines = text.strip().splitlines()
    assert lines[0] == ",".join(channels.TABLE_HEADER)
    assert lines[1].startswith("Signal 14 - Idler 14,C19 - C49,1562.23,1538.19")
    assert lines[-1] == "Pump,C34,1550.12,"
    assert len(lines) == 16
