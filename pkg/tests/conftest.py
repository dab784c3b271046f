import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from sfwmsim import config, qstate

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", deadline=None, max_examples=500,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# acceptance verdict lines, echoed in the terminal summary
VERDICTS: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def et_config():
    return config.load("energy_time_i8")


@pytest.fixture(scope="session")
def cw_car_config():
    return config.load("cw_car_i8")


@pytest.fixture(scope="session")
def pol_config():
    return config.load("polarization_i8")


def random_density(rng, rank=4) -> qstate.DensityMatrix:
    g = rng.normal(size=(4, rank)) + 1j * rng.normal(size=(4, rank))
    m = g @ g.conj().T
    return qstate.DensityMatrix(m / np.trace(m).real)


def random_product_ket(rng) -> qstate.Ket2Q:
    a, b = (rng.normal(size=2) + 1j * rng.normal(size=2) for _ in range(2))
    return qstate.Ket2Q.normalized(np.kron(a, b))


# reference grid table: pair -> (signal channel, idler channel, signal nm, idler nm)
TABLE_A1 = {
    14: (19, 49, 1562.23, 1538.19), 13: (20, 48, 1561.42, 1538.98), 12: (21, 47, 1560.61, 1539.77),
    11: (22, 46, 1559.79, 1540.56), 10: (23, 45, 1558.98, 1541.35), 9: (24, 44, 1558.17, 1542.14),
    8: (25, 43, 1557.36, 1542.94), 7: (26, 42, 1556.56, 1543.73), 6: (27, 41, 1555.75, 1544.53),
    5: (28, 40, 1554.94, 1545.32), 4: (29, 39, 1554.13, 1546.12), 3: (30, 38, 1553.33, 1546.92),
    2: (31, 37, 1552.52, 1547.72), 1: (32, 36, 1551.72, 1548.52),
}
PUMP_NM = 1550.12
