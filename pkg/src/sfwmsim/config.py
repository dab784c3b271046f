"""Layered TOML presets -> Scenario.

A preset is a TOML file with one table per parameter block. ``extends``
names a parent preset whose tables are merged underneath. Overrides (from
a user file or the command line) are merged on top the same way. Every
preset carries a ``[provenance]`` table saying which numbers are quoted,
fitted, derived or assumed.
"""
from __future__ import annotations

import copy
import os
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import photonics as ph
from .engine.scenario import Scenario, ScenarioError, Setting

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

PRESET_ENV = "SFWMSIM_PRESET_DIR"
BUILTIN_DIR = Path(__file__).parent / "presets"


class ConfigError(ValueError):
    pass


def preset_dirs() -> list[Path]:
    dirs = []
    env = os.environ.get(PRESET_ENV)
    if env:
        dirs.extend(Path(p) for p in env.split(os.pathsep) if p)
    dirs.append(BUILTIN_DIR)
    return dirs


def available_presets() -> list[str]:
    names = set()
    for d in preset_dirs():
        if d.is_dir():
            names.update(p.stem for p in d.glob("*.toml"))
    return sorted(names)


def find_preset(name: str) -> Path:
    p = Path(name)
    if p.suffix == ".toml" and p.is_file():
        return p
    for d in preset_dirs():
        cand = d / f"{name}.toml"
        if cand.is_file():
            return cand
    raise ConfigError(f"unknown preset {name!r}; available: {', '.join(available_presets())}")


def deep_merge(base: dict, top: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in top.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _read(path: Path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def load_preset_dict(name: str, _seen: tuple = ()) -> dict:
    path = find_preset(name)
    if path in _seen:
        raise ConfigError(f"preset inheritance cycle through {path}")
    data = _read(path)
    parent = data.pop("extends", None)
    if parent:
        data = deep_merge(load_preset_dict(parent, _seen + (path,)), data)
    data.setdefault("meta", {})["name"] = path.stem
    return data


@dataclass(frozen=True)
class RunConfig:
    scenario: Scenario
    window: float  # coincidence window, s
    resolved: dict = field(compare=False)  # full merged config, echoed into outputs

    @property
    def provenance(self) -> dict:
        return self.resolved.get("provenance", {})


def _block(cls, d: dict, name: str):
    try:
        return cls(**d)
    except TypeError as exc:
        raise ConfigError(f"[{name}]: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"[{name}]: {exc}") from exc


def build(cfg: dict) -> RunConfig:
    """Turn a resolved config dict into a scenario."""
    try:
        sc_tab = dict(cfg.get("scenario", {}))
        window = float(sc_tab.pop("window", 0.8e-9))
        src = dict(cfg["source"])
        slope = src.pop("noise_slope", None)
        if slope is not None:
            src["noise_profile"] = ph.linear_noise_profile(float(slope), int(src.pop("noise_reference_pair", 8)))
        source = _block(ph.SourceParams, src, "source")
        det_s = _block(ph.DetectorParams, cfg["detector_s"], "detector_s")
        det_i = _block(ph.DetectorParams, cfg["detector_i"], "detector_i")
        arm_s = _block(ph.ArmLossBudget, {"detector_efficiency": det_s.efficiency, **cfg.get("arm_s", {})}, "arm_s")
        arm_i = _block(ph.ArmLossBudget, {"detector_efficiency": det_i.efficiency, **cfg.get("arm_i", {})}, "arm_i")
        pump = _block(ph.PumpParams, cfg.get("pump", {}), "pump")
        umi = cfg.get("umi")
        n_umi = int(sc_tab.pop("n_umis", 0))
        umis = (_block(ph.UMIParams, umi or {}, "umi"),) * n_umi
        sag = cfg.get("sagnac")
        sagnac = _block(ph.SagnacParams, sag, "sagnac") if sag is not None else None
        setting = _block(Setting, cfg.get("setting", {}), "setting")
        sc = Scenario(source=source, detector_s=det_s, detector_i=det_i, arm_s=arm_s, arm_i=arm_i, pump=pump,
                      umis=umis, sagnac=sagnac, setting=setting, **sc_tab)
    except KeyError as exc:
        raise ConfigError(f"missing config table {exc}") from exc
    except (TypeError, ScenarioError) as exc:
        raise ConfigError(str(exc)) from exc
    if window <= 0:
        raise ConfigError("window must be positive")
    return RunConfig(sc, window, cfg)


def load(preset: str, overrides: dict | None = None, override_files=()) -> RunConfig:
    cfg = load_preset_dict(preset)
    for f in override_files:
        extra = _read(Path(f))
        extra.pop("extends", None)
        cfg = deep_merge(cfg, extra)
    if overrides:
        cfg = deep_merge(cfg, overrides)
    return build(cfg)


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    return '"' + str(v).replace("\\", "\\\\").replace('"', '\\"') + '"'


def _toml_key(k: str) -> str:
    return k if re.fullmatch(r"[A-Za-z0-9_-]+", k) else _toml_value(k)


def dump_toml(d: dict, prefix: str = "") -> str:
    """Minimal TOML writer for echoing resolved configs (nested tables, scalars, lists)."""
    scalars = [f"{_toml_key(k)} = {_toml_value(v)}" for k, v in sorted(d.items()) if not isinstance(v, dict) and v is not None]
    parts = ["\n".join(scalars)] if scalars else []
    for k, v in sorted(d.items()):
        if isinstance(v, dict):
            body = dump_toml(v, f"{prefix}{_toml_key(k)}.")
            parts.append(f"[{prefix}{_toml_key(k)}]" + ("\n" + body.rstrip("\n") if body.strip() else ""))
    return "\n\n".join(parts) + "\n"
