"""Experiment specifications and the TOML configuration grammar.

A configuration file has up to four tables::

    [experiment]
    name = "fig4_outage_vs_pt"
    schemes = ["rpm_k3", "pbit"]
    trials = 200
    seed = 7

    [sweep]
    param = "pt_dbm"
    values = [10, 20, 30]        # or start / stop / step

    [scenario]
    G = 6
    Pt = "20 dBm"
    dy = "45 m"

    [beamform]
    eps = 1e-4

Anything left out takes the figure default (see ``default_spec``).  Plain
numbers are read in configuration units: dBm for powers, dB for ``C0``
(a loss), metres for distances.
"""
from __future__ import annotations

import math
import re
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import numpy as np

from ..beamform import ALG1_EPS, ALG1_MAX_ITER
from ..channel import ScenarioConfig
from ..numkit import ValidationError
from ..sdp import DEFAULT_RANDOMIZATION_SAMPLES

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

EXPERIMENTS = (
    "fig2_outage_vs_snr",
    "fig3_power_vs_dy",
    "fig4_outage_vs_pt",
    "fig5_rate_vs_dy",
    "fig6_rate_vs_kbar",
    "fig7_rate_vs_grouping",
)
FIG_NAMES = {int(n[3]): n for n in EXPERIMENTS}

# sweep parameter -> CSV column name
SWEEP_COLUMNS = {"dy": "dy_m", "pt_dbm": "pt_dbm", "snr_db": "snr_db", "Kbar": "kbar", "G": "G"}
INT_SWEEPS = ("Kbar", "G")

SCHEME_BASES = ("rpm", "ub", "no_it", "no_ris", "random", "pbit", "unit")
_SCHEME_RE = re.compile(r"^(rpm|ub|no_it|no_ris|random|pbit|unit)((?:_(?:k|g|pt)-?\d+(?:\.\d+)?)*)$")
_SUFFIX_RE = re.compile(r"_(k|g|pt)(-?\d+(?:\.\d+)?)")

CSI_MODES = ("estimated", "perfect")
OUTAGE_METHODS = ("indicator", "conditional")
SCHEMA_VERSION = 1

DY_GRID = tuple(float(v) for v in np.arange(20.0, 70.0 + 1e-9, 2.5))
PT_GRID = (-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)


class ConfigError(ValidationError):
    """Invalid configuration; the message starts with the offending key path."""


@dataclass(frozen=True)
class SchemeSpec:
    label: str
    base: str
    kbar: int | None = None
    groups: int | None = None
    pt_dbm: float | None = None


def parse_scheme(label: str) -> SchemeSpec:
    """Parse labels such as ``rpm_k3``, ``ub_k3``, ``rpm_pt10`` or ``rpm_g6``."""
    m = _SCHEME_RE.match(label)
    if not m:
        raise ValidationError(
            f"bad scheme label {label!r}; expected one of {SCHEME_BASES} with optional _k<n>, _g<n>, _pt<dBm>"
        )
    opts: dict[str, Any] = {}
    for key, val in _SUFFIX_RE.findall(m.group(2)):
        if key in opts:
            raise ValidationError(f"scheme label {label!r} repeats suffix _{key}")
        opts[key] = val
    try:
        kbar = int(opts["k"]) if "k" in opts else None
        groups = int(opts["g"]) if "g" in opts else None
    except ValueError:
        raise ValidationError(f"scheme label {label!r}: _k and _g take integers") from None
    pt = float(opts["pt"]) if "pt" in opts else None
    return SchemeSpec(label, m.group(1), kbar, groups, pt)


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    sweep_param: str = "dy"
    sweep_values: tuple = DY_GRID
    schemes: tuple = ("rpm_k3",)
    trials: int = 100
    noise_samples: int = 200
    seed: int = 0
    csi: str = "estimated"
    R: float = 1.0
    outage_method: str = "conditional"
    overhead: bool = False
    eps: float = ALG1_EPS
    max_iter: int = ALG1_MAX_ITER
    randomization_samples: int = DEFAULT_RANDOMIZATION_SAMPLES

    def __post_init__(self):
        if self.name not in EXPERIMENTS:
            raise ValidationError(f"unknown experiment {self.name!r}; expected one of {EXPERIMENTS}")
        if self.sweep_param not in SWEEP_COLUMNS:
            raise ValidationError(f"unknown sweep parameter {self.sweep_param!r}")
        cast = int if self.sweep_param in INT_SWEEPS else float
        vals = tuple(cast(v) for v in self.sweep_values)
        if not vals:
            raise ValidationError("sweep values are empty")
        if not all(math.isfinite(v) for v in vals) or any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValidationError("sweep values must be finite and strictly increasing")
        object.__setattr__(self, "sweep_values", vals)
        schemes = tuple(self.schemes)
        if not schemes:
            raise ValidationError("scheme list is empty")
        if len(set(schemes)) != len(schemes):
            raise ValidationError("duplicate scheme labels")
        for s in schemes:
            parse_scheme(s)
        object.__setattr__(self, "schemes", schemes)
        if self.trials < 1 or self.noise_samples < 1:
            raise ValidationError("trials and noise_samples must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValidationError("seed must be a 64-bit unsigned integer")
        if self.csi not in CSI_MODES:
            raise ValidationError(f"csi must be one of {CSI_MODES}")
        if self.outage_method not in OUTAGE_METHODS:
            raise ValidationError(f"outage_method must be one of {OUTAGE_METHODS}")
        if not self.R > 0:
            raise ValidationError("target rate R must be positive")
        # every sweep point must give a valid scenario
        for v in vals:
            scenario_at(self, v)

    @property
    def sweep_column(self) -> str:
        return SWEEP_COLUMNS[self.sweep_param]


def scenario_at(spec: ExperimentSpec, value) -> ScenarioConfig:
    """Scenario for one sweep point.  Sweeping ``G`` also sets ``Kbar = G // 2``."""
    p = spec.sweep_param
    sc = spec.scenario
    if p == "dy":
        return replace(sc, dy=float(value))
    if p == "pt_dbm":
        return replace(sc, pt_dbm=float(value))
    if p == "Kbar":
        return replace(sc, Kbar=int(value))
    if p == "G":
        return replace(sc, G=int(value), Kbar=int(value) // 2)
    return sc


def default_spec(name: str, full: bool = False) -> ExperimentSpec:
    """Reduced-scale defaults per figure; ``full=True`` uses full-scale trial counts."""
    base = ScenarioConfig()
    if name == "fig2_outage_vs_snr":
        return ExperimentSpec(
            name, base, "snr_db", tuple(np.arange(10.0, 30.0 + 1e-9, 2.5)),
            ("rpm_k0", "rpm_k1", "rpm_k2", "rpm_k3", "rpm_k4", "unit_k1"),
            trials=10**6 if full else 10**5,
        )
    if name == "fig3_power_vs_dy":
        return ExperimentSpec(
            name, base, "dy", DY_GRID,
            ("ub_k3", "no_it", "rpm_k3", "random_k3", "no_ris", "pbit"),
            trials=1000 if full else 200,
        )
    if name == "fig4_outage_vs_pt":
        return ExperimentSpec(
            name, replace(base, G=6, Kbar=3), "pt_dbm", PT_GRID,
            ("rpm_k5", "rpm_k3", "pbit", "no_it", "no_ris"),
            trials=2000 if full else 500,
        )
    if name == "fig5_rate_vs_dy":
        return ExperimentSpec(
            name, base, "dy", DY_GRID,
            ("ub_k3", "rpm_k3", "rpm_k2", "no_it", "no_ris", "pbit"),
            trials=1000 if full else 50,
        )
    if name == "fig6_rate_vs_kbar":
        return ExperimentSpec(
            name, replace(base, G=9, Kbar=5), "Kbar", tuple(range(1, 9)),
            ("rpm_pt10", "rpm_pt30"),
            trials=1000 if full else 100, noise_samples=200 if full else 50,
        )
    if name == "fig7_rate_vs_grouping":
        return ExperimentSpec(
            name, base, "pt_dbm", PT_GRID,
            ("rpm_g2", "rpm_g4", "rpm_g6"),
            trials=1000 if full else 50, overhead=True,
        )
    raise ValidationError(f"unknown experiment {name!r}; expected one of {EXPERIMENTS}")


# ---------------------------------------------------------------- unit parsing

_QTY_RE = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?|[-+]?inf)\s*([A-Za-z]*)\s*$")


def _quantity(path: str, value, units: dict[str, Any], default: str) -> float:
    if isinstance(value, bool):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        num, unit = float(value), default
    elif isinstance(value, str):
        m = _QTY_RE.match(value)
        if not m:
            raise ConfigError(f"{path}: cannot parse {value!r}")
        num, unit = float(m.group(1)), (m.group(2) or default)
    else:
        raise ConfigError(f"{path}: expected a number or string, got {type(value).__name__}")
    if unit not in units:
        raise ConfigError(f"{path}: unit {unit!r} not accepted (use one of {sorted(units)})")
    return units[unit](num)


def _power_dbm(num: float) -> float:
    if num <= 0:
        raise ValueError
    return 10.0 * math.log10(num * 1e3)


_POWER_UNITS = {
    "dBm": lambda x: x,
    "dBW": lambda x: x + 30.0,
    "W": lambda x: _power_dbm(x),
    "mW": lambda x: _power_dbm(x * 1e-3),
}
_DB_UNITS = {"dB": lambda x: x}
_LENGTH_UNITS = {"m": lambda x: x, "cm": lambda x: x / 100.0}
_PLAIN = {"": lambda x: x}

# config key -> (ScenarioConfig field, kind)
_SCENARIO_KEYS = {
    "N": ("N", "int"), "ris_nx": ("ris_nx", "int"), "ris_nz": ("ris_nz", "int"),
    "G": ("G", "int"), "Kbar": ("Kbar", "int"), "Tc": ("Tc", "int"), "M": ("M", "int"),
    "Pt": ("pt_dbm", "power"), "pt_dbm": ("pt_dbm", "power"),
    "Pp": ("pp_dbm", "power"), "pp_dbm": ("pp_dbm", "power"),
    "sigma2": ("sigma2_dbm", "power"), "sigma2_dbm": ("sigma2_dbm", "power"),
    "C0": ("c0_db", "db"), "c0_db": ("c0_db", "db"),
    "d0": ("d0", "length"), "dy": ("dy", "length"), "dz": ("dz", "length"),
    "wavelength": ("wavelength", "length"),
    "alpha_au": ("alpha_au", "plain"), "alpha_ar": ("alpha_ar", "plain"), "alpha_ru": ("alpha_ru", "plain"),
    "kappa_au": ("kappa_au", "plain"), "kappa_ar": ("kappa_ar", "plain"), "kappa_ru": ("kappa_ru", "plain"),
}
_KIND_UNITS = {"power": (_POWER_UNITS, "dBm"), "db": (_DB_UNITS, "dB"), "length": (_LENGTH_UNITS, "m"),
               "plain": (_PLAIN, "")}


def _int(path: str, value) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
        raise ConfigError(f"{path}: expected an integer, got {value!r}")
    return int(value)


def _scenario(base: ScenarioConfig, table: dict) -> ScenarioConfig:
    if not isinstance(table, dict):
        raise ConfigError("scenario: expected a table")
    kw: dict[str, Any] = {}
    L = None
    for key, value in table.items():
        path = f"scenario.{key}"
        if key == "L":
            L = _int(path, value)
            continue
        if key not in _SCENARIO_KEYS:
            raise ConfigError(f"{path}: unknown key")
        fname, kind = _SCENARIO_KEYS[key]
        if fname in kw:
            raise ConfigError(f"{path}: duplicates another spelling of {fname}")
        if kind == "int":
            kw[fname] = _int(path, value)
        else:
            units, default = _KIND_UNITS[kind]
            try:
                kw[fname] = _quantity(path, value, units, default)
            except ValueError:
                raise ConfigError(f"{path}: value {value!r} out of range") from None
    if L is not None:
        G = kw.get("G", base.G)
        if L < 1 or L % G:
            raise ConfigError(f"scenario.L: L = {L} is not divisible by G = {G} (grouping size must be an integer)")
        if "ris_nx" not in kw and "ris_nz" not in kw:
            side = math.isqrt(L)
            if side * side != L:
                raise ConfigError(f"scenario.L: L = {L} is not square; give ris_nx and ris_nz")
            kw["ris_nx"] = kw["ris_nz"] = side
        nx, nz = kw.get("ris_nx", base.ris_nx), kw.get("ris_nz", base.ris_nz)
        if nx * nz != L:
            raise ConfigError(f"scenario.L: L = {L} disagrees with ris_nx * ris_nz = {nx * nz}")
    try:
        return replace(base, **kw)
    except ValidationError as exc:
        raise ConfigError(f"scenario: {exc}") from None


def _sweep(spec_kw: dict, table: dict) -> None:
    if not isinstance(table, dict):
        raise ConfigError("sweep: expected a table")
    unknown = set(table) - {"param", "values", "start", "stop", "step"}
    if unknown:
        raise ConfigError(f"sweep.{sorted(unknown)[0]}: unknown key")
    if "param" in table:
        if table["param"] not in SWEEP_COLUMNS:
            raise ConfigError(f"sweep.param: unknown parameter {table['param']!r}; expected one of {list(SWEEP_COLUMNS)}")
        spec_kw["sweep_param"] = table["param"]
    if "values" in table:
        if {"start", "stop", "step"} & set(table):
            raise ConfigError("sweep.values: give either values or start/stop/step")
        vals = table["values"]
        if not isinstance(vals, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in vals):
            raise ConfigError("sweep.values: expected a list of numbers")
        spec_kw["sweep_values"] = tuple(vals)
    elif {"start", "stop", "step"} & set(table):
        missing = {"start", "stop", "step"} - set(table)
        if missing:
            raise ConfigError(f"sweep.{sorted(missing)[0]}: missing")
        start, stop, step = (float(table[k]) for k in ("start", "stop", "step"))
        if step <= 0:
            raise ConfigError("sweep.step: must be positive")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        spec_kw["sweep_values"] = tuple(start + i * step for i in range(max(n, 0)))


_EXPERIMENT_KEYS = {
    "name": str, "schemes": list, "trials": int, "noise_samples": int, "seed": int,
    "csi": str, "R": float, "outage_method": str, "overhead": bool,
}
_BEAMFORM_KEYS = {"eps": float, "max_iter": int, "randomization_samples": int}


def _typed(path: str, value, kind):
    if kind is int:
        return _int(path, value)
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if kind is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected true or false, got {value!r}")
        return value
    if kind is list:
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            raise ConfigError(f"{path}: expected a list of strings")
        return tuple(value)
    if not isinstance(value, str):
        raise ConfigError(f"{path}: expected a string, got {value!r}")
    return value


def spec_from_dict(data: dict, full: bool = False) -> ExperimentSpec:
    """Build a spec from the nested-table form used by both TOML files and JSON echoes."""
    if not isinstance(data, dict):
        raise ConfigError("config: expected a table at top level")
    unknown = set(data) - {"experiment", "sweep", "scenario", "beamform"}
    if unknown:
        raise ConfigError(f"{sorted(unknown)[0]}: unknown section")
    exp = data.get("experiment", {})
    if not isinstance(exp, dict):
        raise ConfigError("experiment: expected a table")
    name = exp.get("name", "fig3_power_vs_dy")
    if name not in EXPERIMENTS:
        raise ConfigError(f"experiment.name: unknown experiment {name!r}; expected one of {EXPERIMENTS}")
    base = default_spec(name, full)
    kw: dict[str, Any] = {}
    for key, value in exp.items():
        if key not in _EXPERIMENT_KEYS:
            raise ConfigError(f"experiment.{key}: unknown key")
        kw[key] = _typed(f"experiment.{key}", value, _EXPERIMENT_KEYS[key])
    bf = data.get("beamform", {})
    if not isinstance(bf, dict):
        raise ConfigError("beamform: expected a table")
    for key, value in bf.items():
        if key not in _BEAMFORM_KEYS:
            raise ConfigError(f"beamform.{key}: unknown key")
        kw[key] = _typed(f"beamform.{key}", value, _BEAMFORM_KEYS[key])
    _sweep(kw, data.get("sweep", {}))
    kw["scenario"] = _scenario(base.scenario, data.get("scenario", {}))
    kw.pop("name", None)
    try:
        return replace(base, **kw)
    except ValidationError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"experiment: {exc}") from None


def load_config(path, full: bool = False) -> ExperimentSpec:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"config file not found: {p}")
    try:
        with p.open("rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{p}: {exc}") from None
    return spec_from_dict(data, full)


def _encode(x):
    if isinstance(x, float) and math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def spec_to_dict(spec: ExperimentSpec) -> dict:
    """Inverse of ``spec_from_dict``; infinities are written as the string ``"inf"``."""
    sc = {f.name: _encode(getattr(spec.scenario, f.name)) for f in fields(ScenarioConfig) if f.init}
    return {
        "experiment": {
            "name": spec.name,
            "schemes": list(spec.schemes),
            "trials": spec.trials,
            "noise_samples": spec.noise_samples,
            "seed": spec.seed,
            "csi": spec.csi,
            "R": spec.R,
            "outage_method": spec.outage_method,
            "overhead": spec.overhead,
        },
        "sweep": {"param": spec.sweep_param, "values": list(spec.sweep_values)},
        "scenario": sc,
        "beamform": {"eps": spec.eps, "max_iter": spec.max_iter, "randomization_samples": spec.randomization_samples},
    }
