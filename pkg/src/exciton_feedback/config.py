"""Run configuration: a flat TOML document with one section per experiment.

Example::

    experiment = "omega_sweep"
    seed = 7

    [model]
    n_molecules = 10
    spacing = 3.4

    [omega_sweep]
    grid = {start = 0.0, stop = 1.0, num = 21}
    n_values = [5, 10]

Unknown keys, wrong types and unphysical values are rejected before any
computation, with the offending key and its line number.
"""

from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import model as _model
from .experiments import DEFAULT_ENSEMBLE, DEFAULT_OMEGA_GRID, FEEDBACK_ETAS, FEEDBACK_LAMBDAS, FEEDBACK_TARGETS, ChainSettings
from .observables import Channel

EXPERIMENTS = ("omega_sweep", "n_sweep", "crossover", "disorder", "feedback", "single_point", "verify")


class ConfigError(ValueError):
    def __init__(self, message: str, key: Optional[str] = None, line: Optional[int] = None):
        where = ""
        if key is not None:
            where = f"{key!r}" + (f" (line {line})" if line else "")
            message = f"{where}: {message}"
        super().__init__(message)
        self.key = key
        self.line = line


FLOAT, INT, BOOL, STR, FLOATS, INTS, STRS, VECTOR = "float", "int", "bool", "str", "floats", "ints", "strs", "vector"

TOP_KEYS = {"experiment": STR, "seed": INT, "output": STR, "plot": BOOL, "workers": INT}

MODEL_KEYS = {
    "n_molecules": INT,
    "omega_rabi": FLOAT,
    "omega_cavity": FLOAT,
    "zero_detuning": BOOL,
    "detuning_shift": FLOAT,  # or "bright"
    "site_energy": FLOAT,
    "spacing": FLOAT,
    "dipole_moment": FLOAT,
    "dipole_orientation": VECTOR,  # or "perpendicular" / "parallel"
    "gamma_r": FLOAT,
    "gamma_nr": FLOAT,
    "gamma_phi": FLOAT,
    "kappa": FLOAT,
    "gamma_p": FLOAT,
    "hopping": BOOL,
    "cavity_coupling": BOOL,
    "nearest_neighbor_only": BOOL,
    "feedback_target": INT,
    "feedback_lambda": FLOAT,
    "detector_efficiency": FLOAT,
}

SECTION_KEYS = {
    "omega_sweep": {"grid": FLOATS, "n_values": INTS, "channels": STRS},
    "n_sweep": {"n_values": INTS, "channels": STRS},
    "crossover": {"n_min": INT, "n_max": INT},
    "disorder": {"q": FLOAT, "ensemble": INT, "grid": FLOATS, "channels": STRS, "fix_ends": BOOL},
    "feedback": {"targets": INTS, "lambda_grid": FLOATS, "eta_grid": FLOATS, "omega_grid": FLOATS, "lam": FLOAT},
    "single_point": {"channels": STRS},
    "verify": {},
}

SECTION_DEFAULTS = {
    "omega_sweep": {"grid": list(DEFAULT_OMEGA_GRID), "n_values": [5, 10, 40, 60], "channels": ["full"]},
    "n_sweep": {"n_values": list(range(5, 41)), "channels": ["nh", "wc"]},
    "crossover": {"n_min": 5, "n_max": 40},
    "disorder": {"q": _model.DISORDER_STD, "ensemble": DEFAULT_ENSEMBLE, "grid": list(DEFAULT_OMEGA_GRID), "channels": ["full", "wc", "nh"], "fix_ends": True},
    "feedback": {"targets": list(FEEDBACK_TARGETS), "lambda_grid": list(FEEDBACK_LAMBDAS), "eta_grid": list(FEEDBACK_ETAS), "omega_grid": list(DEFAULT_OMEGA_GRID), "lam": 0.5},
    "single_point": {"channels": ["full", "wc", "nh"]},
    "verify": {},
}

MODEL_DEFAULTS = {
    "n_molecules": 10,
    "omega_rabi": 1.0,
    "omega_cavity": _model.OMEGA_CAVITY,
    "zero_detuning": True,
    "detuning_shift": "bright",
    "site_energy": _model.DISORDER_MEAN,
    "spacing": _model.SPACING,
    "dipole_moment": _model.DIPOLE_MOMENT,
    "dipole_orientation": "perpendicular",
    "gamma_r": _model.GAMMA_R,
    "gamma_nr": _model.GAMMA_NR,
    "gamma_phi": _model.GAMMA_PHI,
    "kappa": _model.KAPPA,
    "gamma_p": _model.GAMMA_P,
    "hopping": True,
    "cavity_coupling": True,
    "nearest_neighbor_only": False,
    "feedback_target": None,
    "feedback_lambda": 0.0,
    "detector_efficiency": 1.0,
}


@dataclass
class RunConfig:
    experiment: str
    model: dict
    params: dict
    seed: int = 0
    output: str = "results"
    plot: bool = True
    workers: int = 1

    @property
    def omega_cavity(self) -> float:
        return self.model["omega_cavity"]

    def settings(self) -> ChainSettings:
        m = self.model
        orientation = m["dipole_orientation"]
        if isinstance(orientation, str):
            orientation = _model.PERPENDICULAR if orientation == "perpendicular" else _model.PARALLEL
        else:
            v = np.asarray(orientation, dtype=float)
            orientation = tuple(v / np.linalg.norm(v))
        delta = m["detuning_shift"]
        return ChainSettings(
            n_molecules=m["n_molecules"],
            omega_rabi=m["omega_rabi"],
            site_energy=m["site_energy"],
            omega_cavity=None if m["zero_detuning"] else m["omega_cavity"],
            delta=None if delta == "bright" else float(delta),
            spacing=m["spacing"],
            dipole_moment=m["dipole_moment"],
            dipole_orientation=orientation,
            gamma_r=m["gamma_r"],
            gamma_nr=m["gamma_nr"],
            gamma_phi=m["gamma_phi"],
            kappa=m["kappa"],
            gamma_p=m["gamma_p"],
            hopping_enabled=m["hopping"],
            cavity_coupling_enabled=m["cavity_coupling"],
            nearest_neighbor_only=m["nearest_neighbor_only"],
            feedback_target=m["feedback_target"],
            feedback_lambda=m["feedback_lambda"],
            detector_efficiency=m["detector_efficiency"],
            fix_ends=self.params.get("fix_ends", True),
        )

    def resolved_text(self) -> str:
        """The fully resolved configuration as TOML (for provenance headers)."""
        lines = [
            f"experiment = {_toml(self.experiment)}",
            f"seed = {self.seed}",
            f"output = {_toml(self.output)}",
            f"plot = {_toml(self.plot)}",
            f"workers = {self.workers}",
            "",
            "[model]",
        ]
        lines += [f"{k} = {_toml(v)}" for k, v in self.model.items() if v is not None]
        if self.params:
            lines += ["", f"[{self.experiment}]"]
            lines += [f"{k} = {_toml(v)}" for k, v in self.params.items()]
        return "\n".join(lines) + "\n"

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


def _toml(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, float):
        return repr(v) if np.isfinite(v) else "nan"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml(x) for x in v) + "]"
    return str(v)


def _line_of(text: str, key: str, section: Optional[str]) -> Optional[int]:
    current = None
    pattern = re.compile(r"^\s*(?:\"?%s\"?)\s*=" % re.escape(key))
    for i, line in enumerate(text.splitlines(), start=1):
        header = re.match(r"^\s*\[([^\]]+)\]", line)
        if header:
            current = header.group(1).strip()
            continue
        if current == section and pattern.match(line):
            return i
    return None


def _check_type(kind: str, value: Any, where: str):
    def is_num(x):
        return isinstance(x, (int, float)) and not isinstance(x, bool)

    if kind == FLOAT:
        if not is_num(value):
            raise TypeError(f"expected a number, got {type(value).__name__}")
        return float(value)
    if kind == INT:
        if isinstance(value, bool) or not isinstance(value, int):
            raise TypeError(f"expected an integer, got {type(value).__name__}")
        return value
    if kind == BOOL:
        if not isinstance(value, bool):
            raise TypeError(f"expected true/false, got {type(value).__name__}")
        return value
    if kind == STR:
        if not isinstance(value, str):
            raise TypeError(f"expected a string, got {type(value).__name__}")
        return value
    if kind == FLOATS:
        if isinstance(value, dict):
            extra = set(value) - {"start", "stop", "num"}
            if extra or set(value) != {"start", "stop", "num"}:
                raise TypeError("grid table needs exactly start, stop, num")
            num = _check_type(INT, value["num"], where)
            if num < 1:
                raise ValueError("num must be >= 1")
            grid = np.linspace(_check_type(FLOAT, value["start"], where), _check_type(FLOAT, value["stop"], where), num)
            return [float(x) for x in np.round(grid, 12)]
        if not isinstance(value, list) or not all(is_num(x) for x in value):
            raise TypeError("expected a list of numbers or {start, stop, num}")
        return [float(x) for x in value]
    if kind == INTS:
        if not isinstance(value, list) or not all(isinstance(x, int) and not isinstance(x, bool) for x in value):
            raise TypeError("expected a list of integers")
        return list(value)
    if kind == STRS:
        if not isinstance(value, list) or not all(isinstance(x, str) for x in value):
            raise TypeError("expected a list of strings")
        return list(value)
    if kind == VECTOR:
        if isinstance(value, str):
            if value not in ("perpendicular", "parallel"):
                raise ValueError('expected "perpendicular", "parallel" or a 3-vector')
            return value
        if not isinstance(value, list) or len(value) != 3 or not all(is_num(x) for x in value):
            raise TypeError("expected a 3-component vector")
        if np.linalg.norm(value) == 0:
            raise ValueError("orientation vector must be nonzero")
        return [float(x) for x in value]
    raise AssertionError(kind)


def _read_table(text, table: dict, schema: dict, section: Optional[str]) -> dict:
    out = {}
    for key, value in table.items():
        line = _line_of(text, key, section)
        name = key if section is None else f"{section}.{key}"
        if key not in schema:
            raise ConfigError("unknown key", name, line)
        kind = schema[key]
        try:
            if key == "detuning_shift" and value == "bright":
                out[key] = value
            elif key == "feedback_target" and value == "last":
                out[key] = None
            else:
                out[key] = _check_type(kind, value, name)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc), name, line) from None
    return out


def parse_config(text: str) -> RunConfig:
    """Parse and fully validate a configuration document."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed document: {exc}") from None

    top = {k: v for k, v in doc.items() if not isinstance(v, dict)}
    sections = {k: v for k, v in doc.items() if isinstance(v, dict)}
    values = _read_table(text, top, TOP_KEYS, None)
    if "experiment" not in values:
        raise ConfigError("missing required key", "experiment")
    experiment = values["experiment"]
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}; choose from {', '.join(EXPERIMENTS)}", "experiment", _line_of(text, "experiment", None))

    model = dict(MODEL_DEFAULTS)
    params = dict(SECTION_DEFAULTS[experiment])
    for name, table in sections.items():
        if name == "model":
            model.update(_read_table(text, table, MODEL_KEYS, "model"))
        elif name in SECTION_KEYS:
            if name != experiment:
                raise ConfigError(f"section does not apply to experiment {experiment!r}", name, _line_of_section(text, name))
            params.update(_read_table(text, table, SECTION_KEYS[name], name))
        else:
            raise ConfigError("unknown section", name, _line_of_section(text, name))

    config = RunConfig(
        experiment=experiment,
        model=model,
        params=params,
        seed=values.get("seed", 0),
        output=values.get("output", "results"),
        plot=values.get("plot", True),
        workers=values.get("workers", 1),
    )
    validate(config, text)
    return config


def _line_of_section(text, name):
    for i, line in enumerate(text.splitlines(), start=1):
        if re.match(r"^\s*\[\s*%s\s*\]" % re.escape(name), line):
            return i
    return None


def validate(config: RunConfig, text: str = "") -> None:
    """Check physical invariants by constructing the model once."""
    m = config.model

    def fail(key, msg, section="model"):
        raise ConfigError(msg, f"{section}.{key}" if section else key, _line_of(text, key, section))

    positive = ("omega_cavity", "site_energy", "spacing", "dipole_moment", "gamma_r", "gamma_nr", "gamma_phi", "kappa", "gamma_p")
    for key in positive:
        if not np.isfinite(m[key]) or m[key] <= 0:
            fail(key, f"must be positive, got {m[key]}")
    if m["n_molecules"] < 1:
        fail("n_molecules", "must be >= 1")
    if m["omega_rabi"] < 0:
        fail("omega_rabi", "must be >= 0")
    if m["feedback_lambda"] < 0:
        fail("feedback_lambda", "must be >= 0")
    if not 0 <= m["detector_efficiency"] <= 1:
        fail("detector_efficiency", "must lie in [0, 1]")
    if m["feedback_target"] is not None and not 1 <= m["feedback_target"] <= m["n_molecules"]:
        fail("feedback_target", f"must lie in 1..{m['n_molecules']}")
    if config.seed < 0 or config.seed >= 2**64:
        fail("seed", "must be an unsigned 64-bit integer", None)
    if config.workers < 1:
        fail("workers", "must be >= 1", None)

    p = config.params
    section = config.experiment
    for key in ("grid", "lambda_grid", "eta_grid", "omega_grid", "n_values"):
        if key in p:
            arr = np.asarray(p[key], dtype=float)
            if arr.size == 0:
                fail(key, "must not be empty", section)
            steps = np.diff(arr)
            if arr.size > 1 and not (np.all(steps > 0) or np.all(steps < 0)):
                fail(key, "must be strictly monotone", section)
    for key in ("channels",):
        if key in p:
            for c in p[key]:
                try:
                    Channel.parse(c)
                except ValueError as exc:
                    fail(key, str(exc), section)
    if "n_values" in p and min(p["n_values"]) < 1:
        fail("n_values", "chain lengths must be >= 1", section)
    if "ensemble" in p and p["ensemble"] < 1:
        fail("ensemble", "must be >= 1", section)
    if "q" in p and p["q"] < 0:
        fail("q", "must be >= 0", section)
    if "eta_grid" in p and not all(0 <= e <= 1 for e in p["eta_grid"]):
        fail("eta_grid", "efficiencies must lie in [0, 1]", section)
    if "lambda_grid" in p and min(p["lambda_grid"]) < 0:
        fail("lambda_grid", "amplitudes must be >= 0", section)
    if section == "crossover" and p["n_min"] > p["n_max"]:
        fail("n_min", "must not exceed n_max", section)
    if "targets" in p and not all(1 <= t for t in p["targets"]):
        fail("targets", "targets must be >= 1", section)
    try:
        config.settings().model()
    except ValueError as exc:
        raise ConfigError(f"invalid model: {exc}", "model") from None
