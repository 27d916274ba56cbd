"""JSON run configuration: loading, validation and canonical hashing."""
from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .classify import ClassifyConfig
from .dynamics import InitialData, SimConfig, check_stability
from .errors import InvalidParameter, ModelError, StabilityViolation
from .growth import GrowthLaw, ModelParams
from .kernels import Kernel


class ConfigError(ModelError):
    """The file could not be read or parsed; carries the JSON position when known."""

    def __init__(self, message, line=None, column=None):
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)
        self.line = line
        self.column = column


DEFAULTS = {
    "kernel": {"family": "compact_quadratic", "sigma": 1.0},
    "growth": {"family": "hill", "alpha": 2.0},
    "params": {"a": 1.0, "b": 1.0, "c": 1.0, "d": 2.0, "mu": 1.0, "h0": 1.0},
    "initial": {"shape": "bump", "u_amp": 0.5, "v_amp": 0.5},
    "grid": {"L": 60.0, "n": 2401},
    "run": {"dt": 1e-3, "t_end": 50.0, "record_every": 0.1, "snapshot_times": [], "early_exit": False},
    "classify": {"L_spread": None, "eps_vanish": 1e-5, "hold_time": None, "t_max": 500.0,
                 "bound_slack": 0.01},
    "eigen": {"n": 201, "l1": 0.0, "l2": 1.0, "lengths": [], "tol": 1e-8},
    "mustar": {"tol": 0.01, "mu_lo": 1e-3, "mu_hi": 1.0},
    "sweep": {"alpha": [], "h0": [], "mu": []},
    "ode": {"u0": 0.01, "v0": 0.01, "t_end": 200.0, "dt": 0.01},
    "workers": 1,
}


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        where = f"{path}{key}"
        if key not in base:
            raise InvalidParameter(where, "unknown field")
        if isinstance(base[key], dict):
            if not isinstance(val, dict):
                raise InvalidParameter(where, "must be an object")
            out[key] = _merge(base[key], val, where + ".")
        else:
            out[key] = val
    return out


def _number(section: dict, key: str, where: str, positive=True, allow_none=False):
    val = section.get(key)
    if val is None and allow_none:
        return None
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise InvalidParameter(f"{where}.{key}", "must be a number")
    if positive and not val > 0:
        raise InvalidParameter(f"{where}.{key}", f"must be positive, got {val!r}")
    return float(val)


def _numbers(section: dict, key: str, where: str) -> list[float]:
    vals = section.get(key)
    if not isinstance(vals, list):
        raise InvalidParameter(f"{where}.{key}", "must be a list of numbers")
    for i, v in enumerate(vals):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not v > 0:
            raise InvalidParameter(f"{where}.{key}[{i}]", "must be a positive number")
    return [float(v) for v in vals]


@dataclass(frozen=True)
class RunConfig:
    raw: dict
    kernel: Kernel
    growth: GrowthLaw
    params: ModelParams
    initial: InitialData
    sim: SimConfig
    classify: ClassifyConfig
    eigen: dict = field(default_factory=dict)
    mustar: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    ode: dict = field(default_factory=dict)
    workers: int = 1

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise InvalidParameter("<root>", "config must be a JSON object")
        raw = _merge(DEFAULTS, data)
        kernel = Kernel.from_config(raw["kernel"])
        growth = GrowthLaw.from_config(raw["growth"])
        params = ModelParams.from_config(raw["params"])
        ini = raw["initial"]
        initial = InitialData(ini["shape"], _number(ini, "u_amp", "initial"), _number(ini, "v_amp", "initial"))
        grid, run = raw["grid"], raw["run"]
        n = grid.get("n")
        if isinstance(n, bool) or not isinstance(n, int):
            raise InvalidParameter("grid.n", "must be an integer")
        snaps = run.get("snapshot_times")
        if not isinstance(snaps, list) or any(isinstance(s, bool) or not isinstance(s, (int, float)) or s < 0
                                               for s in snaps):
            raise InvalidParameter("run.snapshot_times", "must be a list of nonnegative numbers")
        if not isinstance(run.get("early_exit"), bool):
            raise InvalidParameter("run.early_exit", "must be true or false")
        sim = SimConfig(dt=_number(run, "dt", "run"), t_end=_number(run, "t_end", "run", positive=False),
                        record_every=_number(run, "record_every", "run"),
                        L=_number(grid, "L", "grid"), n=n, snapshot_times=tuple(float(s) for s in snaps))
        if sim.t_end < 0:
            raise InvalidParameter("run.t_end", "must be nonnegative")
        g = sim.grid
        if params.h0 + kernel.truncation_radius >= g.L:
            raise InvalidParameter("grid.L", "must exceed h0 plus the kernel truncation radius")
        if g.dx >= kernel.sigma:
            raise InvalidParameter("grid.n", f"grid spacing {g.dx:.4g} does not resolve kernel.sigma")
        try:
            check_stability(params, sim.dt)
        except StabilityViolation as exc:
            raise InvalidParameter("run.dt", str(exc))
        eig = raw["eigen"]
        if isinstance(eig["n"], bool) or not isinstance(eig["n"], int) or eig["n"] < 16:
            raise InvalidParameter("eigen.n", "must be an integer >= 16")
        l1 = _number(eig, "l1", "eigen", positive=False)
        l2 = _number(eig, "l2", "eigen", positive=False)
        if not l1 < l2:
            raise InvalidParameter("eigen.l2", "must exceed eigen.l1")
        eigen = {"n": eig["n"], "l1": l1, "l2": l2, "lengths": _numbers(eig, "lengths", "eigen"),
                 "tol": _number(eig, "tol", "eigen")}
        cl = raw["classify"]
        classify = ClassifyConfig(
            L_spread=_number(cl, "L_spread", "classify", allow_none=True),
            eps_vanish=_number(cl, "eps_vanish", "classify"),
            hold_time=_number(cl, "hold_time", "classify", allow_none=True),
            t_max=_number(cl, "t_max", "classify"),
            bound_slack=_number(cl, "bound_slack", "classify", positive=False),
            eigen_n=eig["n"],
        )
        ms = raw["mustar"]
        mustar = {k: _number(ms, k, "mustar") for k in ("tol", "mu_lo", "mu_hi")}
        if not mustar["mu_lo"] < mustar["mu_hi"]:
            raise InvalidParameter("mustar.mu_hi", "must exceed mustar.mu_lo")
        sweep = {k: _numbers(raw["sweep"], k, "sweep") for k in ("alpha", "h0", "mu")}
        od = raw["ode"]
        ode = {"u0": _number(od, "u0", "ode", positive=False), "v0": _number(od, "v0", "ode", positive=False),
               "t_end": _number(od, "t_end", "ode", positive=False), "dt": _number(od, "dt", "ode")}
        if ode["u0"] < 0 or ode["v0"] < 0:
            raise InvalidParameter("ode.u0", "initial values must be nonnegative")
        workers = raw["workers"]
        if isinstance(workers, bool) or not isinstance(workers, int) or workers < 1:
            raise InvalidParameter("workers", "must be a positive integer")
        return cls(raw, kernel, growth, params, initial, sim, classify, eigen, mustar, sweep, ode, workers)

    def canonical_json(self) -> str:
        return json.dumps(self.raw, sort_keys=True, separators=(",", ":"), ensure_ascii=True)

    def config_hash(self, exclude_workers: bool = True) -> str:
        """SHA-256 of the canonicalized config; the worker count does not change results."""
        raw = dict(self.raw)
        if exclude_workers:
            raw.pop("workers", None)
        text = json.dumps(raw, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
        return hashlib.sha256(text.encode("utf-8")).hexdigest()


def parse_config_text(text: str) -> RunConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno)
    return RunConfig.from_dict(data)


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}")
    return parse_config_text(text)


def default_config_text() -> str:
    return resources.files("nonlocal_epidemic").joinpath("data/default.json").read_text(encoding="utf-8")
