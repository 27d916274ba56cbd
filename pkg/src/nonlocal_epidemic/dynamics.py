"""Time integration: the free-boundary system, the fixed-domain system and the ODE.

The free-boundary system is advanced by forward Euler on a fixed master grid
with real-valued front positions.  Each step

    u+ = u + dt [d (J*u) - d u - a u + c v]
    v+ = v + dt [-b v + G(u)]
    h+ = h + dt mu F_right(u),   g+ = g - dt mu F_left(u)

uses the fields at the old time for everything, including the fluxes.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from . import _stepper
from .errors import GridExhausted, InvalidParameter, MissingDiagnostics, StabilityViolation, StepError
from .growth import GrowthLaw, ModelParams
from .kernels import Kernel
from .quadgrid import ActiveWindow, FixedInterval, Grid, active_quadrature

log = logging.getLogger(__name__)

SHAPES = ("bump", "cosine")
CSV_HEADER = ["t", "g", "h", "mass_u", "mass_v", "u_center", "v_center", "max_u", "max_v"]


def fmt(x: float) -> str:
    return format(float(x), ".17g")


@dataclass(frozen=True)
class InitialData:
    shape: str = "bump"
    u_amp: float = 0.5
    v_amp: float = 0.5

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise InvalidParameter("initial.shape", f"expected one of {SHAPES}")
        for name in ("u_amp", "v_amp"):
            val = getattr(self, name)
            if not (val > 0 and math.isfinite(val)):
                raise InvalidParameter(f"initial.{name}", "must be positive")

    def profile(self, x, h0: float) -> tuple[np.ndarray, np.ndarray]:
        """(u0, v0) sampled at x; zero outside (-h0, h0)."""
        x = np.asarray(x, dtype=float)
        inside = np.abs(x) < h0
        if self.shape == "bump":
            base = 1.0 - (x / h0) ** 2
        else:
            base = np.cos(0.5 * math.pi * x / h0)
        base = np.where(inside, np.maximum(base, 0.0), 0.0)
        return self.u_amp * base, self.v_amp * base

    def sup_norms(self) -> tuple[float, float]:
        return self.u_amp, self.v_amp


@dataclass
class SimState:
    t: float
    g: float
    h: float
    u: np.ndarray
    v: np.ndarray
    grid: Grid

    @property
    def window(self) -> ActiveWindow:
        return ActiveWindow(self.g, self.h)

    @classmethod
    def initial(cls, init: InitialData, p: ModelParams, grid: Grid) -> "SimState":
        u, v = init.profile(grid.x, p.h0)
        return cls(0.0, -p.h0, p.h0, u, v, grid)


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-3
    t_end: float = 50.0
    record_every: float = 0.1
    L: float = 60.0
    n: int = 2401
    snapshot_times: tuple[float, ...] = ()

    def __post_init__(self):
        if not self.dt > 0:
            raise InvalidParameter("run.dt", "must be positive")
        if not self.t_end >= 0:
            raise InvalidParameter("run.t_end", "must be nonnegative")
        if not self.record_every > 0:
            raise InvalidParameter("run.record_every", "must be positive")

    @property
    def grid(self) -> Grid:
        return Grid(self.L, self.n)


@dataclass
class Trajectory:
    t: np.ndarray
    g: np.ndarray
    h: np.ndarray
    mass_u: np.ndarray
    mass_v: np.ndarray
    u_center: np.ndarray
    v_center: np.ndarray
    max_u: np.ndarray
    max_v: np.ndarray
    reaction: np.ndarray | None = None   # int (-a u + (c/b) G(u)) dx per record
    truncation: str = "t_end"
    large_clamps: int = 0
    snapshots: dict = field(default_factory=dict)   # t -> (x, u, v)
    final_state: SimState | None = None

    @property
    def gap(self) -> np.ndarray:
        return self.h - self.g

    def __len__(self):
        return len(self.t)

    def rows(self):
        cols = [getattr(self, name) for name in CSV_HEADER]
        return zip(*cols)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            for row in self.rows():
                w.writerow([fmt(x) for x in row])

    def write_snapshots(self, directory) -> list:
        from pathlib import Path
        paths = []
        for t, (x, u, v) in sorted(self.snapshots.items()):
            path = Path(directory) / f"snapshot_t{fmt(t)}.csv"
            with open(path, "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["x", "u", "v"])
                for row in zip(x, u, v):
                    w.writerow([fmt(val) for val in row])
            paths.append(path)
        return paths


def check_stability(p: ModelParams, dt: float) -> None:
    if not dt > 0:
        raise StabilityViolation(f"dt must be positive, got {dt}")
    if dt * (p.d + p.a) > 0.5 or dt * p.b > 0.5:
        raise StabilityViolation(
            f"dt={dt:g} violates dt*(d+a) <= 0.5 and dt*b <= 0.5 (d+a={p.d + p.a:g}, b={p.b:g})")


class _Stepper:
    """Binds the compiled kernel to one (grid, kernel, params, growth) setup."""

    def __init__(self, p: ModelParams, k: Kernel, g: GrowthLaw, grid: Grid, dt: float):
        check_stability(p, dt)
        self.p, self.k, self.g, self.grid, self.dt = p, k, g, grid, dt
        self.m, self.jk = grid.kernel_offsets(k)
        self.radius = k.truncation_radius
        self.x = grid.x
        n = grid.n
        self.wu = np.zeros(n)
        self.unew = np.zeros(n)
        self.vnew = np.zeros(n)

    def advance(self, u, v, g_pos, h_pos, nsteps):
        p = self.p
        return _stepper.advance(
            u, v, self.x, self.grid.dx, self.jk, self.m, self.k.family.code, self.k.sigma,
            self.radius, g_pos, h_pos, self.dt, nsteps, p.a, p.b, p.c, p.d, p.mu,
            self.g.family.code, self.g.alpha, self.grid.L, self.wu, self.unew, self.vnew)


def step_fb(s: SimState, p: ModelParams, k: Kernel, g: GrowthLaw, dt: float) -> SimState:
    """One forward-Euler step of the free-boundary system (returns a new state)."""
    stepper = _Stepper(p, k, g, s.grid, dt)
    u, v = s.u.copy(), s.v.copy()
    g_new, h_new, _, status, clamps = stepper.advance(u, v, s.g, s.h, 1)
    if status == _stepper.EXHAUSTED:
        raise GridExhausted(s.t + dt, s.g, s.h)
    if clamps:
        log.warning("clamped %d values below -1e-10 at t=%g", clamps, s.t)
    return SimState(s.t + dt, g_new, h_new, u, v, s.grid)


def _summary(s: SimState, p: ModelParams, g: GrowthLaw):
    w = s.window
    grid = s.grid
    react = -p.a * s.u + p.c / p.b * np.asarray(g(s.u))
    return (s.t, s.g, s.h,
            active_quadrature(s.u, w, grid), active_quadrature(s.v, w, grid),
            s.u[grid.center], s.v[grid.center], float(s.u.max()), float(s.v.max()),
            active_quadrature(react, w, grid))


def run_fb(init: InitialData, p: ModelParams, k: Kernel, g: GrowthLaw, cfg: SimConfig,
           early_exit: Callable[[dict], bool] | None = None) -> Trajectory:
    """Integrate the free-boundary system from the initial data to ``cfg.t_end``.

    Stops early when the window reaches the grid margin (truncation
    ``"spreading-escaped-grid"``) or when ``early_exit`` returns True for the
    latest record, passed as a dict keyed by the CSV column names (truncation
    ``"early-exit"``).
    """
    grid = cfg.grid
    if p.h0 + k.truncation_radius >= grid.L:
        raise InvalidParameter("grid.L", "initial range plus kernel radius does not fit the grid")
    stepper = _Stepper(p, k, g, grid, cfg.dt)
    s = SimState.initial(init, p, grid)
    u, v = s.u, s.v

    stride = max(1, int(round(cfg.record_every / cfg.dt)))
    total = int(round(cfg.t_end / cfg.dt))
    records = [_summary(s, p, g)]
    snaps = sorted(cfg.snapshot_times)
    snapshots = {}

    def take_snapshots(t):
        while snaps and snaps[0] <= t + 1e-12:
            snaps.pop(0)
            snapshots[t] = (grid.x.copy(), u.copy(), v.copy())

    take_snapshots(0.0)
    done = 0
    g_pos, h_pos = s.g, s.h
    truncation = "t_end"
    clamps = 0
    while done < total:
        nsteps = min(stride, total - done)
        try:
            g_pos, h_pos, taken, status, c = stepper.advance(u, v, g_pos, h_pos, nsteps)
        except Exception as exc:  # pragma: no cover - compiled kernel has no raising paths
            raise StepError(done * cfg.dt, exc) from exc
        clamps += c
        done += taken
        if taken:
            s = SimState(done * cfg.dt, g_pos, h_pos, u, v, grid)
            records.append(_summary(s, p, g))
            take_snapshots(s.t)
        if status == _stepper.EXHAUSTED:
            truncation = "spreading-escaped-grid"
            break
        if early_exit is not None:
            if early_exit(dict(zip(CSV_HEADER, records[-1]))):
                truncation = "early-exit"
                break
    if clamps:
        log.warning("%d values below -1e-10 were clamped to zero", clamps)
    cols = _columns(records)
    final = SimState(done * cfg.dt, g_pos, h_pos, u.copy(), v.copy(), grid)
    return Trajectory(**cols, truncation=truncation, large_clamps=clamps,
                      snapshots=snapshots, final_state=final)


def _columns(records) -> dict:
    arr = np.array(records, dtype=float)
    names = CSV_HEADER + ["reaction"]
    return {name: arr[:, i] for i, name in enumerate(names)}


@lru_cache(maxsize=16)
def _fixed_matrix(k: Kernel, l1: float, l2: float, n: int) -> np.ndarray:
    K = FixedInterval(l1, l2, n).kernel_matrix(k)
    K.setflags(write=False)
    return K


def fixed_rhs(w, z, l1, l2, p: ModelParams, k: Kernel, g: GrowthLaw):
    """Right-hand side of the fixed-domain system on n equispaced nodes of [l1, l2]."""
    K = _fixed_matrix(k, float(l1), float(l2), len(w))
    dw = p.d * (K @ w) - (p.d + p.a) * w + p.c * z
    dz = -p.b * z + np.asarray(g(w))
    return dw, dz


def step_fixed(w, z, l1, l2, p: ModelParams, k: Kernel, g: GrowthLaw, dt: float):
    """Euler step on the fixed interval; no boundary condition at l1, l2."""
    check_stability(p, dt)
    dw, dz = fixed_rhs(w, z, l1, l2, p, k, g)
    return w + dt * dw, z + dt * dz


def march_fixed(w, z, l1, l2, p, k, g, dt, t_end, monitor: Callable | None = None):
    """Repeat :func:`step_fixed` up to ``t_end``; ``monitor(w_old, z_old, w, z)`` sees every step."""
    check_stability(p, dt)
    for _ in range(int(round(t_end / dt))):
        dw, dz = fixed_rhs(w, z, l1, l2, p, k, g)
        w_new, z_new = w + dt * dw, z + dt * dz
        if monitor is not None:
            monitor(w, z, w_new, z_new)
        w, z = w_new, z_new
    return w, z


def solve_ode(p: ModelParams, g: GrowthLaw, u0: float, v0: float, t_end: float, dt: float):
    """Classical RK4 for the spatially homogeneous system. Returns (t, u, v) arrays."""
    if u0 < 0 or v0 < 0:
        raise InvalidParameter("ode.u0/v0", "initial values must be nonnegative")
    if not dt > 0:
        raise InvalidParameter("ode.dt", "must be positive")
    nsteps = max(1, int(math.ceil(t_end / dt - 1e-9))) if t_end > 0 else 0
    h = t_end / nsteps if nsteps else dt

    def f(y):
        return np.array([-p.a * y[0] + p.c * y[1], -p.b * y[1] + g(y[0])])

    out = np.empty((nsteps + 1, 3))
    y = np.array([u0, v0], dtype=float)
    out[0] = (0.0, *y)
    for i in range(1, nsteps + 1):
        k1 = f(y)
        k2 = f(y + 0.5 * h * k1)
        k3 = f(y + 0.5 * h * k2)
        k4 = f(y + h * k3)
        y = y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        out[i] = (i * h, *y)
    return out[:, 0], out[:, 1], out[:, 2]


def mass_balance_residual(traj: Trajectory, p: ModelParams, g: GrowthLaw | None = None) -> np.ndarray:
    """Per-record defect of the integrated mass identity

        int (u + (c/b) v) + (d/mu)(h - g) - int_0^t int (-a u + (c/b) G(u))  = const,

    with the time integral taken by the trapezoid rule over the records.
    """
    for name in ("t", "mass_u", "mass_v", "g", "h"):
        if getattr(traj, name, None) is None:
            raise MissingDiagnostics(f"trajectory lacks {name}")
    if traj.reaction is None:
        raise MissingDiagnostics("trajectory lacks the reaction integral")
    mass = traj.mass_u + p.c / p.b * traj.mass_v
    front = p.d / p.mu * (traj.h - traj.g)
    steps = np.diff(traj.t) * 0.5 * (traj.reaction[1:] + traj.reaction[:-1])
    source = np.concatenate([[0.0], np.cumsum(steps)])
    return mass - mass[0] + front - front[0] - source
