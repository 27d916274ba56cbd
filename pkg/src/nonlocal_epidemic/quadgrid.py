"""Master grid, trapezoid quadrature on the moving window, convolution and front fluxes.

Fields are plain float arrays of length ``grid.n``, zero outside the active
window.  The window ends g, h are arbitrary reals; the nodes strictly inside
(g, h) are active.  Integrals over [g, h] use the composite trapezoid rule on
the piecewise-linear interpolant that vanishes at g and h, which gives the
node weights

    dx                         for interior active nodes
    dx/2 + (x_lo - g)/2        for the first active node
    dx/2 + (h - x_hi)/2        for the last active node
    (h - g)/2                  when a single node is active.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np

from .errors import InvalidParameter, NegativeField, WindowOutOfGrid
from .kernels import Kernel


@dataclass(frozen=True)
class Grid:
    L: float
    n: int

    def __post_init__(self):
        if not (self.L > 0):
            raise InvalidParameter("grid.L", "must be positive")
        if self.n < 3 or self.n % 2 == 0:
            raise InvalidParameter("grid.n", f"must be odd and >= 3, got {self.n}")

    @property
    def dx(self) -> float:
        return 2.0 * self.L / (self.n - 1)

    @cached_property
    def x(self) -> np.ndarray:
        # built from the center so that x[i] == -x[n-1-i] exactly
        x = self.dx * (np.arange(self.n) - self.center)
        x[0], x[-1] = -self.L, self.L
        return x

    @property
    def center(self) -> int:
        return (self.n - 1) // 2

    def kernel_offsets(self, k: Kernel) -> tuple[int, np.ndarray]:
        """Half-width m (in cells) of the truncated kernel and J at offsets -m..m.

        The stencil is rescaled so that dx * sum(J) = 1 exactly.  Raw samples
        over- or undershoot unit mass by O(dx^2) (more near a cusp), and an
        overshoot would let the discrete convolution create mass.
        """
        m = int(math.floor(k.truncation_radius / self.dx + 1e-9))
        m = min(m, self.n - 1)
        jk = np.asarray(k.density(self.dx * np.arange(-m, m + 1)), dtype=float)
        return m, jk / (self.dx * math.fsum(jk))


@dataclass(frozen=True)
class ActiveWindow:
    g: float
    h: float

    def __post_init__(self):
        if not self.g < self.h:
            raise InvalidParameter("window", f"need g < h, got [{self.g}, {self.h}]")

    @property
    def length(self) -> float:
        return self.h - self.g


class Side(str, Enum):
    LEFT = "left"
    RIGHT = "right"


def _check_window(w: ActiveWindow, grid: Grid) -> None:
    if w.g < -grid.L or w.h > grid.L:
        raise WindowOutOfGrid(f"window [{w.g}, {w.h}] not inside [-{grid.L}, {grid.L}]")


def active_range(w: ActiveWindow, grid: Grid) -> tuple[int, int]:
    """Inclusive index range (lo, hi) of nodes strictly inside (g, h); lo > hi if none."""
    lo = int(np.searchsorted(grid.x, w.g, side="right"))
    hi = int(np.searchsorted(grid.x, w.h, side="left")) - 1
    return lo, hi


def trapezoid_weights(w: ActiveWindow, grid: Grid) -> tuple[int, int, np.ndarray]:
    _check_window(w, grid)
    lo, hi = active_range(w, grid)
    if lo > hi:
        return lo, hi, np.zeros(0)
    x, dx = grid.x, grid.dx
    wts = np.full(hi - lo + 1, dx)
    if lo == hi:
        wts[0] = 0.5 * (w.h - w.g)
    else:
        wts[0] = 0.5 * dx + 0.5 * (x[lo] - w.g)
        wts[-1] = 0.5 * dx + 0.5 * (w.h - x[hi])
    return lo, hi, wts


def active_quadrature(f, w: ActiveWindow, grid: Grid) -> float:
    lo, hi, wts = trapezoid_weights(w, grid)
    if lo > hi:
        return 0.0
    return float(np.dot(wts, np.asarray(f)[lo:hi + 1]))


def nonlocal_convolve(f, w: ActiveWindow, k: Kernel, grid: Grid) -> np.ndarray:
    """x -> int_g^h J(x - y) f(y) dy at every active node, zero elsewhere."""
    lo, hi, wts = trapezoid_weights(w, grid)
    out = np.zeros(grid.n)
    if lo > hi:
        return out
    m, jk = grid.kernel_offsets(k)
    seg = wts * np.asarray(f, dtype=float)[lo:hi + 1]
    full = np.convolve(seg, jk)
    out[lo:hi + 1] = full[m:m + seg.size]
    return out


def boundary_flux(f, w: ActiveWindow, k: Kernel, grid: Grid, side: Side | str) -> float:
    """Kernel mass of f leaving through one end: int_g^h f(x) T(h - x) dx (right)
    or int_g^h f(x) T(x - g) dx (left).  The expansion coefficient is not applied."""
    side = Side(side)
    lo, hi, wts = trapezoid_weights(w, grid)
    if lo > hi:
        return 0.0
    vals = np.asarray(f, dtype=float)[lo:hi + 1]
    if np.any(vals < -1e-12):
        raise NegativeField(f"min active value {vals.min():.3g}")
    xs = grid.x[lo:hi + 1]
    dist = (w.h - xs) if side is Side.RIGHT else (xs - w.g)
    return float(np.dot(wts * vals, k.tail(dist)))


@dataclass(frozen=True)
class FixedInterval:
    """n equispaced nodes on [l1, l2] (endpoints included) with trapezoid weights.

    Used by the fixed-domain problem and the eigenvalue problem, which carry no
    boundary condition at l1, l2.
    """

    l1: float
    l2: float
    n: int

    def __post_init__(self):
        if not self.l1 < self.l2:
            raise InvalidParameter("interval", f"need l1 < l2, got ({self.l1}, {self.l2})")
        if self.n < 2:
            raise InvalidParameter("n", "need at least 2 nodes")

    @property
    def dx(self) -> float:
        return (self.l2 - self.l1) / (self.n - 1)

    @cached_property
    def x(self) -> np.ndarray:
        return np.linspace(self.l1, self.l2, self.n)

    @cached_property
    def weights(self) -> np.ndarray:
        wts = np.full(self.n, self.dx)
        wts[0] = wts[-1] = 0.5 * self.dx
        return wts

    def kernel_matrix(self, k: Kernel) -> np.ndarray:
        """K[i, j] = J(x_i - x_j) w_j, so (K @ f)_i approximates int J(x_i - y) f(y) dy."""
        offs = self.dx * np.arange(-(self.n - 1), self.n)
        jvals = np.asarray(k.density(offs), dtype=float)
        idx = np.arange(self.n)
        # Toeplitz in i - j, then scale columns by the weights
        return jvals[(idx[:, None] - idx[None, :]) + self.n - 1] * self.weights[None, :]
