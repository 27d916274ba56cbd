"""Infection-rate laws G, model constants and the derived threshold scalars."""
from __future__ import annotations

import math
from dataclasses import dataclass, fields
from enum import Enum

import numpy as np
from scipy import optimize

from .errors import InvalidParameter, NoPositiveEquilibrium
from .report import ValidationReport

EQUILIBRIUM_XTOL = 1e-15   # well inside the required 1e-12; cheap, and needed for the rounding fix-up
BRACKET_LO = 1e-14


class GrowthFamily(str, Enum):
    HILL = "hill"                      # alpha z / (1 + z)
    SATURATING_EXP = "saturating_exp"  # alpha (1 - exp(-z))

    @property
    def code(self) -> int:
        return 0 if self is GrowthFamily.HILL else 1


@dataclass(frozen=True)
class GrowthLaw:
    family: GrowthFamily
    alpha: float

    def __post_init__(self):
        object.__setattr__(self, "family", GrowthFamily(self.family))
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise InvalidParameter("growth.alpha", f"must be positive and finite, got {self.alpha!r}")

    @classmethod
    def from_config(cls, cfg: dict) -> "GrowthLaw":
        try:
            family = GrowthFamily(cfg["family"])
        except (KeyError, ValueError):
            raise InvalidParameter("growth.family", f"expected one of {[f.value for f in GrowthFamily]}")
        try:
            alpha = float(cfg["alpha"])
        except (KeyError, TypeError, ValueError):
            raise InvalidParameter("growth.alpha", "must be a number")
        return cls(family, alpha)

    def to_config(self) -> dict:
        return {"family": self.family.value, "alpha": self.alpha}

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        if self.family is GrowthFamily.HILL:
            out = self.alpha * z / (1.0 + z)
        else:
            out = -self.alpha * np.expm1(-z)
        return out if out.ndim else float(out)

    def derivative(self, z):
        z = np.asarray(z, dtype=float)
        if self.family is GrowthFamily.HILL:
            out = self.alpha / (1.0 + z) ** 2
        else:
            out = self.alpha * np.exp(-z)
        return out if out.ndim else float(out)

    @property
    def slope_at_zero(self) -> float:
        return self.alpha


@dataclass(frozen=True)
class ModelParams:
    a: float
    b: float
    c: float
    d: float
    mu: float
    h0: float

    def __post_init__(self):
        for f in fields(self):
            val = getattr(self, f.name)
            if not isinstance(val, (int, float)) or not math.isfinite(val) or val <= 0:
                raise InvalidParameter(f"params.{f.name}", f"must be a positive finite number, got {val!r}")

    @classmethod
    def from_config(cls, cfg: dict) -> "ModelParams":
        kwargs = {}
        for f in fields(cls):
            if f.name not in cfg:
                raise InvalidParameter(f"params.{f.name}", "missing")
            try:
                kwargs[f.name] = float(cfg[f.name])
            except (TypeError, ValueError):
                raise InvalidParameter(f"params.{f.name}", "must be a number")
        return cls(**kwargs)

    def to_config(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def replace(self, **changes) -> "ModelParams":
        return ModelParams(**{**self.to_config(), **changes})


@dataclass(frozen=True)
class DerivedScalars:
    R0: float
    theta: float
    K1: float | None
    K2: float | None
    A_bound: float
    B_bound: float


def r0(p: ModelParams, g: GrowthLaw) -> float:
    return p.c * g.slope_at_zero / (p.a * p.b)


def theta(p: ModelParams, g: GrowthLaw) -> float:
    """Effective linear growth rate c G'(0)/b - a, equal to a (R0 - 1)."""
    return p.c * g.slope_at_zero / p.b - p.a


def equilibrium(p: ModelParams, g: GrowthLaw) -> tuple[float, float]:
    """Endemic state (K1, K2): G(K1) = (ab/c) K1, K2 = G(K1)/b.

    G(z)/z is strictly decreasing, so the root of G(z)/z - ab/c is unique
    and bisection on a sign-changing bracket finds it.
    """
    target = p.a * p.b / p.c
    def f(z):
        return g(z) / z - target

    lo = BRACKET_LO
    hi = max(10.0 * p.c * g.slope_at_zero * p.c / (p.a * p.b), 10.0)
    if f(lo) <= 0:
        raise NoPositiveEquilibrium(f"R0 = {r0(p, g):.6g} <= 1: no positive equilibrium")
    for _ in range(200):
        if f(hi) < 0:
            break
        hi *= 2.0
    else:  # pragma: no cover - G(z)/z -> limit < ab/c rules this out
        raise NoPositiveEquilibrium("could not bracket the equilibrium")
    k1 = optimize.bisect(f, lo, hi, xtol=EQUILIBRIUM_XTOL, rtol=4 * np.finfo(float).eps, maxiter=500)
    # Settle on the side where G(K1)/K1 <= ab/c, so G(K1)/b <= (a/c) K1 holds
    # exactly in floating point and B <= (a/c) A is never broken by rounding.
    for _ in range(64):
        if g(k1) / p.b <= p.a / p.c * k1:
            break
        k1 = float(np.nextafter(k1, np.inf))
    return k1, g(k1) / p.b


def derived_scalars(p: ModelParams, g: GrowthLaw, u0_max: float, v0_max: float) -> DerivedScalars:
    R0 = r0(p, g)
    try:
        K1, K2 = equilibrium(p, g)
    except NoPositiveEquilibrium:
        K1 = K2 = None
    A = max(K1 or 0.0, u0_max, p.c / p.a * v0_max)
    B = max(v0_max, g(A) / p.b)
    return DerivedScalars(R0, theta(p, g), K1, K2, A, B)


def validate_growth(g, p: ModelParams, z_max: float, npts: int = 1000) -> ValidationReport:
    """Structural checks on G over a 1000-point grid in (0, z_max]."""
    if not z_max > 0:
        raise InvalidParameter("z_max", "must be positive")
    rep = ValidationReport(f"growth {getattr(g, 'family', g)!s}")
    z = np.linspace(z_max / npts, z_max, npts)
    G = np.asarray(g(z), dtype=float)
    dG = np.asarray(g.derivative(z), dtype=float)
    g0 = float(g(0.0))
    rep.add("G(0) = 0", g0 == 0.0, f"G(0)={g0:.3g}")
    rep.add("G' > 0", bool(np.all(dG > 0)))
    ratio = G / z
    rep.add("G(z)/z decreasing", bool(np.all(np.diff(ratio) <= 0)))
    lim = float(ratio[-1])
    rep.add("G(z_max)/z_max < ab/c", lim < p.a * p.b / p.c,
            f"{lim:.6g} vs {p.a * p.b / p.c:.6g}")
    return rep
