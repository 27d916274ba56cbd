"""Dispersal kernels J and their tail masses T(r) = int_r^inf J(s) ds.

Three closed families are supported so that the tail masses entering the
front-speed laws are exact:

* ``gaussian``          J(x) = exp(-x^2 / 2 s^2) / (s sqrt(2 pi))
* ``laplace``           J(x) = exp(-|x| / s) / (2 s)
* ``compact_quadratic`` J(x) = 3/(4 s) (1 - (x/s)^2) on [-s, s]   (Epanechnikov)
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import integrate, special

from .errors import InvalidParameter
from .report import ValidationReport

# mass allowed outside the truncation window [-R, R]
TRUNCATION_MASS = 1e-10


class KernelFamily(str, Enum):
    GAUSSIAN = "gaussian"
    LAPLACE = "laplace"
    COMPACT_QUADRATIC = "compact_quadratic"

    @property
    def code(self) -> int:
        # integer tag used by the compiled stepper
        return _FAMILY_CODES[self]


_FAMILY_CODES = {
    KernelFamily.GAUSSIAN: 0,
    KernelFamily.LAPLACE: 1,
    KernelFamily.COMPACT_QUADRATIC: 2,
}


@dataclass(frozen=True)
class Kernel:
    family: KernelFamily
    sigma: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "family", KernelFamily(self.family))
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise InvalidParameter("kernel.sigma", f"must be positive and finite, got {self.sigma!r}")

    @classmethod
    def from_config(cls, cfg: dict) -> "Kernel":
        try:
            family = KernelFamily(cfg["family"])
        except (KeyError, ValueError):
            raise InvalidParameter("kernel.family", f"expected one of {[f.value for f in KernelFamily]}")
        try:
            sigma = float(cfg.get("sigma", 1.0))
        except (TypeError, ValueError):
            raise InvalidParameter("kernel.sigma", "must be a number")
        return cls(family, sigma)

    def to_config(self) -> dict:
        return {"family": self.family.value, "sigma": self.sigma}

    @property
    def support_radius(self) -> float:
        if self.family is KernelFamily.COMPACT_QUADRATIC:
            return self.sigma
        return math.inf

    @property
    def truncation_radius(self) -> float:
        """Radius R with int_{-R}^{R} J >= 1 - 1e-10 (the support radius when finite)."""
        if self.family is KernelFamily.COMPACT_QUADRATIC:
            return self.sigma
        if self.family is KernelFamily.GAUSSIAN:
            return float(self.sigma * math.sqrt(2.0) * special.erfcinv(TRUNCATION_MASS))
        return self.sigma * math.log(1.0 / TRUNCATION_MASS)

    def density(self, x):
        x = np.asarray(x, dtype=float)
        s = self.sigma
        if self.family is KernelFamily.GAUSSIAN:
            out = np.exp(-0.5 * (x / s) ** 2) / (s * math.sqrt(2.0 * math.pi))
        elif self.family is KernelFamily.LAPLACE:
            out = np.exp(-np.abs(x) / s) / (2.0 * s)
        else:
            y = x / s
            out = np.where(np.abs(y) <= 1.0, 0.75 / s * (1.0 - y * y), 0.0)
        return out if out.ndim else float(out)

    def tail(self, r):
        r = np.asarray(r, dtype=float)
        s = self.sigma
        if self.family is KernelFamily.GAUSSIAN:
            out = 0.5 * special.erfc(r / (s * math.sqrt(2.0)))
        elif self.family is KernelFamily.LAPLACE:
            e = 0.5 * np.exp(-np.abs(r) / s)
            out = np.where(r >= 0, e, 1.0 - e)
        else:
            y = np.clip(r / s, -1.0, 1.0)
            out = 0.5 - 0.75 * y + 0.25 * y ** 3
        return out if out.ndim else float(out)


def kernel_density(k: Kernel, x):
    """J(x); exactly zero outside a finite support."""
    return k.density(x)


def kernel_tail(k: Kernel, r):
    """Tail mass int_r^inf J(s) ds, in closed form for every built-in family."""
    return k.tail(r)


def validate_kernel(k, samples: int = 64) -> ValidationReport:
    """Check the kernel against the dispersal assumptions.

    ``k`` only needs ``density``, ``tail`` and ``truncation_radius``, so test
    fixtures can pass deliberately broken kernels.
    """
    if samples < 16:
        raise InvalidParameter("samples", "must be >= 16")
    rep = ValidationReport(f"kernel {getattr(k, 'family', k)!s}")
    R = float(k.truncation_radius)
    xs = np.linspace(-1.5 * R, 1.5 * R, 2 * samples + 1)
    dens = np.asarray(k.density(xs), dtype=float)

    j0 = float(k.density(0.0))
    rep.add("J(0) > 0", j0 > 0, f"J(0)={j0:.6g}")
    rep.add("nonnegative", bool(np.all(dens >= 0)))
    asym = float(np.max(np.abs(dens - np.asarray(k.density(-xs)))))
    rep.add("symmetric", asym <= 1e-14 * max(1.0, j0), f"max |J(x)-J(-x)|={asym:.3g}")

    # the compact family has a kink at +-R; splitting there keeps quad accurate
    pieces = [(-R, 0.0), (0.0, R)]
    mass = sum(integrate.quad(k.density, lo, hi, epsabs=1e-13, epsrel=1e-13, limit=200)[0]
               for lo, hi in pieces)
    rep.add("unit mass", abs(mass - 1.0) <= 1e-8, f"int J = {mass:.12f}")

    rs = np.linspace(0.0, 1.5 * R, samples + 1)
    tails = np.asarray(k.tail(rs), dtype=float)
    rep.add("tail nonincreasing", bool(np.all(np.diff(tails) <= 1e-15)))
    rep.add("tail(0) = 1/2", abs(float(k.tail(0.0)) - 0.5) <= 1e-12)
    rep.add("tail vanishes", float(k.tail(R)) <= 1.01 * TRUNCATION_MASS,
            f"tail(R={R:.4g})={float(k.tail(R)):.3g}")
    return rep
