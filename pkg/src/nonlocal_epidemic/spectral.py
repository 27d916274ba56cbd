"""Principal eigenvalue of the nonlocal operator on an interval, the critical
length where it changes sign, and the positive steady state of the
fixed-domain problem.

The discrete operator is

    (M phi)_i = d sum_j J(x_i - x_j) w_j phi_j - d phi_i + theta phi_i

on n equispaced nodes of [l1, l2] with trapezoid weights w.  Adding
(d - theta + 1) I makes it entrywise nonnegative with a positive diagonal,
so its top eigenvalue is the Perron root with a positive eigenvector.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg, optimize

from .errors import InvalidParameter, NoConvergence, RegimeError, SandwichMismatch
from .growth import GrowthLaw, ModelParams, equilibrium, theta
from .kernels import Kernel
from .quadgrid import ActiveWindow, FixedInterval, Grid, trapezoid_weights

MAX_ITER = 100_000
RAYLEIGH_TOL = 1e-12
RESIDUAL_TOL = 1e-10   # on sup |M phi - lambda phi| with max phi = 1


@dataclass
class SpectralResult:
    lambda_p: float
    phi: np.ndarray          # principal eigenfunction, max = 1
    x: np.ndarray
    l1: float
    l2: float
    n: int
    iterations: int
    residual: float          # sup |M phi - lambda_p phi|


@dataclass
class SteadyState:
    W: np.ndarray
    Z: np.ndarray
    x: np.ndarray
    lambda_p: float
    sandwich_gap: float = 0.0
    residual: float = 0.0


def operator_matrix(k: Kernel, p: ModelParams, g: GrowthLaw, l1: float, l2: float, n: int) -> np.ndarray:
    iv = FixedInterval(l1, l2, n)
    M = p.d * iv.kernel_matrix(k)
    M[np.diag_indices(n)] += theta(p, g) - p.d
    return M


def lambda_p(k: Kernel, p: ModelParams, g: GrowthLaw, l1: float, l2: float, n: int = 201,
             max_iter: int = MAX_ITER) -> SpectralResult:
    """Principal eigenpair of the discretized operator.

    Power iteration is run on the resolvent (s I - S)^-1 of the Perron-shifted
    matrix S, with s just above the row-sum bound on its Perron root.  The
    resolvent is itself entrywise nonnegative and has the same top
    eigenvector, so the iteration still lands on the principal pair, but the
    convergence ratio no longer degrades on long intervals where the leading
    eigenvalues crowd together.  Iterating in the symmetric form
    W^1/2 J W^1/2 makes the Rayleigh quotient quadratically accurate.

    Stops once the Rayleigh increment is below 1e-12 and the eigenpair
    residual is below 1e-10; the quotient settles long before the vector does.
    """
    if not l1 < l2:
        raise InvalidParameter("interval", f"need l1 < l2, got ({l1}, {l2})")
    if n < 16:
        raise InvalidParameter("n", "eigen grid needs at least 16 nodes")
    iv = FixedInterval(l1, l2, n)
    th = theta(p, g)
    shift = p.d - th + 1.0
    sw = np.sqrt(iv.weights)
    offs = iv.dx * np.arange(-(n - 1), n)
    jvals = np.asarray(k.density(offs), dtype=float)
    idx = np.arange(n)
    S = p.d * (sw[:, None] * jvals[idx[:, None] - idx[None, :] + n - 1] * sw[None, :])
    S[np.diag_indices(n)] += 1.0  # = M + shift I in symmetric form

    # Perron root <= max row sum of the (similar) nonsymmetric matrix
    row_bound = 1.0 + p.d * float(np.max(iv.kernel_matrix(k).sum(axis=1)))
    s = row_bound * (1.0 + 1e-6) + 1e-12
    factor = linalg.cho_factor(s * np.eye(n) - S, lower=False, check_finite=False)

    psi = sw / np.linalg.norm(sw)
    rho = float(psi @ S @ psi)
    inc = math.inf
    for it in range(1, max_iter + 1):
        psi = linalg.cho_solve(factor, psi, check_finite=False)
        psi /= np.linalg.norm(psi)
        Spsi = S @ psi
        new = float(psi @ Spsi)
        inc = abs(new - rho)
        rho = new
        if inc < RAYLEIGH_TOL:
            # M phi - lambda phi = W^-1/2 (S psi - rho psi) for phi = W^-1/2 psi
            res = np.max(np.abs(Spsi - rho * psi) / sw) / np.max(np.abs(psi) / sw)
            if res < RESIDUAL_TOL:
                break
    else:
        raise NoConvergence(f"power iteration stalled after {max_iter} iterations", inc)

    phi = psi / sw
    phi *= np.sign(phi[np.argmax(np.abs(phi))])
    phi /= phi.max()
    lam = rho - shift
    M = operator_matrix(k, p, g, l1, l2, n)
    residual = float(np.max(np.abs(M @ phi - lam * phi)))
    return SpectralResult(lam, phi, iv.x, l1, l2, n, it, residual)


def window_eigenvalue(k: Kernel, p: ModelParams, g: GrowthLaw, grid: Grid, window: ActiveWindow) -> float:
    """Principal eigenvalue of d (J * .) - d + theta on the active nodes of a
    free-boundary window, discretized exactly as the simulation does it
    (master-grid stencil, partial end cells, zero at the fronts).

    Its sign is the discrete counterpart of comparing h - g with l*: on a
    coarse master grid the two differ by a fraction of a cell.
    """
    th = theta(p, g)
    lo, hi, w = trapezoid_weights(window, grid)
    if lo > hi:
        return th - p.d
    m, jk = grid.kernel_offsets(k)
    idx = np.arange(lo, hi + 1)
    off = idx[:, None] - idx[None, :]
    J = np.where(np.abs(off) <= m, jk[np.clip(off + m, 0, 2 * m)], 0.0)
    sw = np.sqrt(w)
    S = p.d * (sw[:, None] * J * sw[None, :])
    # symmetric and entrywise nonnegative: the top eigenvalue is the Perron root
    return float(linalg.eigvalsh(S, subset_by_index=[len(w) - 1, len(w) - 1])[0]) - p.d + th


def _check_regime(p: ModelParams, g: GrowthLaw) -> float:
    th = theta(p, g)
    if th <= 0:
        raise RegimeError(f"theta = {th:.6g} <= 0 (R0 <= 1): vanishing for every length, no critical length")
    if th >= p.d:
        raise RegimeError(f"theta = {th:.6g} >= d = {p.d:.6g}: spreading for every length, no critical length")
    return th


def l_star(k: Kernel, p: ModelParams, g: GrowthLaw, tol: float = 1e-8, n: int = 201,
           with_bracket: bool = False):
    """Interval length at which the principal eigenvalue crosses zero (0 < theta < d)."""
    _check_regime(p, g)

    def lam(ell):
        return lambda_p(k, p, g, 0.0, ell, n).lambda_p

    lo = hi = k.sigma
    while lam(lo) >= 0:
        lo *= 0.5
    while lam(hi) <= 0:
        hi *= 2.0
    bracket = (lo, hi)
    root = optimize.bisect(lam, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=200)
    return (root, bracket) if with_bracket else root


def _sub_solution(p, g, res: SpectralResult, K1: float):
    """(eps phi, (G'(0)/b - lambda_p/(4c)) eps phi), with eps shrunk until the
    lower-solution inequality holds on the grid."""
    lam = res.lambda_p
    coef = g.slope_at_zero / p.b - lam / (4.0 * p.c)
    eps = 1e-3 * min(1.0, K1)
    for _ in range(60):
        w = eps * res.phi
        z = coef * w
        rhs_z = -p.b * z + g(w)
        # first equation gives (3/4) eps lambda_p phi > 0 exactly
        if np.all(rhs_z >= 0):
            return w, z
        eps *= 0.5
    raise NoConvergence("could not construct a lower solution")


def _super_solution(p, g, K1: float):
    M1 = 2.0 * K1
    # any b M2 strictly between G(M1) and (ab/c) M1 works
    M2 = 0.5 * (g(M1) + p.a * p.b / p.c * M1) / p.b
    return M1, M2


def steady_state(k: Kernel, p: ModelParams, g: GrowthLaw, l1: float, l2: float, n: int = 201,
                 tol: float = 1e-10, dt: float | None = None, max_steps: int = 2_000_000) -> SteadyState:
    """Unique nonnegative steady state (W, Z) of the fixed-domain problem.

    Marches the fixed-domain system from a lower and an upper solution; the
    two monotone sequences squeeze the steady state and must agree.
    """
    from .dynamics import fixed_rhs  # dynamics does not import this module

    res = lambda_p(k, p, g, l1, l2, n)
    if res.lambda_p <= 0:
        zero = np.zeros(n)
        return SteadyState(zero, zero.copy(), res.x, res.lambda_p)

    K1, _ = equilibrium(p, g)
    if dt is None:
        dt = 0.5 / max(p.d + p.a, p.b)

    def march(w, z):
        # The marches converge geometrically, so a step change delta with
        # contraction ratio r leaves about delta r / (1 - r) still to go.
        prev = math.inf
        for _ in range(max_steps):
            dw, dz = fixed_rhs(w, z, l1, l2, p, k, g)
            w = w + dt * dw
            z = z + dt * dz
            delta = max(np.max(np.abs(dw)), np.max(np.abs(dz))) * dt
            r = delta / prev if prev > 0 else 0.0
            prev = delta
            if delta < tol and r < 1 and delta * r / (1 - r) < tol:
                return w, z
        raise NoConvergence(f"fixed-domain march did not settle to {tol:g}", prev)

    w_lo, z_lo = march(*_sub_solution(p, g, res, K1))
    M1, M2 = _super_solution(p, g, K1)
    w_hi, z_hi = march(np.full(n, M1), np.full(n, M2))
    gap = max(np.max(np.abs(w_hi - w_lo)), np.max(np.abs(z_hi - z_lo)))
    if gap > 10 * tol:
        raise SandwichMismatch(f"lower and upper limits differ by {gap:.3g}")
    W = 0.5 * (w_lo + w_hi)
    Z = g(W) / p.b
    dw, _ = fixed_rhs(W, Z, l1, l2, p, k, g)
    return SteadyState(W, Z, res.x, res.lambda_p, gap, float(np.max(np.abs(dw))))
