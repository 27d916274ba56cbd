"""Spreading/vanishing verdicts, the critical expansion coefficient and phase sweeps."""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum

from .dynamics import InitialData, SimConfig, Trajectory, run_fb
from .errors import InconsistentEvidence, ModelError, NoPositiveEquilibrium, RegimeError, UndecidedRun
from .growth import GrowthLaw, ModelParams, equilibrium, r0, theta
from .kernels import Kernel
from .quadgrid import ActiveWindow, Grid
from .spectral import l_star as compute_l_star
from .spectral import window_eigenvalue

log = logging.getLogger(__name__)

CENTER_BAND = 0.1


class Outcome(str, Enum):
    SPREADING = "Spreading"
    VANISHING = "Vanishing"
    UNDECIDED = "Undecided"


@dataclass
class Verdict:
    outcome: Outcome
    evidence: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"outcome": self.outcome.value, "evidence": self.evidence}


@dataclass(frozen=True)
class ClassifyConfig:
    """Thresholds; ``None`` fields get model-dependent defaults in :meth:`resolve`."""

    L_spread: float | None = None
    eps_vanish: float = 1e-5
    hold_time: float | None = None
    t_max: float = 500.0
    bound_slack: float = 0.01
    eigen_n: int = 201

    def resolve(self, p: ModelParams, g: GrowthLaw, l_star: float | None) -> "ClassifyConfig":
        L = self.L_spread
        if L is None:
            L = 4.0 * l_star if l_star is not None else 40.0 * p.h0
        hold = self.hold_time if self.hold_time is not None else 10.0 / min(p.a, p.b)
        return replace(self, L_spread=L, hold_time=hold)


def critical_length(k: Kernel, p: ModelParams, g: GrowthLaw, n: int = 201) -> float | None:
    """l* when 0 < theta < d, else None."""
    th = theta(p, g)
    if 0 < th < p.d:
        return compute_l_star(k, p, g, n=n)
    return None


def _endemic(p, g):
    try:
        return equilibrium(p, g)[0]
    except NoPositiveEquilibrium:
        return None


class _Evidence:
    """Incremental evaluation of both evidence sets over a stream of records.

    The range condition for vanishing depends on theta.  For theta <= 0 it is
    the mass bound (mu/d) * mass0 + initial range.  For theta > 0 the final
    range must not support growth: the principal eigenvalue of the linearized
    operator on it must be <= 0.  With a kernel and grid that eigenvalue is
    computed on the simulation's own window discretization, otherwise the
    range is compared with l* (1 + bound_slack).  For theta >= d no range
    qualifies.
    """

    def __init__(self, p: ModelParams, g: GrowthLaw, cfg: ClassifyConfig, l_star: float | None,
                 kernel: Kernel | None = None, grid: Grid | None = None):
        self.p, self.g, self.cfg, self.l_star = p, g, cfg, l_star
        self.kernel, self.grid = kernel, grid
        self.th = theta(p, g)
        self.R0 = r0(p, g)
        self.K1 = _endemic(p, g)
        self.initial_mass = None
        self.initial_gap = None
        self.quiet_since = None
        self.last = None
        self._lam = (None, None, None)

    def gap_bound(self) -> float | None:
        """Mass bound on h - g when theta <= 0, or the l* fallback; None otherwise."""
        p = self.p
        if self.th <= 0:
            return (p.mu / p.d * self.initial_mass + self.initial_gap) * (1 + self.cfg.bound_slack)
        if self.th < p.d and self.l_star is not None and self.kernel is None:
            return self.l_star * (1 + self.cfg.bound_slack)
        return None

    def window_lambda(self) -> float | None:
        if self.kernel is None or self.grid is None:
            return None
        g_pos, h_pos = self.last["g"], self.last["h"]
        if self._lam[:2] != (g_pos, h_pos):
            lam = window_eigenvalue(self.kernel, self.p, self.g, self.grid, ActiveWindow(g_pos, h_pos))
            self._lam = (g_pos, h_pos, lam)
        return self._lam[2]

    def range_ok(self) -> bool:
        gap = self.last["h"] - self.last["g"]
        if self.th <= 0:
            return gap <= self.gap_bound()
        if self.th >= self.p.d:
            return False
        lam = self.window_lambda()
        if lam is not None:
            return lam <= 0
        bound = self.gap_bound()
        return bound is not None and gap <= bound

    def push(self, rec: dict) -> None:
        if self.initial_mass is None:
            self.initial_mass = rec["mass_u"] + self.p.c / self.p.b * rec["mass_v"]
            self.initial_gap = rec["h"] - rec["g"]
        quiet = rec["max_u"] < self.cfg.eps_vanish and rec["max_v"] < self.cfg.eps_vanish
        if not quiet:
            self.quiet_since = None
        elif self.quiet_since is None:
            self.quiet_since = rec["t"]
        self.last = rec

    def spreading(self, truncation: str = "") -> bool:
        rec = self.last
        front = rec["h"] - rec["g"] >= self.cfg.L_spread or truncation == "spreading-escaped-grid"
        center = (self.R0 > 1 and self.K1 is not None
                  and abs(rec["u_center"] - self.K1) <= CENTER_BAND * self.K1)
        return bool(front and center)

    def held_for(self) -> float:
        return 0.0 if self.quiet_since is None else self.last["t"] - self.quiet_since

    def vanishing(self) -> bool:
        return self.held_for() >= self.cfg.hold_time and self.range_ok()


def early_exit_monitor(p: ModelParams, g: GrowthLaw, cfg: ClassifyConfig, l_star: float | None,
                       kernel: Kernel | None = None, grid: Grid | None = None):
    """Hook for :func:`run_fb` that stops a run as soon as either verdict is certain."""
    ev = _Evidence(p, g, cfg, l_star, kernel, grid)

    def monitor(rec: dict) -> bool:
        ev.push(rec)
        return ev.spreading() or ev.vanishing()

    return monitor


def classify(traj: Trajectory, p: ModelParams, g: GrowthLaw, cfg: ClassifyConfig,
             l_star: float | None = None, kernel: Kernel | None = None) -> Verdict:
    """Spreading if the range is wide (or escaped the grid) and u(t, 0) sits near K1;
    Vanishing if both densities stay below ``eps_vanish`` for ``hold_time`` and the
    final range is compatible with extinction (see :class:`_Evidence`);
    Undecided otherwise.

    ``cfg`` must already be resolved (see :meth:`ClassifyConfig.resolve`).  Pass
    the kernel to judge the range on the trajectory's own grid.
    """
    if cfg.L_spread is None or cfg.hold_time is None:
        raise ValueError("ClassifyConfig must be resolved before use")
    grid = traj.final_state.grid if traj.final_state is not None else None
    ev = _Evidence(p, g, cfg, l_star, kernel, grid)
    names = ("t", "g", "h", "mass_u", "mass_v", "u_center", "v_center", "max_u", "max_v")
    for row in zip(*(getattr(traj, k) for k in names)):
        ev.push(dict(zip(names, row)))
    spread = ev.spreading(traj.truncation)
    vanish = ev.vanishing()
    last = ev.last
    bound = ev.gap_bound()
    lam = ev.window_lambda() if 0 < ev.th < p.d else None
    evidence = {
        "final_t": float(last["t"]),
        "final_gap": float(last["h"] - last["g"]),
        "final_max_u": float(last["max_u"]),
        "final_max_v": float(last["max_v"]),
        "u_center_err": None if ev.K1 is None else float(abs(last["u_center"] - ev.K1)),
        "truncation": traj.truncation,
        "quiet_for": float(ev.held_for()),
        "gap_bound": None if bound is None else float(bound),
        "window_lambda": None if lam is None else float(lam),
        "L_spread": float(cfg.L_spread),
    }
    if spread and vanish:
        raise InconsistentEvidence(f"both spreading and vanishing evidence fired: {evidence}")
    if spread:
        return Verdict(Outcome.SPREADING, evidence)
    if vanish:
        return Verdict(Outcome.VANISHING, evidence)
    return Verdict(Outcome.UNDECIDED, evidence)


def simulate_and_classify(init: InitialData, p: ModelParams, k: Kernel, g: GrowthLaw,
                          sim: SimConfig, cfg: ClassifyConfig, l_star: float | None = None,
                          early_exit: bool = True):
    """Run to ``cfg.t_max`` (stopping once a verdict is certain) and classify."""
    if l_star is None:
        l_star = critical_length(k, p, g, cfg.eigen_n)
    cfg = cfg.resolve(p, g, l_star)
    sim = replace(sim, t_end=cfg.t_max)
    hook = early_exit_monitor(p, g, cfg, l_star, k, sim.grid) if early_exit else None
    traj = run_fb(init, p, k, g, sim, early_exit=hook)
    return traj, classify(traj, p, g, cfg, l_star, k)


@dataclass
class MuStarResult:
    mu_lo: float
    mu_hi: float
    tol: float
    verdict_lo: Verdict
    verdict_hi: Verdict
    probes: list = field(default_factory=list)   # (mu, outcome) in probe order

    @property
    def mid(self) -> float:
        return 0.5 * (self.mu_lo + self.mu_hi)


def mu_star(p_base: ModelParams, k: Kernel, g: GrowthLaw, init: InitialData, sim: SimConfig,
            cfg: ClassifyConfig, tol: float = 0.01, mu_lo: float = 1e-3, mu_hi: float = 1.0,
            max_bracket_steps: int = 40) -> MuStarResult:
    """Bracket the critical expansion coefficient by bisection on full simulations.

    Valid because the solution is monotone in mu: the vanishing set is an
    interval (0, mu*].  Any Undecided probe aborts with :class:`UndecidedRun`.
    """
    th = theta(p_base, g)
    if not 0 < th < p_base.d:
        raise RegimeError(f"mu* needs 0 < theta < d, got theta={th:.6g}, d={p_base.d:.6g}")
    ls = compute_l_star(k, p_base, g, n=cfg.eigen_n)
    if 2 * p_base.h0 >= ls:
        raise RegimeError(f"2 h0 = {2 * p_base.h0:.6g} >= l* = {ls:.6g}: spreading for every mu")
    probes = []

    def probe(mu):
        _, verdict = simulate_and_classify(init, p_base.replace(mu=mu), k, g, sim, cfg, l_star=ls)
        probes.append((mu, verdict.outcome.value))
        log.info("mu=%.6g -> %s", mu, verdict.outcome.value)
        if verdict.outcome is Outcome.UNDECIDED:
            raise UndecidedRun(mu)
        return verdict

    v_lo, v_hi = probe(mu_lo), probe(mu_hi)
    for _ in range(max_bracket_steps):
        if v_hi.outcome is Outcome.VANISHING:
            mu_lo, v_lo = mu_hi, v_hi
            mu_hi *= 2.0
            v_hi = probe(mu_hi)
        elif v_lo.outcome is Outcome.SPREADING:
            mu_hi, v_hi = mu_lo, v_lo
            mu_lo *= 0.5
            v_lo = probe(mu_lo)
        else:
            break
    else:
        raise RegimeError("could not bracket mu*")
    while mu_hi - mu_lo > tol:
        mid = 0.5 * (mu_lo + mu_hi)
        v = probe(mid)
        if v.outcome is Outcome.SPREADING:
            mu_hi, v_hi = mid, v
        else:
            mu_lo, v_lo = mid, v
    return MuStarResult(mu_lo, mu_hi, tol, v_lo, v_hi, probes)


SWEEP_HEADER = ["alpha", "h0", "mu", "R0", "theta", "l_star", "predicted", "verdict",
                "final_gap", "final_max_u", "u_center_err"]


def predicted_region(p: ModelParams, g: GrowthLaw, l_star: float | None) -> str:
    R0 = r0(p, g)
    if R0 <= 1:
        return "vanishing"
    if R0 >= 1 + p.d / p.a:
        return "spreading"
    if l_star is not None and 2 * p.h0 >= l_star:
        return "spreading"
    return "mu-dependent"


def _sweep_row(job):
    alpha, h0, mu, base, k, family, init, sim, cfg, ls = job
    g = GrowthLaw(family, alpha)
    p = base.replace(h0=h0, mu=mu)
    row = {"alpha": alpha, "h0": h0, "mu": mu, "R0": r0(p, g), "theta": theta(p, g),
           "l_star": ls, "predicted": predicted_region(p, g, ls)}
    try:
        traj, verdict = simulate_and_classify(init, p, k, g, sim, cfg, l_star=ls)
        ev = verdict.evidence
        row.update(verdict=verdict.outcome.value, final_gap=ev["final_gap"],
                   final_max_u=ev["final_max_u"], u_center_err=ev["u_center_err"])
    except ModelError as exc:
        row.update(verdict=f"error: {type(exc).__name__}: {exc}", final_gap=None,
                   final_max_u=None, u_center_err=None)
    return row


def phase_sweep(triples, base: ModelParams, k: Kernel, growth_family, init: InitialData,
                sim: SimConfig, cfg: ClassifyConfig, workers: int = 1) -> list[dict]:
    """One verdict row per (alpha, h0, mu); rows sorted by that key whatever the worker count."""
    triples = sorted({(float(a), float(h), float(m)) for a, h, m in triples})
    lstars = {}
    for alpha in sorted({t[0] for t in triples}):
        lstars[alpha] = critical_length(k, base, GrowthLaw(growth_family, alpha), cfg.eigen_n)
    jobs = [(a, h, m, base, k, growth_family, init, sim, cfg, lstars[a]) for a, h, m in triples]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_row, jobs))
    else:
        rows = [_sweep_row(j) for j in jobs]
    return sorted(rows, key=lambda r: (r["alpha"], r["h0"], r["mu"]))


def verdicts_monotone_in_mu(rows: list[dict]) -> bool:
    """Within each (alpha, h0) line: Vanishing rows, then Undecided, then Spreading."""
    rank = {"Vanishing": 0, "Undecided": 1, "Spreading": 2}
    lines = {}
    for r in rows:
        lines.setdefault((r["alpha"], r["h0"]), []).append(r)
    for line in lines.values():
        seq = [rank[r["verdict"]] for r in sorted(line, key=lambda r: r["mu"]) if r["verdict"] in rank]
        if any(b < a for a, b in zip(seq, seq[1:])):
            return False
    return True
