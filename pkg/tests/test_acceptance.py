"""End-to-end acceptance checks 1-12 at the stated tolerances.

Default model unless a check says otherwise: a = b = c = 1, d = 2, Hill growth,
compact quadratic kernel with sigma = 1, bump initial data with amplitude 0.5,
grid L = 60, n = 2401, dt = 1e-3.  A PASS/FAIL line per criterion is printed
in the terminal summary.
"""
import io
import time

import numpy as np
import pytest

from nonlocal_epidemic import (ClassifyConfig, GrowthLaw, InitialData, Kernel, ModelParams, Outcome, SimConfig,
                               classify, equilibrium, l_star, lambda_p, mass_balance_residual, mu_star, run_fb,
                               solve_ode, steady_state)
from nonlocal_epidemic.classify import simulate_and_classify
from nonlocal_epidemic.cli import main
from nonlocal_epidemic.dynamics import fixed_rhs
from nonlocal_epidemic.growth import derived_scalars, theta
from nonlocal_epidemic.spectral import _sub_solution, _super_solution

pytestmark = pytest.mark.slow

KERNEL = Kernel("compact_quadratic", 1.0)
INIT = InitialData("bump", 0.5, 0.5)
BASE = ModelParams(a=1.0, b=1.0, c=1.0, d=2.0, mu=1.0, h0=1.0)
SIM = SimConfig(dt=1e-3, t_end=50.0, record_every=0.1, L=60.0, n=2401)
HILL2 = GrowthLaw("hill", 2.0)
LONG = 20_000.0   # t_max for threshold runs: near mu* the time to a verdict grows without bound

# every free-boundary run is kept for the a-priori bound check
RUNS = {}


def record(log, n, passed, detail):
    log[n] = (bool(passed), detail)
    assert passed, f"criterion {n}: {detail}"


def keep(name, traj, p, g):
    RUNS[name] = (traj, p, g)
    return traj


def bump_mass(h0, amp):
    # int_{-h0}^{h0} amp (1 - (x/h0)^2) dx
    return amp * 4.0 * h0 / 3.0


@pytest.fixture(scope="module")
def l_star_default():
    return l_star(KERNEL, BASE, HILL2, tol=1e-8)


def test_c01_subthreshold_vanishing(acceptance_log):
    g, p = GrowthLaw("hill", 0.8), BASE
    start = time.perf_counter()
    traj = keep("c1", run_fb(INIT, p, KERNEL, g, SimConfig(dt=1e-3, t_end=300.0, L=60.0, n=2401)), p, g)
    elapsed = time.perf_counter() - start
    cfg = ClassifyConfig().resolve(p, g, None)
    verdict = classify(traj, p, g, cfg, None)
    bound = (p.mu / p.d * (bump_mass(p.h0, 0.5) + p.c / p.b * bump_mass(p.h0, 0.5)) + 2 * p.h0) * 1.01
    gap, umax = traj.gap[-1], traj.max_u[-1]
    ok = (verdict.outcome is Outcome.VANISHING and umax < 1e-5 and gap <= bound
          and traj.t[-1] == pytest.approx(300.0) and elapsed < 120)
    record(acceptance_log, 1, ok, f"{verdict.outcome.value}, max u={umax:.3g} < 1e-5, "
           f"h-g={gap:.6f} <= {bound:.6f}, {elapsed:.1f}s < 120s")


def test_c02_spreading_when_theta_at_least_d(acceptance_log):
    g, p = HILL2, BASE.replace(d=0.5)
    assert theta(p, g) >= p.d
    start = time.perf_counter()
    # no early exit: run until the fronts reach the grid margin so u(t, 0) has settled
    traj = keep("c2", run_fb(INIT, p, KERNEL, g, SimConfig(dt=1e-3, t_end=2000.0, L=60.0, n=2401)), p, g)
    elapsed = time.perf_counter() - start
    verdict = classify(traj, p, g, ClassifyConfig().resolve(p, g, None), None)
    K1 = 1.0   # Hill closed form R0 - 1
    err = abs(traj.u_center[-1] - K1) / K1
    ok = verdict.outcome is Outcome.SPREADING and err < 0.02 and elapsed < 180
    record(acceptance_log, 2, ok, f"{verdict.outcome.value} ({traj.truncation} at t={traj.t[-1]:.1f}), "
           f"|u(0)-K1|/K1={err:.2e} < 0.02, {elapsed:.1f}s < 180s")


def test_c03_eigenvalue_limits(acceptance_log):
    g = GrowthLaw("hill", 1.5)
    p = BASE
    th = theta(p, g)
    assert th == pytest.approx(0.5)
    start = time.perf_counter()
    short = lambda_p(KERNEL, p, g, 0.0, 0.001, 201).lambda_p
    long_ = lambda_p(KERNEL, p, g, 0.0, 200.0, 4001).lambda_p
    ladder = [lambda_p(KERNEL, p, g, 0.0, ell, 201).lambda_p for ell in (0.5, 1, 2, 4, 8, 16)]
    elapsed = time.perf_counter() - start
    e_short, e_long = abs(short - (th - p.d)), abs(long_ - th)
    increasing = all(b > a for a, b in zip(ladder, ladder[1:]))
    ok = e_short < 5e-3 and e_long < 5e-3 and increasing and elapsed < 60
    record(acceptance_log, 3, ok, f"|lam(0.001)-(theta-d)|={e_short:.2e}, |lam(200)-theta|={e_long:.2e} (< 5e-3), "
           f"ladder increasing={increasing}, {elapsed:.1f}s < 60s")


def test_c04_critical_length(acceptance_log, l_star_default):
    ls = l_star_default
    lam = lambda_p(KERNEL, BASE, HILL2, 0.0, ls, 201).lambda_p
    ls2 = l_star(KERNEL, BASE, HILL2, tol=1e-8, n=402)
    shift = abs(ls2 - ls)
    ok = 0 < theta(BASE, HILL2) < BASE.d and abs(lam) < 1e-6 and shift < 1e-3
    record(acceptance_log, 4, ok, f"l*={ls:.10f}, |lam(l*)|={abs(lam):.2e} < 1e-6, "
           f"|l*(2n)-l*(n)|={shift:.2e} < 1e-3")


def test_c05_long_initial_range_spreads_for_tiny_mu(acceptance_log, l_star_default):
    p = BASE.replace(h0=0.6 * l_star_default, mu=0.01)
    start = time.perf_counter()
    traj, verdict = simulate_and_classify(INIT, p, KERNEL, HILL2, SIM, ClassifyConfig(t_max=LONG),
                                          l_star=l_star_default)
    keep("c5", traj, p, HILL2)
    elapsed = time.perf_counter() - start
    ok = verdict.outcome is Outcome.SPREADING and elapsed < 300
    record(acceptance_log, 5, ok, f"h0=0.6 l*, mu=0.01: {verdict.outcome.value} at t={traj.t[-1]:.1f}, "
           f"{elapsed:.1f}s < 300s")


def test_c06_mu_star_bracket(acceptance_log, l_star_default):
    p = BASE.replace(h0=0.25 * l_star_default)
    cfg = ClassifyConfig(t_max=LONG)
    res = mu_star(p, KERNEL, HILL2, INIT, SIM, cfg, tol=0.01)
    width = res.mu_hi - res.mu_lo
    outcomes = {}
    for factor in (0.8, 1.2):
        q = p.replace(mu=factor * res.mid)
        traj, v = simulate_and_classify(INIT, q, KERNEL, HILL2, SIM, cfg, l_star=l_star_default)
        keep(f"c6-{factor}", traj, q, HILL2)
        outcomes[factor] = v.outcome
    ok = width < 0.02 and outcomes[1.2] is Outcome.SPREADING and outcomes[0.8] is Outcome.VANISHING
    record(acceptance_log, 6, ok, f"mu* in [{res.mu_lo:.5f}, {res.mu_hi:.5f}] width {width:.4f} < 0.02, "
           f"0.8 mid -> {outcomes[0.8].value}, 1.2 mid -> {outcomes[1.2].value}")


def test_c07_monotone_in_mu(acceptance_log):
    low = keep("c7-0.5", run_fb(INIT, BASE.replace(mu=0.5), KERNEL, HILL2, SIM), BASE.replace(mu=0.5), HILL2)
    high = keep("c7-1.0", run_fb(INIT, BASE, KERNEL, HILL2, SIM), BASE, HILL2)
    assert np.array_equal(low.t, high.t)
    dh = float(np.max(low.h - high.h))
    du = float(np.max(low.u_center - high.u_center))
    ok = dh <= 1e-9 and du <= 1e-6
    record(acceptance_log, 7, ok, f"{len(low)} records: max(h_0.5-h_1.0)={dh:.3g} <= 1e-9, "
           f"max(u_0.5(0)-u_1.0(0))={du:.3g} <= 1e-6")


def test_c08_mass_balance(acceptance_log):
    out = []
    for dt, n in ((1e-3, 2401), (5e-4, 4801)):
        sim = SimConfig(dt=dt, t_end=50.0, record_every=0.1, L=60.0, n=n)
        traj = keep(f"c8-{n}", run_fb(INIT, BASE, KERNEL, HILL2, sim), BASE, HILL2)
        res = float(np.max(np.abs(mass_balance_residual(traj, BASE, HILL2))))
        out.append((res, dt + sim.grid.dx ** 2))
    (r1, s1), (r2, s2) = out
    C = r1 / s1
    ratio = r1 / r2
    ok = ratio >= 1.8 and r2 <= C * s2
    record(acceptance_log, 8, ok, f"max residual {r1:.3e} -> {r2:.3e} (ratio {ratio:.2f} >= 1.8), "
           f"C={C:.2f}: refined residual {r2:.3e} <= C(dt+dx^2)={C * s2:.3e}")


def test_c09_a_priori_bounds(acceptance_log):
    assert RUNS, "no runs recorded"
    worst_u = worst_v = -np.inf
    ab_ok = True
    for traj, p, g in RUNS.values():
        ds = derived_scalars(p, g, *INIT.sup_norms())
        worst_u = max(worst_u, float(traj.max_u.max() - ds.A_bound))
        worst_v = max(worst_v, float(traj.max_v.max() - ds.B_bound))
        ab_ok &= ds.B_bound <= p.a / p.c * ds.A_bound
    ok = worst_u <= 1e-6 and worst_v <= 1e-6 and ab_ok
    record(acceptance_log, 9, ok, f"{len(RUNS)} runs: max(max u - A)={worst_u:.3g}, max(max v - B)={worst_v:.3g} "
           f"(<= 1e-6), B <= (a/c)A in all={ab_ok}")


def test_c10_fixed_domain_convergence(acceptance_log):
    p, g, n, dt, T = BASE, HILL2, 161, 0.05, 200.0
    steps = int(round(T / dt))

    def march(w, z, l1, l2, check=None):
        for _ in range(steps):
            dw, dz = fixed_rhs(w, z, l1, l2, p, KERNEL, g)
            w2, z2 = w + dt * dw, z + dt * dz
            if check is not None:
                check(w2 - w, z2 - z)
            w, z = w2, z2
        return w, z

    # arbitrary positive start
    x = np.linspace(0.0, 4.0, n)
    w0, z0 = 0.3 + 0.2 * np.sin(3 * x) ** 2, 1.5 - 0.1 * x

    ss = steady_state(KERNEL, p, g, 0.0, 4.0, n, tol=1e-10)
    w, z = march(w0, z0, 0.0, 4.0)
    err_pos = max(np.max(np.abs(w - ss.W)), np.max(np.abs(z - ss.Z)))

    res0 = lambda_p(KERNEL, p, g, 0.0, 0.5, n)
    w, z = march(w0[:n], z0[:n], 0.0, 0.5)
    size_zero = max(np.max(np.abs(w)), np.max(np.abs(z)))

    res = lambda_p(KERNEL, p, g, 0.0, 4.0, n)
    K1, _ = equilibrium(p, g)
    drift = {"sub": 0.0, "super": 0.0}

    def sub_check(dw, dz):
        drift["sub"] = min(drift["sub"], float(dw.min()), float(dz.min()))

    def super_check(dw, dz):
        drift["super"] = max(drift["super"], float(dw.max()), float(dz.max()))

    march(*_sub_solution(p, g, res, K1), 0.0, 4.0, sub_check)
    M1, M2 = _super_solution(p, g, K1)
    march(np.full(n, M1), np.full(n, M2), 0.0, 4.0, super_check)
    ok = (ss.lambda_p > 0 and err_pos < 1e-4 and res0.lambda_p <= 0 and size_zero < 1e-6
          and drift["sub"] >= 0 and drift["super"] <= 0)
    record(acceptance_log, 10, ok, f"lam>0: |(w,z)(200)-(W,Z)|={err_pos:.2e} < 1e-4; lam<=0: |(w,z)(200)|="
           f"{size_zero:.2e} < 1e-6; sub-start min step={drift['sub']:.2g} >= 0, "
           f"super-start max step={drift['super']:.2g} <= 0")


def test_c11_ode_equilibrium(acceptance_log):
    p, g = BASE, HILL2
    t, u, v = solve_ode(p, g, 0.01, 0.01, 200.0, 0.01)
    K1, K2 = equilibrium(p, g)
    closed = p.c * g.alpha / (p.a * p.b) - 1.0
    e_ode = max(abs(u[-1] - 1.0), abs(v[-1] - 1.0))
    e_k1 = abs(K1 - closed)
    ok = t[-1] == pytest.approx(200.0) and e_ode < 1e-6 and e_k1 < 1e-10
    record(acceptance_log, 11, ok, f"|(u,v)(200)-(1,1)|={e_ode:.2e} < 1e-6, |K1 - (R0-1)|={e_k1:.2e} < 1e-10")


def test_c12_deterministic_output(acceptance_log, tmp_path):
    outputs = []
    for workers in (1, 8):
        out = tmp_path / f"w{workers}"
        code = main(["simulate", "--out", str(out), "--workers", str(workers)], stream=io.StringIO())
        assert code == 0
        outputs.append({p.name: p.read_bytes() for p in sorted(out.glob("*.csv"))})
    same = outputs[0] == outputs[1] and "trajectory.csv" in outputs[0]
    record(acceptance_log, 12, same, f"simulate with workers 1 and 8: {len(outputs[0])} CSV files, "
           f"byte-identical={same}")


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-v"]))
