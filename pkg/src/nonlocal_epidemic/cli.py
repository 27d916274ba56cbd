"""Command-line entry point.

    nonlocal-epidemic <validate|simulate|eigen|lstar|mustar|sweep|ode> [--config PATH] [--out DIR] [--workers N]

Exit codes: 0 ok, 1 validation failure, 2 runtime error, 3 undecided (mustar).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .classify import (SWEEP_HEADER, classify, critical_length, early_exit_monitor, mu_star,
                       phase_sweep)
from .config import ConfigError, RunConfig, default_config_text, load_config, parse_config_text
from .dynamics import fmt, run_fb, solve_ode
from .errors import InvalidParameter, ModelError, UndecidedRun
from .growth import derived_scalars, validate_growth
from .kernels import validate_kernel
from .spectral import l_star, lambda_p

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME, EXIT_UNDECIDED = 0, 1, 2, 3


def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    return fmt(x)


def _write_rows(header, rows, out_path: Path | None, stream) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(x) for x in row])
    text = buf.getvalue()
    if out_path is not None:
        out_path.write_text(text, encoding="utf-8")
    if stream is not None:
        stream.write(text)


def cmd_validate(cfg: RunConfig, out: Path | None, stream) -> int:
    p, g, k = cfg.params, cfg.growth, cfg.kernel
    reports = [validate_kernel(k, 64)]
    ds = derived_scalars(p, g, *cfg.initial.sup_norms())
    z_max = 100.0 * max(1.0, ds.K1 or 0.0)
    reports.append(validate_growth(g, p, z_max))

    from .report import ValidationReport
    ini = ValidationReport("initial data")
    xs = np.linspace(-p.h0, p.h0, 201)
    u0, v0 = cfg.initial.profile(xs, p.h0)
    ini.add("zero at +-h0", u0[0] == 0 and u0[-1] == 0 and v0[0] == 0 and v0[-1] == 0)
    ini.add("positive inside", bool(np.all(u0[1:-1] > 0) and np.all(v0[1:-1] > 0)))
    reports.append(ini)

    for rep in reports:
        for line in rep.lines():
            print(line, file=stream)
    print(f"R0 = {fmt(ds.R0)}", file=stream)
    print(f"theta = {fmt(ds.theta)}", file=stream)
    if ds.K1 is None:
        print("K1, K2: no positive equilibrium (R0 <= 1)", file=stream)
    else:
        print(f"K1 = {fmt(ds.K1)}", file=stream)
        print(f"K2 = {fmt(ds.K2)}", file=stream)
    print(f"A = {fmt(ds.A_bound)}", file=stream)
    print(f"B = {fmt(ds.B_bound)}", file=stream)
    if 0 < ds.theta < p.d:
        print(f"l_star = {fmt(l_star(k, p, g, cfg.eigen['tol'], cfg.eigen['n']))}", file=stream)
    ok = all(r.ok for r in reports)
    print("validation " + ("passed" if ok else "FAILED"), file=stream)
    return EXIT_OK if ok else EXIT_VALIDATION


def cmd_simulate(cfg: RunConfig, out: Path | None, stream) -> int:
    out = out or Path(".")
    p, g, k = cfg.params, cfg.growth, cfg.kernel
    ls = critical_length(k, p, g, cfg.eigen["n"])
    ccfg = cfg.classify.resolve(p, g, ls)
    hook = early_exit_monitor(p, g, ccfg, ls, k, cfg.sim.grid) if cfg.raw["run"]["early_exit"] else None
    traj = run_fb(cfg.initial, p, k, g, cfg.sim, early_exit=hook)
    traj.write_csv(out / "trajectory.csv")
    traj.write_snapshots(out)
    verdict = classify(traj, p, g, ccfg, ls, k)
    payload = {**verdict.to_dict(), "config_hash": cfg.config_hash()}
    (out / "verdict.json").write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    print(f"outcome: {verdict.outcome.value}", file=stream)
    return EXIT_OK


def cmd_eigen(cfg: RunConfig, out: Path | None, stream, dump_phi: bool = False) -> int:
    p, g, k, eig = cfg.params, cfg.growth, cfg.kernel, cfg.eigen
    intervals = [(0.0, ell) for ell in eig["lengths"]] or [(eig["l1"], eig["l2"])]
    rows = []
    for i, (l1, l2) in enumerate(intervals):
        res = lambda_p(k, p, g, l1, l2, eig["n"])
        rows.append((l1, l2, res.lambda_p))
        if dump_phi:
            _write_rows(["x", "phi"], zip(res.x, res.phi), (out or Path(".")) / f"eigenfunction_{i}.csv", None)
    _write_rows(["l1", "l2", "lambda_p"], rows, out / "eigen.csv" if out else None, stream)
    return EXIT_OK


def cmd_lstar(cfg: RunConfig, out: Path | None, stream) -> int:
    value, (lo, hi) = l_star(cfg.kernel, cfg.params, cfg.growth, cfg.eigen["tol"], cfg.eigen["n"],
                             with_bracket=True)
    _write_rows(["l_star", "bracket_lo", "bracket_hi", "tol"], [(value, lo, hi, cfg.eigen["tol"])],
                out / "lstar.csv" if out else None, stream)
    return EXIT_OK


def cmd_mustar(cfg: RunConfig, out: Path | None, stream) -> int:
    ms = cfg.mustar
    res = mu_star(cfg.params, cfg.kernel, cfg.growth, cfg.initial, cfg.sim, cfg.classify,
                      tol=ms["tol"], mu_lo=ms["mu_lo"], mu_hi=ms["mu_hi"])
    print(f"mu_star in [{fmt(res.mu_lo)}, {fmt(res.mu_hi)}] tol {fmt(res.tol)}", file=stream)
    if out:
        payload = {"mu_lo": res.mu_lo, "mu_hi": res.mu_hi, "tol": res.tol,
                   "verdict_lo": res.verdict_lo.to_dict(), "verdict_hi": res.verdict_hi.to_dict(),
                   "probes": res.probes, "config_hash": cfg.config_hash()}
        (out / "mustar.json").write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, out: Path | None, stream) -> int:
    sw = cfg.sweep
    if not (sw["alpha"] and sw["h0"] and sw["mu"]):
        raise InvalidParameter("sweep", "alpha, h0 and mu grids must all be non-empty")
    triples = [(a, h, m) for a in sw["alpha"] for h in sw["h0"] for m in sw["mu"]]
    rows = phase_sweep(triples, cfg.params, cfg.kernel, cfg.growth.family, cfg.initial,
                           cfg.sim, cfg.classify, workers=cfg.workers)
    _write_rows(SWEEP_HEADER, [[r[h] for h in SWEEP_HEADER] for r in rows],
                out / "sweep.csv" if out else None, stream)
    return EXIT_OK


def cmd_ode(cfg: RunConfig, out: Path | None, stream) -> int:
    o = cfg.ode
    t, u, v = solve_ode(cfg.params, cfg.growth, o["u0"], o["v0"], o["t_end"], o["dt"])
    _write_rows(["t", "u", "v"], zip(t, u, v), out / "ode.csv" if out else None,
                None if out else stream)
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "simulate": cmd_simulate,
    "eigen": cmd_eigen,
    "lstar": cmd_lstar,
    "mustar": cmd_mustar,
    "sweep": cmd_sweep,
    "ode": cmd_ode,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nonlocal-epidemic", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=Path, help="JSON config (default: the shipped default)")
        sp.add_argument("--out", type=Path, help="output directory")
        sp.add_argument("--workers", type=int, help="parallel simulations (sweep)")
        sp.add_argument("-v", "--verbose", action="store_true")
        if name == "eigen":
            sp.add_argument("--l1", type=float)
            sp.add_argument("--l2", type=float)
            sp.add_argument("--lengths", type=float, nargs="+", help="ladder of interval lengths from 0")
            sp.add_argument("--dump-eigenfunction", action="store_true")
    return parser


def _load(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else parse_config_text(default_config_text())
    overrides = {}
    if args.workers is not None:
        overrides["workers"] = args.workers
    eig = {}
    if getattr(args, "l1", None) is not None:
        eig["l1"] = args.l1
    if getattr(args, "l2", None) is not None:
        eig["l2"] = args.l2
    if getattr(args, "lengths", None):
        eig["lengths"] = args.lengths
    elif eig:
        eig["lengths"] = []
    if eig:
        overrides["eigen"] = eig
    if overrides:
        raw = dict(cfg.raw)
        for key, val in overrides.items():
            raw[key] = {**raw[key], **val} if isinstance(val, dict) else val
        cfg = RunConfig.from_dict(raw)
    return cfg


def main(argv=None, stream=None) -> int:
    stream = stream or sys.stdout
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _load(args)
    except (ConfigError, InvalidParameter) as exc:
        print(json.dumps({"error": type(exc).__name__, "field": getattr(exc, "field", None),
                          "message": str(exc)}), file=sys.stderr)
        return EXIT_VALIDATION
    out = args.out
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    try:
        if args.command == "eigen":
            return cmd_eigen(cfg, out, stream, dump_phi=args.dump_eigenfunction)
        return COMMANDS[args.command](cfg, out, stream)
    except UndecidedRun as exc:
        print(json.dumps({"error": "UndecidedRun", "mu": exc.mu, "message": str(exc)}), file=sys.stderr)
        return EXIT_UNDECIDED if args.command == "mustar" else EXIT_RUNTIME
    except InvalidParameter as exc:
        print(json.dumps({"error": type(exc).__name__, "field": exc.field, "message": str(exc)}),
              file=sys.stderr)
        return EXIT_VALIDATION
    except ModelError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
