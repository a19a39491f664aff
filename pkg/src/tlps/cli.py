"""Command-line front end. Every subcommand writes CSV (stdout or ``--out``).

Exit codes: 0 success, 2 invalid input, 3 numeric failure, 4 unstable model.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from fractions import Fraction

import numpy as np

from . import analytic, simulate, threshold
from .errors import InvalidModelError, TlpsError, UnstableModelError
from .hyperexp import TlpsModel, heavy_tail_family, make_hyperexp

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC, EXIT_UNSTABLE = 0, 2, 3, 4


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    return "" if v is None else str(v)


def _num(text: str) -> float:
    return float(Fraction(text.strip()))


def parse_phases(text: str):
    try:
        pairs = [item.split(":") for item in text.split(",") if item.strip()]
        weights = [_num(w) for w, _ in pairs]
        rates = [_num(r) for _, r in pairs]
    except (ValueError, ZeroDivisionError):
        raise InvalidModelError(f"--phases: expected 'w1:r1,w2:r2,...', got {text!r}") from None
    return make_hyperexp(weights, rates)


def parse_family(text: str):
    parts = text.split(",")
    if len(parts) != 3:
        raise InvalidModelError(f"--family: expected 'N,gamma1,gamma2', got {text!r}")
    try:
        return int(parts[0]), _num(parts[1]), _num(parts[2])
    except ValueError:
        raise InvalidModelError(f"--family: expected 'N,gamma1,gamma2', got {text!r}") from None


def _resolve_load(mean, lam, rho, field_hint="--lambda/--rho/--mean"):
    given = sum(v is not None for v in (mean, lam, rho))
    if mean is not None and lam is not None and rho is not None:
        if not math.isclose(lam * mean, rho, rel_tol=1e-9):
            raise InvalidModelError("--rho is inconsistent with --lambda * --mean")
    if given < 2:
        raise InvalidModelError(f"need two of {field_hint}")
    if mean is None:
        mean = rho / lam
    if lam is None:
        lam = rho / mean
    if not lam > 0:
        raise InvalidModelError("--lambda must be positive")
    return mean, lam


def build_model(args, default_phases=None, default_lambda=None, default_rho=None) -> TlpsModel:
    if args.phases and args.family:
        raise InvalidModelError("give either --phases or --family, not both")
    lam, rho, mean = args.lam, args.rho, args.mean
    if args.family:
        n, g1, g2 = parse_family(args.family)
        if lam is None and rho is None and mean is None:
            lam, rho = default_lambda, default_rho
        mean, lam = _resolve_load(mean, lam, rho)
        dist = heavy_tail_family(n, g1, g2, mean)
        return TlpsModel(dist, lam)
    dist = parse_phases(args.phases or default_phases)
    if mean is not None and not math.isclose(mean, dist.mean, rel_tol=1e-9):
        raise InvalidModelError(f"--mean {mean} contradicts the phase mean {dist.mean:.12g}")
    if lam is None and rho is None:
        lam = default_lambda if default_lambda is not None else default_rho / dist.mean
    if lam is None:
        lam = rho / dist.mean
    elif rho is not None and not math.isclose(lam * dist.mean, rho, rel_tol=1e-9):
        raise InvalidModelError("--rho is inconsistent with --lambda and the phase mean")
    if not lam * dist.mean < 1:
        raise UnstableModelError(f"load {lam * dist.mean:.6g} is not below 1")
    return TlpsModel(dist, lam)


def _write(rows, header, out):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    data = buf.getvalue()
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(data)
    else:
        sys.stdout.write(data)


def _thetas(args):
    if args.theta_steps < 2 or not 0 <= args.theta_min < args.theta_max:
        raise InvalidModelError("--theta-min/--theta-max/--theta-steps describe an empty grid")
    return np.linspace(args.theta_min, args.theta_max, args.theta_steps)


def cmd_curve(args):
    model = build_model(args, "10/11:1,1/11:1/10", default_lambda=0.5, default_rho=10 / 11)
    header = ["theta", "t_linear", "t_series", "upper_bound", "delta"]
    two = args.method == "twophase"
    if two:
        header.append("t_twophase")
    rows = []
    for th in _thetas(args):
        lin = analytic.nphase_sojourn_linear(model, th).t_total
        ser = analytic.nphase_sojourn_series(model, th, args.tol).t_total
        ub = analytic.upper_bound(model, th).t_total
        row = [th, lin, ser, ub, (ub - lin) / lin]
        if two:
            row.append(analytic.two_phase_sojourn(model, th).t_total)
        rows.append(row)
    _write(rows, header, args.out)


def cmd_table1(args):
    try:
        ns = [int(n) for n in args.ns.split(",")]
        g1, g2 = (_num(g) for g in args.gammas.split(","))
    except ValueError:
        raise InvalidModelError("--ns must be integers and --gammas 'g1,g2'") from None
    lam = args.lam if args.lam is not None else 0.5
    rho = args.rho if args.rho is not None else 10 / 11
    if args.mean is not None:
        lam = rho / args.mean if args.lam is None else lam
        rho = lam * args.mean
    if not rho < 1:
        raise UnstableModelError(f"load {rho} is not below 1")
    rows = []
    for n in ns:
        r = threshold.table1_row(n, g1, g2, lam, rho, args.theta_max, args.theta_steps)
        rows.append([n, r.eta, r.second_moment, r.half_second_moment, r.theta_opt,
                     100.0 * r.max_gain, r.max_delta])
    _write(rows, ["n", "eta", "d", "d_half", "theta_opt", "max_gain_pct", "max_delta"], args.out)


def _sweep(text):
    try:
        lo, hi, n = text.split(":")
        return np.linspace(_num(lo), _num(hi), int(n))
    except ValueError:
        raise InvalidModelError(f"--rho-sweep: expected 'lo:hi:n', got {text!r}") from None


def cmd_twophase(args):
    model = build_model(args, "10/11:1,1/11:1/10", default_lambda=0.5, default_rho=10 / 11)
    if model.dist.n_phases != 2:
        raise InvalidModelError("twophase needs exactly two phases")
    c = threshold.two_phase_constants(model)
    th = threshold.approx_threshold(model)
    t_ps = analytic.ps_sojourn(model)
    rows = [
        ("theta_approx", None, th),
        ("c1", None, c.c1),
        ("c2", None, c.c2),
        ("epsilon", None, c.epsilon),
        ("t_ps", None, t_ps),
        ("t_at_theta_approx", th, analytic.two_phase_sojourn(model, th).t_total),
        ("limit", None, threshold.limit_sojourn(model)),
    ]
    for name, factor in (("g", 1.0), ("g1", 1.5), ("g2", 0.5)):
        rows.append((name, model.rho, threshold.gain(model, factor * th, "two-phase")))
    for t in _thetas(args):
        rows.append(("t", t, analytic.two_phase_sojourn(model, t).t_total))
    if args.rho_sweep:
        mu1 = float(model.dist.rates[0])
        rhos = _sweep(args.rho_sweep)
        for name, rule in (("g_sweep", "approx"), ("g1_sweep", "three-halves-approx"),
                           ("g2_sweep", "half-approx")):
            for r, g in threshold.gain_curve(rhos, rule, c.epsilon, model.mean, mu1):
                rows.append((name, r, g))
    _write(rows, ["quantity", "x", "value"], args.out)


def cmd_simulate(args):
    model = build_model(args, "1:1", default_lambda=0.5)
    theta = args.theta
    if theta is None:
        theta = threshold.approx_threshold(model) if model.dist.n_phases == 2 else 1.0
    cfg = simulate.SimConfig(model, theta, args.jobs, args.warmup, args.seed, args.reps)
    res = simulate.run(cfg, workers=args.workers)
    if args.trace:
        rep = simulate.run_replication(cfg, 0, record_trace=True)
        simulate.write_trace_csv(rep.trace, args.trace)
    exact = analytic.sojourn(model, theta, args.method).t_total
    rows = [(i, m, None, None, None) for i, m in enumerate(res.replication_means)]
    rows.append(("all", res.mean_sojourn, res.ci99_halfwidth, exact, res.contains(exact)))
    _write(rows, ["replication", "mean_sojourn", "ci99_halfwidth", "analytic", "inside_ci"], args.out)


def _model_flags(p):
    src = p.add_argument_group("model")
    src.add_argument("--phases", help="explicit phases 'w1:r1,w2:r2,...' (fractions allowed)")
    src.add_argument("--family", help="heavy-tail family 'N,gamma1,gamma2'")
    src.add_argument("--mean", type=_num, help="mean job size m")
    src.add_argument("--lambda", dest="lam", type=_num, help="arrival rate")
    src.add_argument("--rho", type=_num, help="load lambda * m")


def _grid_flags(p, tmax=60.0, steps=241):
    p.add_argument("--theta-min", type=float, default=0.0)
    p.add_argument("--theta-max", type=float, default=tmax)
    p.add_argument("--theta-steps", type=int, default=steps)


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tlps", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("curve", help="T(theta) by every route, the bound and its gap")
    _model_flags(p)
    _grid_flags(p)
    p.add_argument("--method", choices=["linear", "series", "bound", "twophase"], default="linear")
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--out")
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("table1", help="phase-count study of the heavy-tail family")
    p.add_argument("--ns", default="10,100,500,1000")
    p.add_argument("--gammas", default="2.5,1.2")
    p.add_argument("--mean", type=_num)
    p.add_argument("--lambda", dest="lam", type=_num)
    p.add_argument("--rho", type=_num)
    _grid_flags(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("twophase", help="two-phase approximation study")
    _model_flags(p)
    _grid_flags(p, tmax=30.0, steps=121)
    p.add_argument("--rho-sweep", help="'lo:hi:n' load sweep for the gain curves")
    p.add_argument("--out")
    p.set_defaults(func=cmd_twophase)

    p = sub.add_parser("simulate", help="discrete-event simulation vs the analytic value")
    _model_flags(p)
    p.add_argument("--theta", type=float)
    p.add_argument("--method", choices=["linear", "series", "bound", "twophase"], default="linear")
    p.add_argument("--jobs", type=int, default=200_000)
    p.add_argument("--warmup", type=int, default=20_000)
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--trace", help="write the replication-0 event trace to this CSV")
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        args.func(args)
    except UnstableModelError as exc:
        print(f"tlps: unstable model: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE
    except InvalidModelError as exc:
        print(f"tlps: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (TlpsError, ArithmeticError) as exc:
        print(f"tlps: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
