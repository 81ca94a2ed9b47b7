"""Command-line entry point.

Exit codes: 0 when every check passes, 1 when any check fails (or a run
aborts), 2 for usage and configuration errors.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

from . import __version__
from .diagnostics import (
    CheckReport,
    check_energy_dissipation,
    check_interpolation,
    check_l1_bound,
    check_shell_split,
    fit_decay,
    theoretical_exponents,
)
from .heat import bootstrap_experiment
from .initial import gen_director, gen_velocity, smallness_check
from .io import ConfigError, SnapshotError, load_config, read_series, read_snapshot
from .model import ConstraintAbort, FlowState, constraint_deviation
from .runner import run
from .spectral import Grid, divergence_residual

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
DIV_TOL = 1e-10


class UsageError(Exception):
    pass


def parse_window(text: str) -> tuple[float, float]:
    try:
        a, b = (float(x) for x in text.split(":"))
    except ValueError:
        raise UsageError(f"window must look like t0:t1, got {text!r}") from None
    if not b > a:
        raise UsageError(f"window needs t1 > t0, got {text!r}")
    return a, b


def parse_vector(text: str) -> tuple[float, float, float]:
    try:
        v = tuple(float(x) for x in text.split(","))
    except ValueError:
        v = ()
    if len(v) != 3:
        raise UsageError(f"expected three comma-separated reals, got {text!r}")
    return v


def series_checks(series) -> list[CheckReport]:
    """Every inequality check whose columns are present in ``series``."""
    out = []
    if "norm_n_m0" in series:
        out.append(check_energy_dissipation(series, "l2_director"))
    level = 1
    if f"norm_u_k{level}" in series and f"norm_n_m{level + 1}" in series:
        out.append(check_energy_dissipation(series, "level_k", level))
        out.append(check_energy_dissipation(series, "full_h_m", level))
    if "lp_n_p1" in series and "cum_dissipation" in series:
        out.append(check_l1_bound(series))
    if "div_residual" in series:
        worst = float(series.column("div_residual").max())
        out.append(CheckReport("divergence", worst <= DIV_TOL, DIV_TOL - worst, len(series)))
    return out


def snapshot_checks(state: FlowState, constraint_tol: float, w0=(0.0, 0.0, 1.0)) -> list[CheckReport]:
    out = []
    div = divergence_residual(state.u)
    out.append(CheckReport("divergence", div <= DIV_TOL, DIV_TOL - div, 1))
    dev = constraint_deviation(state.n.array, w0)
    out.append(CheckReport("constraint", dev <= constraint_tol, constraint_tol - dev, 1))
    reps = [check_shell_split(f, j, 3.0, state.t) for f in (state.u, state.n) for j in (1, 2)]
    worst = min(r.slack for r in reps)
    out.append(CheckReport("shell_split", all(r.passed for r in reps), worst, len(reps)))
    inter = [check_interpolation(state.n, s, l) for s, l in ((1, 2), (1, 3), (2, 3))]
    worst = max(r.ratio for r in inter)
    out.append(CheckReport("interpolation", all(r.passed for r in inter), 1 + 1e-12 - worst, len(inter)))
    return out


def _report(checks: list[CheckReport]) -> int:
    for c in checks:
        print(c.line())
    return EXIT_OK if all(c.passed for c in checks) else EXIT_FAIL


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    out_dir = Path(args.out) if args.out else Path(cfg.output_dir)
    u0 = gen_velocity(cfg.init, cfg.grid)
    n0 = gen_director(cfg.init, cfg.grid, cfg.model.w0)
    rep = smallness_check(u0, n0, cfg.diagnostics.delta0)
    print(f"smallness: {rep.value:.6e} <= {rep.delta0:.3e} {'ok' if rep.passed else 'VIOLATED'}")
    d = cfg.diagnostics
    try:
        res = run(
            FlowState(0.0, u0, n0),
            cfg.model,
            d.cadence,
            K_max=d.K_max,
            p_list=d.p_list,
            delta0=d.delta0,
            out_dir=out_dir,
            snapshot_cadence=d.snapshot_cadence,
        )
    except ConstraintAbort as exc:
        print(f"FAIL run aborted: {exc}")
        return EXIT_FAIL
    print(f"wrote {out_dir / 'series.csv'} ({len(res.series)} rows) and {out_dir / 'steps.csv'} ({len(res.steps)} rows)")
    return _report(series_checks(res.steps) + series_checks(res.series))


def cmd_analyze(args) -> int:
    series = read_series(args.series)
    window = parse_window(args.window) if args.window else None
    if window is None:
        t = series.t
        window = (min(5.0, t[-1] / 2), t[-1])
    theory = theoretical_exponents(_k_max(series.names), _p_list(series.names))
    print(f"window [{window[0]:g}, {window[1]:g}]")
    print(f"{'quantity':<18} {'exponent':>10} {'expected':>10} {'R^2':>8}")
    for name in series.names[1:]:
        if name not in theory:
            continue
        try:
            fit = fit_decay(series, name, window)
        except ValueError as e:
            print(f"{name:<18} skipped ({e})")
            continue
        print(f"{name:<18} {fit.exponent:>10.4f} {theory[name]:>10.4f} {fit.r_squared:>8.5f}")
    return _report(series_checks(series))


def _k_max(names) -> int:
    return sum(1 for n in names if n.startswith("norm_u_k")) - 1


def _p_list(names) -> list[float]:
    return [float(n[len("lp_n_p"):]) for n in names if n.startswith("lp_n_p")]


def cmd_fit(args) -> int:
    series = read_series(args.series)
    window = parse_window(args.window)
    if args.quantity not in series:
        raise UsageError(f"series has no column {args.quantity!r}; columns: {', '.join(series.names[1:])}")
    fit = fit_decay(series, args.quantity, window)
    print(f"quantity  {fit.quantity}")
    print(f"window    [{fit.t0:g}, {fit.t1:g}] ({fit.points} rows)")
    print(f"exponent  {fit.exponent:.6f}   (norm ~ (1+t)^exponent)")
    print(f"slope     {fit.slope:.6f}   (squared norm)")
    print(f"intercept {fit.intercept:.6f}")
    print(f"R^2       {fit.r_squared:.6f}")
    return EXIT_OK


def cmd_check(args) -> int:
    path = Path(args.path)
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == b"NLCF":
        return _report(snapshot_checks(read_snapshot(path), args.constraint_tol, parse_vector(args.w0)))
    return _report(series_checks(read_series(path)))


def cmd_oracle(args) -> int:
    grid = Grid(args.N, args.L)
    amp = 0.0 if args.no_forcing else 1.0
    rep = bootstrap_experiment(args.k, args.alpha, grid, args.horizon, dt=args.dt, forcing_amplitude=amp)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(f"t,grad{args.k + 1}_v_norm,forcing_norm\n")
            for t, v, f in zip(rep.t, rep.values, rep.forcing):
                fh.write(f"{float(t)!r},{float(v)!r},{float(f)!r}\n")
    fit = rep.fit
    label = "F = 0 control" if args.no_forcing else f"alpha = {args.alpha:g}"
    if fit is None:
        print(f"PASS bootstrap k={args.k} {label}: solution vanishes identically")
        return EXIT_OK
    print(f"fitted slope of ||grad^{args.k + 1} v||^2 over [{fit.t0:g}, {fit.t1:g}]: {fit.slope:.4f} (R^2 {fit.r_squared:.5f})")
    if args.no_forcing:
        target = -(args.k + 2.5)
        ok = abs(fit.slope - target) <= 0.2
        print(f"{'PASS' if ok else 'FAIL'} bootstrap k={args.k} {label}: slope {fit.slope:.4f} vs {target:g} +- 0.2")
        return EXIT_OK if ok else EXIT_FAIL
    print(f"{'PASS' if rep.passed else 'FAIL'} bootstrap k={args.k} {label}: slope {fit.slope:.4f} <= {rep.bound:g}")
    return EXIT_OK if rep.passed else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nlcflow", description="Pseudo-spectral nematic flow solver and decay diagnostics.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a simulation from a config file")
    r.add_argument("config")
    r.add_argument("--out", help="override the output directory")
    r.set_defaults(func=cmd_run)

    a = sub.add_parser("analyze", help="fit every monitored column and run the series checks")
    a.add_argument("series")
    a.add_argument("--window", help="fit window t0:t1")
    a.set_defaults(func=cmd_analyze)

    f = sub.add_parser("fit", help="power-law fit of one column")
    f.add_argument("series")
    f.add_argument("--quantity", required=True)
    f.add_argument("--window", required=True, help="t0:t1")
    f.set_defaults(func=cmd_fit)

    c = sub.add_parser("check", help="inequality checks on a series CSV or an NLCF snapshot")
    c.add_argument("path")
    c.add_argument("--constraint-tol", type=float, default=1e-2)
    c.add_argument("--w0", default="0,0,1", help="far-field director of the snapshot, a,b,c")
    c.set_defaults(func=cmd_check)

    o = sub.add_parser("oracle", help="forced heat-equation bootstrap experiment")
    o.add_argument("--k", type=int, required=True)
    o.add_argument("--alpha", type=float, default=math.inf)
    o.add_argument("--no-forcing", action="store_true", help="F = 0 control run")
    o.add_argument("--N", type=int, default=64)
    o.add_argument("--L", type=float, default=32 * math.pi)
    o.add_argument("--horizon", type=float, default=100.0)
    o.add_argument("--dt", type=float, default=0.05)
    o.add_argument("--csv", help="write the time series t, ||grad^(k+1) v||, ||grad^k F|| to this file")
    o.set_defaults(func=cmd_oracle)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.command == "oracle" and not args.no_forcing and math.isinf(args.alpha):
        parser.error("oracle needs --alpha or --no-forcing")
    try:
        return args.func(args)
    except (ConfigError, SnapshotError, UsageError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
