"""Long-time decay run on the 32 pi box and power-law fits of every monitored norm.

Usage: python scripts/decay_rates.py [--cache DIR] [--window T0:T1] [--csv PATH]
"""

import argparse

from nlcflow.cli import parse_window
from nlcflow.diagnostics import fit_decay, theoretical_exponents
from nlcflow.experiments import DECAY, DECAY_WINDOW, run_cached
from nlcflow.io import write_series


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cache")
    ap.add_argument("--window", help="fit window t0:t1 (default 5:100)")
    ap.add_argument("--csv", help="also copy the norm series to this file")
    args = ap.parse_args()
    window = parse_window(args.window) if args.window else DECAY_WINDOW

    def progress(j, n):
        if j % 1000 == 0:
            print(f"step {j}/{n}", flush=True)

    res = run_cached(DECAY, args.cache, progress)
    if args.csv:
        write_series(res.series, args.csv)
    print(f"wall time {res.wall_seconds / 60:.1f} min{' (cached)' if res.cached else ''}")
    theory = theoretical_exponents(DECAY.K_max, [1.0, 2.0, 4.0])
    print(f"{'quantity':<14} {'exponent':>9} {'theory':>8} {'R^2':>8}")
    for name in res.series.names[1:]:
        if name not in theory:
            continue
        fit = fit_decay(res.series, name, window)
        print(f"{name:<14} {fit.exponent:>9.4f} {theory[name]:>8.4f} {fit.r_squared:>8.5f}")


if __name__ == "__main__":
    main()
