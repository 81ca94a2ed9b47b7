"""Small-data reference run: divergence, energy, constraint, L1 and L^p checks.

Usage: python scripts/small_data.py [--cache DIR]
"""

import argparse

from nlcflow.cli import series_checks
from nlcflow.diagnostics import check_energy_dissipation
from nlcflow.experiments import SMALL_DATA, run_cached


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cache", help="result cache directory (default $NLCFLOW_CACHE or ~/.cache/nlcflow)")
    args = ap.parse_args()

    def progress(j, n):
        if j % 500 == 0:
            print(f"step {j}/{n}", flush=True)

    res = run_cached(SMALL_DATA, args.cache, progress)
    print(f"{len(res.steps)} step rows, wall time {res.wall_seconds:.0f} s{' (cached)' if res.cached else ''}")
    print(f"max divergence residual  {res.steps.column('div_residual').max():.3e}")
    print(f"max constraint deviation {res.steps.column('constraint_dev').max():.3e}")
    for c in series_checks(res.steps) + [check_energy_dissipation(res.steps, "full_h_m", 1, tol_rel=1e-8)]:
        print(c.line())
    for p, s in res.lp.items():
        print(f"L^{p} dissipation: {s['checked']} step pairs, {s['failures']} failures, worst lhs - tol {s['worst_excess']:.3e}")


if __name__ == "__main__":
    main()
