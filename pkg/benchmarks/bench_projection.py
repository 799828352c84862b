"""Time the compiled simplex projection against the numpy fallback.

Runs project_columns over a sweep of matrix shapes through both backends
in one process, checks the outputs are bitwise equal, and prints a table
of per-call times with the speedup ratio. Build the extension first
(pip install -e . --no-build-isolation); without it the compiled column
reports n/a and only the fallback is timed.

Expected shape: the compiled kernel wins for short columns (height 16 or
less, several-fold at height 2-8), which is the regime the solver uses
since column height equals the cluster count. numpy's vectorized sort
takes over for tall columns (height 64+); both remain available and
bitwise-identical, so neither regime is wrong, just slower.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from coupclust import simplex


def _time_call(fn, arr: np.ndarray, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(arr)
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> int:
    ap = argparse.ArgumentParser(
        description="benchmark the two simplex projection backends"
    )
    ap.add_argument(
        "--rows",
        default="8,32,128,512",
        help="comma list of column heights (cluster counts)",
    )
    ap.add_argument(
        "--cols",
        default="100,1000,10000",
        help="comma list of column counts (items projected per call)",
    )
    ap.add_argument("--repeats", type=int, default=7, help="keep the best of N calls")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rows = [int(s) for s in args.rows.split(",")]
    cols = [int(s) for s in args.cols.split(",")]
    rng = np.random.default_rng(args.seed)

    have_ext = simplex._ext is not None
    print(f"compiled backend available: {have_ext} (BACKEND={simplex.BACKEND})")
    header = f"{'shape':>14}  {'numpy (ms)':>12}  {'cython (ms)':>12}  {'speedup':>8}"
    print(header)
    print("-" * len(header))

    for n in rows:
        for m in cols:
            arr = rng.standard_normal((n, m)) * 2.0
            t_np = _time_call(simplex._project_columns_np, arr, args.repeats)
            if have_ext:
                t_cy = _time_call(simplex._ext.project_columns, arr, args.repeats)
                out_np = simplex._project_columns_np(arr)
                out_cy = simplex._ext.project_columns(arr)
                if out_np.tobytes() != out_cy.tobytes():
                    print(f"{n}x{m}: BACKEND OUTPUTS DIFFER")
                    return 1
                ratio = f"{t_np / t_cy:7.2f}x"
                cy_ms = f"{t_cy * 1e3:12.3f}"
            else:
                ratio = "     n/a"
                cy_ms = f"{'n/a':>12}"
            print(f"{f'{n}x{m}':>14}  {t_np * 1e3:12.3f}  {cy_ms}  {ratio}")

    return 0


if __name__ == "__main__":
    raise SystemExit(main())
