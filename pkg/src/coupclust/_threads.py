"""Honor COUPLING_THREADS before any BLAS-backed import.

Must be imported before numpy: the OpenMP/BLAS runtimes read their thread
counts once, at load time.
"""

import os

_VARS = (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
)


def _apply() -> None:
    raw = os.environ.get("COUPLING_THREADS")
    if not raw:
        return
    try:
        n = int(raw)
    except ValueError:
        return
    if n < 1:
        return
    for var in _VARS:
        os.environ.setdefault(var, str(n))


_apply()
