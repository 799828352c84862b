import numpy as np
import pytest

from coupclust.core import JointPmf, Pmf


def random_joint(rng, ny, nx, interior=True):
    """Strictly interior random joint with generic singular values."""
    w = rng.random((ny, nx))
    if interior:
        w += 0.05
    w /= w.sum()
    rows = tuple(f"y{i}" for i in range(ny))
    cols = tuple(f"x{j}" for j in range(nx))
    return JointPmf(rows, cols, w)


def oracle_project(v, sweeps=4000, tol=1e-13):
    """Projected coordinate descent onto the probability simplex.

    Independent of the sort-based route: start at the uniform point and
    relax pairs (i, j) by transferring mass delta = (g_i - g_j)/2 where
    g = u - v is the gradient, clipped so both coordinates stay >= 0.
    Exchange moves preserve the sum-to-one constraint exactly.
    """
    v = np.asarray(v, dtype=np.float64)
    n = v.size
    u = np.full(n, 1.0 / n)
    for _ in range(sweeps):
        moved = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                delta = ((u[i] - v[i]) - (u[j] - v[j])) / 2.0
                delta = min(delta, u[i])
                delta = max(delta, -u[j])
                u[i] -= delta
                u[j] += delta
                moved = max(moved, abs(delta))
        if moved <= tol:
            break
    return u


def random_pmf(rng, n, prefix="z"):
    p = rng.random(n) + 0.05
    p /= p.sum()
    return Pmf(tuple(f"{prefix}{i}" for i in range(n)), p)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
