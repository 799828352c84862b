"""SVD backends.

Dense LAPACK SVD at desk scale; randomized block power iteration above the
size cutoff or on explicit request. The iterative route exists for matrices
whose full factorization would be wasteful, and doubles as the ACE-style
approximation used by the embedding module.
"""

from __future__ import annotations

import numpy as np

# Below this min-dimension the dense route is both exact and fast enough.
DENSE_CUTOFF = 512

_OVERSAMPLE = 8
_POWER_ITERS = 30


def exact_svd(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Full SVD, singular values descending. Returns (U, s, Vt)."""
    return np.linalg.svd(matrix, full_matrices=False)


def randomized_svd(
    matrix: np.ndarray, rank: int, seed: int = 0
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Truncated SVD by block power iteration.

    Subspace of width rank + 8, 30 power iterations with QR
    re-orthonormalization each step, Rayleigh-Ritz extraction at the end.
    When the block covers the whole small dimension the result is exact up
    to round-off.
    """
    m, n = matrix.shape
    small = min(m, n)
    if rank < 1:
        raise ValueError("rank must be >= 1")
    rank = min(rank, small)
    block = min(rank + _OVERSAMPLE, small)

    rng = np.random.default_rng(seed)
    q = rng.standard_normal((n, block))
    q, _ = np.linalg.qr(matrix @ q)
    for _ in range(_POWER_ITERS):
        q, _ = np.linalg.qr(matrix.T @ q)
        q, _ = np.linalg.qr(matrix @ q)

    small_mat = q.T @ matrix
    u_small, s, vt = np.linalg.svd(small_mat, full_matrices=False)
    u = q @ u_small
    return u[:, :rank], s[:rank], vt[:rank]


def svd_for_dtm(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Backend selector: dense when the small dimension is modest."""
    if min(matrix.shape) <= DENSE_CUTOFF:
        return exact_svd(matrix)
    return randomized_svd(matrix, rank=min(matrix.shape))


def top_singular_value_sym(mat: np.ndarray, iters: int = 60) -> float:
    """Largest |eigenvalue| of a symmetric matrix by power iteration.

    Deterministic start vector; used to scale gradient steps, so a rough
    estimate is fine.
    """
    n = mat.shape[0]
    v = np.full(n, 1.0 / np.sqrt(n))
    lam = 0.0
    for _ in range(iters):
        w = mat @ v
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            return 0.0
        v = w / nw
        lam = nw
    return lam
