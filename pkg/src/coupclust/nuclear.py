"""Alternating maximization for the nuclear-norm coupling problem.

Repeats two exact subproblem solves: (i) with the kernel fixed, the optimal
whitened factor pair (F, G) comes from the SVD of the chain DTM B_{Z,X} and
attains tr(F^T P_{Z,X} G) = ||B_{Z,X}||_*; (ii) with F, G fixed the
objective is linear in the kernel and, absent a marginal constraint,
decomposes over columns into per-item argmax assignments (one-hot vertex
solutions). Needs no prior P_Z.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .core import CouplingKernel, Dtm, JointPmf, Pmf, build_dtm, nuclear
from .errors import (
    DegenerateCluster,
    DimensionMismatch,
    InvalidParams,
    ZeroMarginal,
)
from .frobenius import SolveTrace

__all__ = [
    "NuclearConfig",
    "KyFanFeatures",
    "kyfan_features",
    "maximize_linear_coupling",
    "maximize_linear_coupling_constrained",
    "solve_nuclear",
]

# A cluster whose induced mass falls below this is dead and gets rescued.
DEAD_MASS = 1e-12
_WHITEN_TOL = 1e-8


@dataclass(frozen=True)
class NuclearConfig:
    k: int
    max_iters: int = 200
    kernel_change_tol: float = 1e-12
    seed: int = 0

    def __post_init__(self):
        if int(self.k) < 1:
            raise InvalidParams("k must be >= 1")
        if int(self.max_iters) < 1:
            raise InvalidParams("max_iters must be >= 1")
        if not self.kernel_change_tol > 0:
            raise InvalidParams("kernel_change_tol must be positive")
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "max_iters", int(self.max_iters))
        object.__setattr__(self, "seed", int(self.seed))


@dataclass(frozen=True)
class KyFanFeatures:
    """Whitened singular-vector factors F = [P_Z]^{-1/2} U, G = [P_X]^{-1/2} V.

    Satisfy F^T [P_Z] F = G^T [P_X] G = I_r with r = min(|X|, |Z|), and
    attain the nuclear norm of the DTM they came from in the trace
    objective.
    """

    f: np.ndarray
    g: np.ndarray
    r: int
    p_z: np.ndarray
    p_x: np.ndarray

    def __post_init__(self):
        f, g = self.f, self.g
        if f.shape[1] != self.r or g.shape[1] != self.r:
            raise DimensionMismatch("F/G column count must equal r")
        fwf = f.T @ (self.p_z[:, None] * f)
        gwg = g.T @ (self.p_x[:, None] * g)
        eye = np.eye(self.r)
        err = max(
            float(np.max(np.abs(fwf - eye))), float(np.max(np.abs(gwg - eye)))
        )
        if err > _WHITEN_TOL:
            raise InvalidParams(
                f"whitening constraint violated (max error {err:.3e})"
            )


def kyfan_features(b: Dtm, p_z: Pmf, p_x: Pmf) -> KyFanFeatures:
    """Optimal factor pair for the trace form of the nuclear norm."""
    nz, nx = b.shape
    if len(p_z) != nz or len(p_x) != nx:
        raise DimensionMismatch(
            f"DTM {b.shape} vs |Z|={len(p_z)}, |X|={len(p_x)}"
        )
    if not p_z.strictly_interior or not p_x.strictly_interior:
        raise ZeroMarginal("marginals must be strictly interior")
    u, _, vt = b.svd()
    r = min(nz, nx)
    f = u[:, :r] / p_z.sqrt_probs[:, None]
    g = vt[:r].T / p_x.sqrt_probs[:, None]
    return KyFanFeatures(f=f, g=g, r=r, p_z=p_z.probs, p_x=p_x.probs)


def _coefficients(f: np.ndarray, g: np.ndarray, joint_yx: JointPmf) -> np.ndarray:
    # C[y, z] weights P(z|y) in tr(F^T P_{Z|Y} P_{Y,X} G)
    if f.shape[1] != g.shape[1]:
        raise DimensionMismatch("F and G must share the feature dimension")
    if g.shape[0] != joint_yx.shape[1]:
        raise DimensionMismatch("G rows must match the joint's columns")
    return (joint_yx.weights @ g) @ f.T


def maximize_linear_coupling(
    f: np.ndarray,
    g: np.ndarray,
    joint_yx: JointPmf,
    cluster_labels: tuple[str, ...] | None = None,
) -> CouplingKernel:
    """argmax over column-stochastic kernels of tr(F^T P_{Z|Y} P_{Y,X} G).

    The problem decomposes per column into a linear maximization over the
    simplex, whose optimum is the vertex at the largest coefficient: column
    y is one-hot at argmax_z C[y, z], ties to the lowest cluster index.
    """
    c = _coefficients(f, g, joint_yx)
    nz = f.shape[0]
    if cluster_labels is None:
        cluster_labels = tuple(f"z{i}" for i in range(nz))
    assign = np.argmax(c, axis=1)
    kernel = np.zeros((nz, c.shape[0]))
    kernel[assign, np.arange(c.shape[0])] = 1.0
    return CouplingKernel(cluster_labels, joint_yx.row_labels, kernel)


def maximize_linear_coupling_constrained(
    f: np.ndarray,
    g: np.ndarray,
    joint_yx: JointPmf,
    p_z: Pmf,
) -> CouplingKernel:
    """Kernel update with the induced-marginal constraint K P_Y = P_Z kept.

    Substituting T[z, y] = K[z, y] P_Y(y) turns the subproblem into a
    transportation LP over couplings of (P_Z, P_Y), solved exactly here.
    The optimizer is generally a soft kernel.
    """
    from scipy.optimize import linprog

    c = _coefficients(f, g, joint_yx)
    py = joint_yx.marginal_y.probs
    if not p_z.strictly_interior:
        raise ZeroMarginal("target P_Z must be strictly interior")
    nz = len(p_z)
    if f.shape[0] != nz:
        raise DimensionMismatch(
            f"F has {f.shape[0]} cluster rows but p_z has {nz} entries"
        )
    ny = py.size
    # cost[z, y] for T, flattened row-major; maximize sum C'[z,y] T[z,y]
    cost = -(c.T / py[None, :])
    a_eq = np.zeros((ny + nz, nz * ny))
    rhs = np.zeros(ny + nz)
    for y in range(ny):
        a_eq[y, y::ny] = 1.0
        rhs[y] = py[y]
    for z in range(nz):
        a_eq[ny + z, z * ny : (z + 1) * ny] = 1.0
        rhs[ny + z] = p_z.probs[z]
    res = linprog(
        cost.ravel(), A_eq=a_eq, b_eq=rhs, bounds=(0, None), method="highs"
    )
    if not res.success:
        raise InvalidParams(f"transportation LP failed: {res.message}")
    t = res.x.reshape(nz, ny)
    kernel = np.clip(t / py[None, :], 0.0, None)
    kernel /= kernel.sum(axis=0, keepdims=True)
    return CouplingKernel(p_z.labels, joint_yx.row_labels, kernel)


def _one_hot(assign: np.ndarray, nz: int) -> np.ndarray:
    k = np.zeros((nz, assign.size))
    k[assign, np.arange(assign.size)] = 1.0
    return k


def _rescue_dead(
    assign: np.ndarray,
    c: np.ndarray,
    py: np.ndarray,
    nz: int,
    rescues_left: int,
) -> tuple[np.ndarray, int]:
    """Reassign one item into each dead cluster, cheapest to move first.

    A cluster is dead when its induced mass drops below DEAD_MASS. The item
    stolen for dead cluster z* maximizes C[y, z*] - C[y, assign[y]] (the
    least objective loss) among items that are not their own cluster's sole
    member; ties go to the lowest item index.
    """
    while True:
        mass = np.zeros(nz)
        np.add.at(mass, assign, py)
        dead = np.flatnonzero(mass < DEAD_MASS)
        if dead.size == 0:
            return assign, rescues_left
        if rescues_left <= 0:
            raise DegenerateCluster(
                f"cluster {int(dead[0])} emptied and the rescue budget is spent"
            )
        z_star = int(dead[0])
        counts = np.bincount(assign, minlength=nz)
        movable = counts[assign] >= 2
        if not np.any(movable):
            raise DegenerateCluster(
                f"cluster {z_star} emptied and every other cluster is a singleton"
            )
        margin = c[:, z_star] - c[np.arange(assign.size), assign]
        margin[~movable] = -np.inf
        y_star = int(np.argmax(margin))
        assign = assign.copy()
        assign[y_star] = z_star
        rescues_left -= 1


def solve_nuclear(
    joint: JointPmf, cfg: NuclearConfig, p_z: Pmf | None = None
) -> tuple[CouplingKernel, SolveTrace]:
    """Alternating maximization of ||B_{Z,X}||_* over coupling kernels.

    Starts from seeded one-hot columns with one distinct item pinned per
    cluster (so no cluster starts empty). Stops when the one-hot pattern
    repeats (entrywise change below cfg.kernel_change_tol) or at
    cfg.max_iters. Passing p_z switches the kernel update to the
    transportation-constrained variant that keeps the induced marginal
    fixed; by default no marginal constraint is imposed.

    The trace records the nuclear norm per outer iteration (penalty and
    violation columns are zero), plus extras: "kyfan_gap" (attainment error
    of the trace objective against the nuclear norm, per step) and
    "linear_before"/"linear_after" (the fixed-F,G linear objective at the
    old and new kernel). A decrease of the nuclear norm between iterations
    emits a warning, not an error.
    """
    k = cfg.k
    ny = len(joint.marginal_y)
    if k > ny:
        raise InvalidParams(f"k = {k} exceeds |Y| = {ny}")
    cluster_labels = tuple(f"z{i}" for i in range(k))
    if p_z is not None and len(p_z) != k:
        raise DimensionMismatch("p_z length must equal k")

    w = joint.weights
    py = joint.marginal_y.probs

    rng = np.random.default_rng(cfg.seed)
    perm = rng.permutation(ny)
    assign = np.empty(ny, dtype=np.intp)
    assign[perm[:k]] = np.arange(k)
    if ny > k:
        assign[perm[k:]] = rng.integers(0, k, size=ny - k)
    kernel_mat = _one_hot(assign, k)

    trace = SolveTrace()
    trace.extras = {"kyfan_gap": [], "linear_before": [], "linear_after": []}
    rescues_left = k
    status = "MaxIters"
    prev_norm = None

    for _ in range(1, cfg.max_iters + 1):
        chain = JointPmf.from_weights(
            cluster_labels, joint.col_labels, kernel_mat @ w
        )
        b_zx = build_dtm(chain)
        norm_val = nuclear(b_zx)
        feats = kyfan_features(b_zx, chain.marginal_y, chain.marginal_x)
        attained = float(np.trace(feats.f.T @ chain.weights @ feats.g))
        trace.extras["kyfan_gap"].append(abs(attained - norm_val))

        c = _coefficients(feats.f, feats.g, joint)
        lin_before = float(np.sum(c.T * kernel_mat))
        if p_z is None:
            assign_new = np.argmax(c, axis=1)
            assign_new, rescues_left = _rescue_dead(
                assign_new, c, py, k, rescues_left
            )
            new_mat = _one_hot(assign_new, k)
        else:
            new_mat = maximize_linear_coupling_constrained(
                feats.f, feats.g, joint, p_z
            ).kernel
        lin_after = float(np.sum(c.T * new_mat))
        trace.extras["linear_before"].append(lin_before)
        trace.extras["linear_after"].append(lin_after)

        trace.record(norm_val, 0.0, 0.0, float(kernel_mat.min()))
        if prev_norm is not None and norm_val < prev_norm - 1e-12:
            warnings.warn(
                f"nuclear norm decreased between iterations "
                f"({prev_norm!r} -> {norm_val!r})",
                RuntimeWarning,
                stacklevel=2,
            )
        prev_norm = norm_val

        if float(np.max(np.abs(new_mat - kernel_mat))) <= cfg.kernel_change_tol:
            status = "Converged"
            break
        kernel_mat = new_mat

    trace.status = status
    return CouplingKernel(cluster_labels, joint.row_labels, kernel_mat), trace
