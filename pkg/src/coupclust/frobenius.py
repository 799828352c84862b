"""Penalized gradient ascent for the Frobenius-norm coupling problem.

Maximizes J(A) = ||A B||_F^2 - lambda ||A sqrt(P_Y) - sqrt(P_Z)||_2^2 over
the solver variable A = [P_Z]^{-1/2} P_{Z|Y} [P_Y]^{1/2} (the conditional
DTM of the kernel), with periodic projection of the kernel columns back onto
the simplex. The affine update

    A <- A (I + alpha (M1 - M2)) + alpha M3

is a half-step of the exact gradient 2(A(M1 - M2) + M3).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import CouplingKernel, Dtm, JointPmf, Pmf, build_dtm
from .errors import DimensionMismatch, InvalidParams, NonFinite, ZeroMarginal
from .simplex import project_columns
from .svd import top_singular_value_sym

__all__ = [
    "FrobeniusConfig",
    "SolveTrace",
    "PenaltyMatrices",
    "penalty_matrices",
    "frobenius_objective",
    "frobenius_gradient",
    "gradient_step",
    "project_to_feasible",
    "solve_frobenius",
]

# Objective window for the relative-change stopping rule.
_OBJ_WINDOW = 10


@dataclass(frozen=True)
class FrobeniusConfig:
    """Hyperparameters for solve_frobenius.

    alpha = None picks 0.05 / sigma_1(M1 - M2), estimated by power
    iteration, so the step size tracks the problem's curvature.
    """

    lam: float = 10.0
    alpha: float | None = None
    max_iters: int = 5000
    obj_tol: float = 1e-9
    feas_tol: float = 1e-3
    seed: int = 0
    project_every: int = 1

    def __post_init__(self):
        if not self.lam > 0:
            raise InvalidParams("lam must be positive")
        if self.alpha is not None and not self.alpha > 0:
            raise InvalidParams("alpha must be positive (or None for auto)")
        if int(self.max_iters) < 1:
            raise InvalidParams("max_iters must be >= 1")
        if not 0 < self.obj_tol < 1:
            raise InvalidParams("obj_tol must be in (0, 1)")
        if not 0 < self.feas_tol < 1:
            raise InvalidParams("feas_tol must be in (0, 1)")
        if int(self.project_every) < 1:
            raise InvalidParams("project_every must be >= 1")
        object.__setattr__(self, "max_iters", int(self.max_iters))
        object.__setattr__(self, "project_every", int(self.project_every))
        object.__setattr__(self, "seed", int(self.seed))


@dataclass
class SolveTrace:
    """Per-iteration history of either solver.

    For the Frobenius solver: objective = relaxed objective J, penalty =
    lambda-weighted marginal penalty, violation = max kernel column-sum
    deviation, min_entry = smallest kernel entry. The nuclear solver reuses
    the layout with objective = nuclear norm and zero penalty/violation.
    """

    objectives: list[float] = field(default_factory=list)
    penalties: list[float] = field(default_factory=list)
    violations: list[float] = field(default_factory=list)
    min_entries: list[float] = field(default_factory=list)
    status: str = "MaxIters"
    extras: dict[str, list[float]] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.objectives)

    @property
    def iterations(self) -> int:
        return len(self.objectives)

    def record(self, obj: float, pen: float, viol: float, mn: float) -> None:
        self.objectives.append(float(obj))
        self.penalties.append(float(pen))
        self.violations.append(float(viol))
        self.min_entries.append(float(mn))

    def replace_last(self, obj: float, pen: float, viol: float, mn: float) -> None:
        self.objectives[-1] = float(obj)
        self.penalties[-1] = float(pen)
        self.violations[-1] = float(viol)
        self.min_entries[-1] = float(mn)


@dataclass(frozen=True)
class PenaltyMatrices:
    """Constant matrices of the update rule, plus the vectors they came from.

    m1 = B B^T, m2 = lam * sqrt(P_Y) sqrt(P_Y)^T, m3 = lam * sqrt(P_Z)
    sqrt(P_Y)^T.
    """

    m1: np.ndarray
    m2: np.ndarray
    m3: np.ndarray
    sqrt_py: np.ndarray
    sqrt_pz: np.ndarray
    lam: float


def penalty_matrices(b_yx: Dtm, p_z: Pmf, lam: float) -> PenaltyMatrices:
    if not lam > 0:
        raise InvalidParams("lam must be positive")
    sy = b_yx.row_pmf.sqrt_probs
    sz = p_z.sqrt_probs
    b = b_yx.matrix
    return PenaltyMatrices(
        m1=b @ b.T,
        m2=lam * np.outer(sy, sy),
        m3=lam * np.outer(sz, sy),
        sqrt_py=sy,
        sqrt_pz=sz,
        lam=float(lam),
    )


def frobenius_objective(a: np.ndarray, pm: PenaltyMatrices) -> tuple[float, float]:
    """(relaxed objective J, penalty term) at A.

    J = ||A B||_F^2 - lam ||A sqrt(P_Y) - sqrt(P_Z)||_2^2, with the first
    term evaluated as sum((A M1) o A) = tr(A B B^T A^T).
    """
    gain = float(np.sum((a @ pm.m1) * a))
    resid = a @ pm.sqrt_py - pm.sqrt_pz
    pen = pm.lam * float(resid @ resid)
    return gain - pen, pen


def frobenius_gradient(a: np.ndarray, pm: PenaltyMatrices) -> np.ndarray:
    """Exact gradient of J: 2(A(M1 - M2) + M3)."""
    return 2.0 * (a @ (pm.m1 - pm.m2) + pm.m3)


def gradient_step(a: np.ndarray, pm: PenaltyMatrices, alpha: float) -> np.ndarray:
    """One affine ascent update: A(I + alpha(M1 - M2)) + alpha M3."""
    ny = pm.m1.shape[0]
    if a.ndim != 2 or a.shape[1] != ny:
        raise DimensionMismatch(f"A has shape {a.shape}, expected (*, {ny})")
    step = np.eye(ny) + alpha * (pm.m1 - pm.m2)
    return a @ step + alpha * pm.m3


def _to_kernel(a: np.ndarray, sy: np.ndarray, sz: np.ndarray) -> np.ndarray:
    # K = [P_Z]^{1/2} A [P_Y]^{-1/2}
    return sz[:, None] * a / sy[None, :]


def _from_kernel(k: np.ndarray, sy: np.ndarray, sz: np.ndarray) -> np.ndarray:
    # A = [P_Z]^{-1/2} K [P_Y]^{1/2}
    return k * sy[None, :] / sz[:, None]


def project_to_feasible(a: np.ndarray, p_y: Pmf, p_z: Pmf) -> np.ndarray:
    """Map A to kernel space, project each column onto the simplex, map back.

    Output satisfies A^T sqrt(P_Z) = sqrt(P_Y) and A >= 0.
    """
    sy, sz = p_y.sqrt_probs, p_z.sqrt_probs
    if a.shape != (sz.size, sy.size):
        raise DimensionMismatch(
            f"A has shape {a.shape}, expected ({sz.size}, {sy.size})"
        )
    k = project_columns(_to_kernel(a, sy, sz))
    return _from_kernel(k, sy, sz)


def _feasibility(k: np.ndarray) -> tuple[float, float]:
    viol = float(np.max(np.abs(k.sum(axis=0) - 1.0)))
    return viol, float(k.min())


def solve_frobenius(
    joint: JointPmf, p_z: Pmf, cfg: FrobeniusConfig | None = None
) -> tuple[CouplingKernel, SolveTrace]:
    """Gradient-ascent coupling solver with a target cluster marginal.

    Initialization draws each kernel column uniformly from the simplex
    (exponential spacings), seeded by cfg.seed. Projection fires whenever
    the kernel-space feasibility drifts past cfg.feas_tol (checked every
    cfg.project_every iterations) and always on the final iterate, so the
    returned kernel is exactly column stochastic. Convergence = relative
    objective change below cfg.obj_tol across a 10-iteration window while
    feasible; raises NonFinite if the iterate diverges (step size too
    large).
    """
    if cfg is None:
        cfg = FrobeniusConfig()
    if not p_z.strictly_interior:
        raise ZeroMarginal("target P_Z must be strictly interior")
    nz, ny = len(p_z), len(joint.marginal_y)
    if nz > ny:
        raise InvalidParams(f"|Z| = {nz} exceeds |Y| = {ny}")

    b_yx = build_dtm(joint)
    pm = penalty_matrices(b_yx, p_z, cfg.lam)
    sy, sz = pm.sqrt_py, pm.sqrt_pz

    alpha = cfg.alpha
    if alpha is None:
        scale = top_singular_value_sym(pm.m1 - pm.m2)
        alpha = 0.05 / scale if scale > 1e-12 else 0.05

    rng = np.random.default_rng(cfg.seed)
    k0 = rng.exponential(size=(nz, ny))
    k0 /= k0.sum(axis=0, keepdims=True)
    a = _from_kernel(k0, sy, sz)

    step_mat = np.eye(ny) + alpha * (pm.m1 - pm.m2)
    m3a = alpha * pm.m3

    trace = SolveTrace()
    status = "MaxIters"
    for t in range(1, cfg.max_iters + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            a = a @ step_mat + m3a
            if not np.all(np.isfinite(a)):
                raise NonFinite(
                    f"iterate diverged at iteration {t}; reduce alpha ({alpha!r})"
                )
            k = _to_kernel(a, sy, sz)
            viol, mn = _feasibility(k)
            if t % cfg.project_every == 0 and (
                viol > cfg.feas_tol or mn < -cfg.feas_tol
            ):
                k = project_columns(k)
                a = _from_kernel(k, sy, sz)
                viol, mn = _feasibility(k)
            obj, pen = frobenius_objective(a, pm)
        if not np.isfinite(obj):
            raise NonFinite(
                f"objective diverged at iteration {t}; reduce alpha ({alpha!r})"
            )
        trace.record(obj, pen, viol, mn)

        feasible = viol <= cfg.feas_tol and mn >= -cfg.feas_tol
        converged = False
        if feasible and len(trace) > _OBJ_WINDOW:
            prev = trace.objectives[-1 - _OBJ_WINDOW]
            rel = abs(obj - prev) / max(1.0, abs(obj))
            converged = rel < cfg.obj_tol
        if converged or t == cfg.max_iters:
            k = project_columns(_to_kernel(a, sy, sz))
            a = _from_kernel(k, sy, sz)
            obj, pen = frobenius_objective(a, pm)
            viol, mn = _feasibility(k)
            trace.replace_last(obj, pen, viol, mn)
            status = "Converged" if converged else "MaxIters"
            break

    trace.status = status
    k = np.where(k >= 0.0, k, 0.0)  # clamp -1e-12-scale dust from back-mapping
    kernel = CouplingKernel(p_z.labels, joint.row_labels, k)
    return kernel, trace
