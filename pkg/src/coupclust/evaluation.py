"""Clustering metrics and model-selection curves.

Accuracy is permutation-invariant: predicted cluster ids are matched to
true labels by an optimal one-to-one assignment on the confusion matrix
before counting. Coverage and k-accuracy follow the convention that only
the k largest true clusters count as reachable: overall accuracy divides by
every item, k-accuracy by the covered ones.
"""

from __future__ import annotations

import warnings
from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import CouplingKernel, JointPmf, Pmf, build_dtm, frobenius_sq, nuclear
from .errors import InvalidParams, LabelMismatch, ZeroMarginal
from .frobenius import FrobeniusConfig, solve_frobenius
from .nuclear import NuclearConfig, solve_nuclear

__all__ = [
    "ClusteringReport",
    "harden",
    "matched_accuracy",
    "coverage",
    "top_true_clusters",
    "kernel_norm_value",
    "elbow_curve",
    "build_report",
    "format_report_table",
]


def harden(kernel: CouplingKernel) -> dict[str, str]:
    """Per-item argmax cluster label, ties to the lowest cluster index."""
    idx = np.argmax(kernel.kernel, axis=0)
    return {
        item: kernel.cluster_labels[int(z)]
        for item, z in zip(kernel.item_labels, idx)
    }


def _aligned_labels(pred, truth) -> tuple[list, list]:
    pred_is_map = isinstance(pred, Mapping)
    truth_is_map = isinstance(truth, Mapping)
    if pred_is_map != truth_is_map:
        raise LabelMismatch(
            "pred and truth must both be mappings or both be sequences"
        )
    if pred_is_map:
        if set(pred.keys()) != set(truth.keys()):
            raise LabelMismatch("pred and truth cover different item sets")
        items = list(pred.keys())
        return [pred[i] for i in items], [truth[i] for i in items]
    if not isinstance(pred, Sequence) or not isinstance(truth, Sequence):
        raise LabelMismatch("pred and truth must be mappings or sequences")
    if len(pred) != len(truth):
        raise LabelMismatch(
            f"pred has {len(pred)} items, truth has {len(truth)}"
        )
    return list(pred), list(truth)


def _matched_correct(pred: list, truth: list) -> int:
    pred_ids = {lab: i for i, lab in enumerate(dict.fromkeys(pred))}
    true_ids = {lab: i for i, lab in enumerate(dict.fromkeys(truth))}
    confusion = np.zeros((len(pred_ids), len(true_ids)), dtype=np.int64)
    for a, b in zip(pred, truth):
        confusion[pred_ids[a], true_ids[b]] += 1
    rows, cols = linear_sum_assignment(confusion, maximize=True)
    return int(confusion[rows, cols].sum())


def top_true_clusters(truth: Sequence, k: int) -> list:
    """The k largest true clusters by item count, ties by first occurrence."""
    order = list(dict.fromkeys(truth))
    counts = {lab: 0 for lab in order}
    for lab in truth:
        counts[lab] += 1
    ranked = sorted(order, key=lambda lab: (-counts[lab], order.index(lab)))
    return ranked[: int(k)]


def matched_accuracy(pred, truth, mode: str = "overall", k: int | None = None) -> float:
    """Fraction correct under the best one-to-one cluster-label matching.

    mode "overall" counts every item in the denominator. mode "top_k" first
    drops items whose true cluster is outside the k largest true clusters
    (k defaults to the number of distinct predicted clusters) and matches
    on the remaining items only.
    """
    if mode not in ("overall", "top_k"):
        raise InvalidParams(f"unknown mode {mode!r}")
    pred_l, truth_l = _aligned_labels(pred, truth)
    if not pred_l:
        raise LabelMismatch("empty labeling")
    if mode == "overall":
        return _matched_correct(pred_l, truth_l) / len(pred_l)
    if k is None:
        k = len(set(pred_l))
    keep = set(top_true_clusters(truth_l, k))
    pairs = [(a, b) for a, b in zip(pred_l, truth_l) if b in keep]
    if not pairs:
        return 0.0
    kept_pred = [a for a, _ in pairs]
    kept_truth = [b for _, b in pairs]
    return _matched_correct(kept_pred, kept_truth) / len(pairs)


def coverage(truth, k: int) -> float:
    """Fraction of items whose true cluster is among the k largest."""
    if isinstance(truth, Mapping):
        truth = list(truth.values())
    truth = list(truth)
    if not truth:
        raise LabelMismatch("empty labeling")
    keep = set(top_true_clusters(truth, k))
    return sum(1 for lab in truth if lab in keep) / len(truth)


def kernel_norm_value(joint: JointPmf, kernel: CouplingKernel, algorithm: str) -> float:
    """Norm of the chain DTM B_{Z,X} induced by a kernel.

    Frobenius reports the squared Frobenius norm, nuclear the nuclear norm,
    matching what each solver maximizes.
    """
    if algorithm not in ("frobenius", "nuclear"):
        raise InvalidParams(f"unknown algorithm {algorithm!r}")
    chain_w = kernel.kernel @ joint.weights
    if np.any(chain_w.sum(axis=1) <= 0):
        raise ZeroMarginal("kernel leaves a cluster with zero mass")
    chain = JointPmf.from_weights(
        kernel.cluster_labels, joint.col_labels, chain_w
    )
    b = build_dtm(chain)
    return frobenius_sq(b) if algorithm == "frobenius" else nuclear(b)


def _solve_for_norm(joint, k, algorithm, seed, p_z, frobenius_lam):
    if algorithm == "nuclear":
        kernel, _ = solve_nuclear(joint, NuclearConfig(k=k, seed=seed))
    else:
        target = p_z
        if target is None:
            target = Pmf.uniform(tuple(f"z{i}" for i in range(k)))
        if len(target) != k:
            raise InvalidParams("p_z length must equal k")
        kernel, _ = solve_frobenius(
            joint, target, FrobeniusConfig(lam=frobenius_lam, seed=seed)
        )
    return kernel_norm_value(joint, kernel, algorithm)


def elbow_curve(
    joint: JointPmf,
    ks: Sequence[int],
    algorithm: str = "nuclear",
    restarts: int = 5,
    p_z: Pmf | None = None,
    frobenius_lam: float = 10.0,
) -> list[tuple[int, float]]:
    """Best-over-restarts norm value per cluster count.

    Restart r uses seed r; ties keep the lower seed. The curve should be
    nondecreasing in k; a decrease indicates an optimization failure and is
    reported as a warning.
    """
    ks = [int(k) for k in ks]
    if not ks or any(b <= a for a, b in zip(ks, ks[1:])):
        raise InvalidParams("ks must be a nonempty ascending list")
    if algorithm not in ("frobenius", "nuclear"):
        raise InvalidParams(f"unknown algorithm {algorithm!r}")
    if int(restarts) < 1:
        raise InvalidParams("restarts must be >= 1")
    curve: list[tuple[int, float]] = []
    for k in ks:
        best = -np.inf
        for seed in range(int(restarts)):
            val = _solve_for_norm(
                joint, k, algorithm, seed, None if p_z is None else p_z, frobenius_lam
            )
            if val > best:
                best = val
        curve.append((k, float(best)))
    for (k_prev, v_prev), (k_next, v_next) in zip(curve, curve[1:]):
        if v_next < v_prev - 1e-10:
            warnings.warn(
                f"elbow curve decreased from k={k_prev} ({v_prev!r}) "
                f"to k={k_next} ({v_next!r}); optimization likely stalled",
                RuntimeWarning,
                stacklevel=2,
            )
    return curve


@dataclass(frozen=True)
class ClusteringReport:
    """Quality summary for one clustering run against ground truth."""

    k: int
    coverage: float
    overall_accuracy: float
    k_accuracy: float
    norm_value: float

    def __post_init__(self):
        for name in ("coverage", "overall_accuracy", "k_accuracy"):
            val = getattr(self, name)
            if not 0.0 <= val <= 1.0:
                raise InvalidParams(f"{name} = {val!r} outside [0, 1]")

    def as_dict(self) -> dict:
        return {
            "k": self.k,
            "coverage": self.coverage,
            "overall_accuracy": self.overall_accuracy,
            "k_accuracy": self.k_accuracy,
            "norm_value": self.norm_value,
        }


def build_report(
    joint: JointPmf, kernel: CouplingKernel, truth, algorithm: str
) -> ClusteringReport:
    """Assemble the Table-style report for a kernel against ground truth."""
    pred_map = harden(kernel)
    if isinstance(truth, Mapping):
        truth_map = dict(truth)
    else:
        truth_l = list(truth)
        if len(truth_l) != len(kernel.item_labels):
            raise LabelMismatch("truth length must match the item count")
        truth_map = dict(zip(kernel.item_labels, truth_l))
    k = len(kernel.cluster_labels)
    return ClusteringReport(
        k=k,
        coverage=coverage(truth_map, k),
        overall_accuracy=matched_accuracy(pred_map, truth_map, mode="overall"),
        k_accuracy=matched_accuracy(pred_map, truth_map, mode="top_k", k=k),
        norm_value=kernel_norm_value(joint, kernel, algorithm),
    )


def format_report_table(report: ClusteringReport) -> str:
    """Aligned text table with the familiar column set."""
    headers = ["k", "Coverage", "Overall acc.", "k-acc.", "Norm"]
    values = [
        str(report.k),
        f"{report.coverage:.4f}",
        f"{report.overall_accuracy:.4f}",
        f"{report.k_accuracy:.4f}",
        f"{report.norm_value:.6f}",
    ]
    widths = [max(len(h), len(v)) for h, v in zip(headers, values)]
    head = "  ".join(h.ljust(w) for h, w in zip(headers, widths))
    body = "  ".join(v.ljust(w) for v, w in zip(values, widths))
    return f"{head}\n{body}"
