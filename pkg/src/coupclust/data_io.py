"""Ingestion, serialization, and synthetic generators.

File formats:

- Triplet TSV: UTF-8 lines of `row<TAB>col<TAB>weight`, full-line `#`
  comments, blank lines ignored; duplicate (row, col) pairs are summed.
- Dense CSV: header row holds the X labels (first cell is a corner and is
  ignored), each body row starts with its Y label; blank cells mean 0.
- Pmf TSV: `label<TAB>probability` lines.
- Kernel JSON / trace CSV writers used by the CLI live here too.

Ingestion prunes all-zero rows and columns (a joint needs strictly interior
marginals) and reports what it dropped.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .core import CouplingKernel, JointPmf, Pmf, build_dtm
from .errors import (
    EmptyAfterPruning,
    InvalidDistribution,
    InvalidParams,
    InvalidRating,
    ParseError,
    ShapeMismatch,
)

__all__ = [
    "PruneReport",
    "CounterexampleParams",
    "parse_triplets",
    "load_dense_csv",
    "ingest",
    "load_triplets",
    "write_triplets",
    "load_pmf",
    "load_labels",
    "rating_transform",
    "apply_rating_transform",
    "gen_counterexample",
    "gen_planted_blocks",
    "intuitive_kernel",
    "one_item_kernel",
    "counterexample_frobenius",
    "community_objective",
    "write_kernel_json",
    "write_trace_csv",
]


@dataclass(frozen=True)
class PruneReport:
    """Rows/columns dropped for having zero total weight."""

    pruned_rows: tuple[str, ...]
    pruned_cols: tuple[str, ...]

    def as_dict(self) -> dict:
        return {
            "pruned_rows": list(self.pruned_rows),
            "pruned_cols": list(self.pruned_cols),
        }

    @property
    def empty(self) -> bool:
        return not self.pruned_rows and not self.pruned_cols


def parse_triplets(path) -> tuple[list[str], list[str], np.ndarray]:
    """Read a triplet TSV into (row_labels, col_labels, weights).

    Label order is first appearance. ParseError carries the 1-based line
    number and the byte offset of the offending line's start.
    """
    cells: dict[tuple[str, str], float] = {}
    rows: list[str] = []
    cols: list[str] = []
    row_seen: dict[str, int] = {}
    col_seen: dict[str, int] = {}
    offset = 0
    with open(path, "rb") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line_offset = offset
            offset += len(raw)
            try:
                text = raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise ParseError(f"not valid UTF-8 ({exc.reason})", lineno, line_offset)
            stripped = text.strip()
            if not stripped or stripped.startswith("#"):
                continue
            parts = stripped.split("\t")
            if len(parts) != 3:
                raise ParseError(
                    f"expected 3 tab-separated fields, got {len(parts)}",
                    lineno,
                    line_offset,
                )
            row, col, weight_text = parts
            try:
                weight = float(weight_text)
            except ValueError:
                raise ParseError(
                    f"bad weight {weight_text!r}", lineno, line_offset
                ) from None
            if not math.isfinite(weight) or weight < 0:
                raise ParseError(
                    f"weight must be finite and >= 0, got {weight!r}",
                    lineno,
                    line_offset,
                )
            if row not in row_seen:
                row_seen[row] = len(rows)
                rows.append(row)
            if col not in col_seen:
                col_seen[col] = len(cols)
                cols.append(col)
            key = (row, col)
            cells[key] = cells.get(key, 0.0) + weight
    weights = np.zeros((len(rows), len(cols)))
    for (row, col), weight in cells.items():
        weights[row_seen[row], col_seen[col]] = weight
    return rows, cols, weights


def load_dense_csv(path) -> tuple[list[str], list[str], np.ndarray]:
    """Read a dense CSV (header = X labels, first column = Y labels)."""
    with open(path, "rb") as fh:
        raw_lines = fh.readlines()
    offsets = []
    total = 0
    for raw in raw_lines:
        offsets.append(total)
        total += len(raw)
    lines = []
    for lineno, raw in enumerate(raw_lines, start=1):
        try:
            lines.append(raw.decode("utf-8"))
        except UnicodeDecodeError as exc:
            raise ParseError(
                f"not valid UTF-8 ({exc.reason})", lineno, offsets[lineno - 1]
            )
    body = [
        (i + 1, offsets[i], row)
        for i, row in enumerate(lines)
        if row.strip() and not row.strip().startswith("#")
    ]
    if not body:
        raise ParseError("empty file", 1, 0)
    header_no, header_off, header = body[0]
    header_cells = next(csv.reader([header]))
    if len(header_cells) < 2:
        raise ParseError("header needs at least one column label", header_no, header_off)
    col_labels = [c.strip() for c in header_cells[1:]]
    row_labels: list[str] = []
    data: list[list[float]] = []
    for lineno, line_offset, line in body[1:]:
        cells = next(csv.reader([line]))
        if len(cells) != len(col_labels) + 1:
            raise ParseError(
                f"expected {len(col_labels) + 1} cells, got {len(cells)}",
                lineno,
                line_offset,
            )
        row_labels.append(cells[0].strip())
        row_vals = []
        for cell in cells[1:]:
            cell = cell.strip()
            if not cell:
                row_vals.append(0.0)
                continue
            try:
                val = float(cell)
            except ValueError:
                raise ParseError(f"bad value {cell!r}", lineno, line_offset) from None
            if not math.isfinite(val) or val < 0:
                raise ParseError(
                    f"value must be finite and >= 0, got {val!r}",
                    lineno,
                    line_offset,
                )
            row_vals.append(val)
        data.append(row_vals)
    if not data:
        raise ParseError("no data rows", header_no, header_off)
    return row_labels, col_labels, np.array(data, dtype=np.float64)


def ingest(
    row_labels,
    col_labels,
    weights,
    normalize: str = "joint",
    smoothing: float = 0.0,
) -> tuple[JointPmf, PruneReport]:
    """Turn a raw nonnegative matrix into a joint, pruning empty rows/cols.

    normalize "joint" divides by the total mass; "rows" normalizes each row
    to sum 1 and then divides by the row count, yielding a joint with a
    uniform row marginal. Optional additive smoothing is applied to every
    cell first (default 0).
    """
    if normalize not in ("joint", "rows"):
        raise InvalidParams(f"unknown normalize mode {normalize!r}")
    if smoothing < 0 or not math.isfinite(smoothing):
        raise InvalidParams("smoothing must be finite and >= 0")
    w = np.array(weights, dtype=np.float64, copy=True)
    if w.ndim != 2:
        raise InvalidDistribution("weights must be a matrix")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise InvalidDistribution("weights must be finite and >= 0")
    if smoothing > 0:
        w += smoothing
    row_labels = [str(x) for x in row_labels]
    col_labels = [str(x) for x in col_labels]

    row_keep = w.sum(axis=1) > 0
    col_keep = w.sum(axis=0) > 0
    report = PruneReport(
        pruned_rows=tuple(
            lab for lab, keep in zip(row_labels, row_keep) if not keep
        ),
        pruned_cols=tuple(
            lab for lab, keep in zip(col_labels, col_keep) if not keep
        ),
    )
    w = w[np.ix_(row_keep, col_keep)]
    if w.size == 0:
        raise EmptyAfterPruning("no rows or columns carry weight")
    kept_rows = [lab for lab, keep in zip(row_labels, row_keep) if keep]
    kept_cols = [lab for lab, keep in zip(col_labels, col_keep) if keep]

    if normalize == "joint":
        w = w / w.sum()
    else:
        w = w / w.sum(axis=1, keepdims=True) / w.shape[0]
    return JointPmf(tuple(kept_rows), tuple(kept_cols), w), report


def load_triplets(path, normalize: str = "joint", smoothing: float = 0.0) -> JointPmf:
    """Parse a triplet TSV and normalize it into a joint distribution."""
    rows, cols, weights = parse_triplets(path)
    joint, _ = ingest(rows, cols, weights, normalize=normalize, smoothing=smoothing)
    return joint


def write_triplets(path, row_labels, col_labels, weights) -> None:
    """Serialize a labeled matrix as triplets, one line per cell.

    Every cell is written (including zeros) so label order survives a
    round-trip exactly; weights use repr-precision decimals.
    """
    w = np.asarray(weights, dtype=np.float64)
    with open(path, "w", encoding="utf-8") as fh:
        for i, row in enumerate(row_labels):
            for j, col in enumerate(col_labels):
                fh.write(f"{row}\t{col}\t{w[i, j]:.17g}\n")


def load_pmf(path) -> Pmf:
    """Read `label<TAB>probability` lines into a Pmf."""
    labels: list[str] = []
    probs: list[float] = []
    offset = 0
    with open(path, "rb") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line_offset = offset
            offset += len(raw)
            text = raw.decode("utf-8").strip()
            if not text or text.startswith("#"):
                continue
            parts = text.split("\t")
            if len(parts) != 2:
                raise ParseError(
                    f"expected 2 tab-separated fields, got {len(parts)}",
                    lineno,
                    line_offset,
                )
            labels.append(parts[0])
            try:
                probs.append(float(parts[1]))
            except ValueError:
                raise ParseError(
                    f"bad probability {parts[1]!r}", lineno, line_offset
                ) from None
    if not labels:
        raise ParseError("empty pmf file", 1, 0)
    return Pmf(tuple(labels), np.array(probs))


def load_labels(path) -> dict[str, str]:
    """Read `item<TAB>label` lines into an assignment mapping."""
    out: dict[str, str] = {}
    offset = 0
    with open(path, "rb") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line_offset = offset
            offset += len(raw)
            text = raw.decode("utf-8").strip()
            if not text or text.startswith("#"):
                continue
            parts = text.split("\t")
            if len(parts) != 2:
                raise ParseError(
                    f"expected 2 tab-separated fields, got {len(parts)}",
                    lineno,
                    line_offset,
                )
            out[parts[0]] = parts[1]
    if not out:
        raise ParseError("empty label file", 1, 0)
    return out


def rating_transform(r) -> float:
    """Map a 1..5 rating to 3^(r-1) - 1 (so 1 -> 0, 3 -> 8, 5 -> 80)."""
    rf = float(r)
    if not rf.is_integer() or not 1 <= rf <= 5:
        raise InvalidRating(f"rating must be an integer in 1..5, got {r!r}")
    return float(3.0 ** (rf - 1.0) - 1.0)


def apply_rating_transform(weights) -> np.ndarray:
    """Elementwise rating map; zeros are blanks and stay 0."""
    w = np.asarray(weights, dtype=np.float64)
    mask = w != 0
    vals = w[mask]
    if vals.size and (
        np.any(vals != np.rint(vals)) or np.any(vals < 1) or np.any(vals > 5)
    ):
        raise InvalidRating("nonblank ratings must be integers in 1..5")
    out = np.zeros_like(w)
    out[mask] = 3.0 ** (vals - 1.0) - 1.0
    return out


@dataclass(frozen=True)
class CounterexampleParams:
    """Two-community block matrix family: P = [[s*1, 1], [1, s*1]].

    Blocks are m x n; the full matrix is 2m x 2n and left unnormalized.
    Variants: base_P (as above), intuitive_Q1 (off-diagonal blocks zeroed),
    one_item_Q2 (last row and column zeroed except a lone s in the corner).
    """

    m: int
    n: int
    s: float
    variant: str = "base_P"

    def __post_init__(self):
        if int(self.m) < 1 or int(self.n) < 1:
            raise InvalidParams("m and n must be positive")
        if not self.s >= 1:
            raise InvalidParams("s must be >= 1")
        if self.variant not in ("base_P", "intuitive_Q1", "one_item_Q2"):
            raise InvalidParams(f"unknown variant {self.variant!r}")
        if self.variant == "one_item_Q2" and (int(self.m) < 2 or int(self.n) < 2):
            raise InvalidParams("one_item_Q2 needs m, n >= 2")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "s", float(self.s))


def gen_counterexample(p: CounterexampleParams) -> np.ndarray:
    """Materialize the requested 2m x 2n block matrix (unnormalized)."""
    m, n, s = p.m, p.n, p.s
    base = np.ones((2 * m, 2 * n))
    base[:m, :n] = s
    base[m:, n:] = s
    if p.variant == "base_P":
        return base
    if p.variant == "intuitive_Q1":
        out = base.copy()
        out[:m, n:] = 0.0
        out[m:, :n] = 0.0
        return out
    out = base.copy()
    out[2 * m - 1, :] = 0.0
    out[:, 2 * n - 1] = 0.0
    out[2 * m - 1, 2 * n - 1] = s
    return out


def _ce_labels(m: int, n: int) -> tuple[tuple[str, ...], tuple[str, ...]]:
    return (
        tuple(f"y{i}" for i in range(2 * m)),
        tuple(f"x{j}" for j in range(2 * n)),
    )


def intuitive_kernel(m: int) -> CouplingKernel:
    """Two clusters splitting the 2m rows at the block boundary."""
    kern = np.zeros((2, 2 * m))
    kern[0, :m] = 1.0
    kern[1, m:] = 1.0
    return CouplingKernel(
        ("z0", "z1"), tuple(f"y{i}" for i in range(2 * m)), kern
    )


def one_item_kernel(m: int) -> CouplingKernel:
    """One cluster holding the last row alone, the other everything else."""
    kern = np.zeros((2, 2 * m))
    kern[0, : 2 * m - 1] = 1.0
    kern[1, 2 * m - 1] = 1.0
    return CouplingKernel(
        ("z0", "z1"), tuple(f"y{i}" for i in range(2 * m)), kern
    )


def counterexample_frobenius(m: int, n: int, s: float, kernel: CouplingKernel) -> float:
    """||B_{Z,X}||_F^2 for a kernel applied to the normalized base matrix."""
    params = CounterexampleParams(m=m, n=n, s=s, variant="base_P")
    ylabels, xlabels = _ce_labels(m, n)
    joint = JointPmf.from_weights(ylabels, xlabels, gen_counterexample(params))
    chain = JointPmf.from_weights(
        kernel.cluster_labels, xlabels, kernel.kernel @ joint.weights
    )
    b = build_dtm(chain)
    return float(np.sum(b.matrix * b.matrix))


def gen_planted_blocks(
    blocks: int,
    sizes,
    within_weight: float,
    cross_weight: float,
    noise_seed: int = 0,
) -> tuple[JointPmf, list[str]]:
    """Planted block-diagonal joint with multiplicative noise.

    sizes may be a single int (every block that size) or one int per block;
    the column side mirrors the row block structure. Entries are
    within_weight inside blocks and cross_weight outside, each jittered by
    an independent Uniform[0.5, 1.5) factor from noise_seed, then normalized
    to total mass 1. Returns the joint and the ground-truth block label of
    each row.
    """
    blocks = int(blocks)
    if blocks < 1:
        raise InvalidParams("blocks must be >= 1")
    if isinstance(sizes, (int, np.integer)):
        sizes = [int(sizes)] * blocks
    sizes = [int(s) for s in sizes]
    if len(sizes) != blocks or any(s < 1 for s in sizes):
        raise InvalidParams("sizes must give a positive size per block")
    if not within_weight > cross_weight or cross_weight < 0:
        raise InvalidParams("need within_weight > cross_weight >= 0")

    membership = np.repeat(np.arange(blocks), sizes)
    w = np.where(
        membership[:, None] == membership[None, :], within_weight, cross_weight
    ).astype(np.float64)
    rng = np.random.default_rng(noise_seed)
    w = w * rng.uniform(0.5, 1.5, size=w.shape)
    ny = membership.size
    labels_y = tuple(f"y{i}" for i in range(ny))
    labels_x = tuple(f"x{j}" for j in range(ny))
    joint = JointPmf.from_weights(labels_y, labels_x, w)
    truth = [f"b{int(b)}" for b in membership]
    return joint, truth


def community_objective(q, p, lam: float, k: int) -> float:
    """||Q - P||_F^2 - lam * (sum of the top k singular values of B(Q)).

    Zero rows/columns of Q are pruned before the DTM is formed (the DTM of
    an unnormalized nonnegative matrix equals that of its normalization).
    """
    q = np.asarray(q, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    if q.shape != p.shape or q.ndim != 2:
        raise ShapeMismatch(f"Q {q.shape} vs P {p.shape}")
    if int(k) < 1:
        raise InvalidParams("k must be >= 1")
    if np.any(q < 0) or not np.all(np.isfinite(q)):
        raise InvalidDistribution("Q must be finite and >= 0")
    dist = float(np.sum((q - p) ** 2))
    rows = [f"y{i}" for i in range(q.shape[0])]
    cols = [f"x{j}" for j in range(q.shape[1])]
    joint, _ = ingest(rows, cols, q, normalize="joint")
    s = build_dtm(joint).singular_values()
    top = float(np.sum(s[: int(k)]))
    return dist - float(lam) * top


def write_kernel_json(
    path,
    kernel: CouplingKernel,
    p_z,
    objective: float,
    algorithm: str,
    iters: int,
) -> None:
    """Pinned kernel artifact schema; key order is part of the format."""
    payload = {
        "clusters": list(kernel.cluster_labels),
        "items": list(kernel.item_labels),
        "kernel": [[float(v) for v in row] for row in kernel.kernel],
        "p_z": [float(v) for v in np.asarray(p_z, dtype=np.float64)],
        "objective": float(objective),
        "algorithm": algorithm,
        "iters": int(iters),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def write_trace_csv(path, trace) -> None:
    """Pinned trace schema: iter, objective, penalty, violation."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("iter,objective,penalty,violation\n")
        for i, (obj, pen, viol) in enumerate(
            zip(trace.objectives, trace.penalties, trace.violations), start=1
        ):
            fh.write(f"{i},{obj:.17g},{pen:.17g},{viol:.17g}\n")
