"""Class-balance re-sampling: random under-sampling and SMOTE.

Both strategies are seeded and bit-reproducible. SMOTE synthesizes minority
rows by interpolating between a minority row and one of its k nearest
minority neighbours (exact brute-force Euclidean search).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import MinorityTooSmall, SingleClass
from .features import FeatureMatrix, SparseRow

log = logging.getLogger(__name__)

RESAMPLE_STRATEGIES = ("none", "under", "smote")

# Minority matrices up to this many dense cells take the fast all-dense
# distance path; larger ones fall back to a blockwise sparse loop.
_DENSE_BUDGET = 50_000_000


@dataclass
class ResamplePlan:
    strategy: str = "none"
    k_neighbors: int = 5
    seed: int = 42

    def __post_init__(self):
        if self.strategy not in RESAMPLE_STRATEGIES:
            raise ValueError(f"unknown resample strategy {self.strategy!r}")
        if self.k_neighbors < 1:
            raise ValueError("k_neighbors must be >= 1")


@dataclass
class Resampled:
    """Re-sampled matrix plus the original row index each row derives from.

    For under-sampling, ``origin`` maps surviving rows to their source rows;
    for SMOTE, a synthetic row's origin is its parent minority row. Sequence
    models use this to fetch token lists for resampled rows.
    """

    X: FeatureMatrix
    y: np.ndarray
    origin: np.ndarray


def _class_split(y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=np.int64)
    classes, counts = np.unique(y, return_counts=True)
    if len(classes) < 2:
        raise SingleClass("re-sampling needs both classes present")
    minority = classes[np.argmin(counts)]
    majority = classes[np.argmax(counts)]
    if counts[0] == counts[1]:
        minority, majority = classes[0], classes[1]
    return np.flatnonzero(y == minority), np.flatnonzero(y == majority)


def undersample_with_origin(X: FeatureMatrix, y: np.ndarray, seed: int) -> Resampled:
    y = np.asarray(y, dtype=np.int64)
    minority_rows, majority_rows = _class_split(y)
    if len(majority_rows) == len(minority_rows):
        keep = np.arange(len(y), dtype=np.int64)
        return Resampled(X.take(keep), y.copy(), keep)
    rng = np.random.default_rng(seed)
    chosen = rng.permutation(len(majority_rows))[: len(minority_rows)]
    keep = np.sort(np.concatenate([minority_rows, majority_rows[chosen]]))
    return Resampled(X.take(keep), y[keep], keep)


def random_undersample(
    X: FeatureMatrix, y: np.ndarray, seed: int
) -> tuple[FeatureMatrix, np.ndarray]:
    """Delete random majority rows until the classes balance exactly."""
    result = undersample_with_origin(X, y, seed)
    return result.X, result.y


def _minority_neighbors(X: FeatureMatrix, minority_rows: np.ndarray, k: int) -> np.ndarray:
    """Indices (into minority_rows) of each minority row's k nearest peers."""
    m = len(minority_rows)
    sub = X.take(minority_rows)
    norms = sub.row_norms_sq()
    neighbors = np.empty((m, k), dtype=np.int64)
    if m * sub.width <= _DENSE_BUDGET:
        dense = sub.to_dense()
        block = 1024
        for start in range(0, m, block):
            stop = min(start + block, m)
            cross = dense[start:stop] @ dense.T
            d2 = norms[start:stop, None] + norms[None, :] - 2.0 * cross
            d2[np.arange(start, stop) - start, np.arange(start, stop)] = np.inf
            order = np.argsort(d2, axis=1, kind="stable")
            neighbors[start:stop] = order[:, :k]
    else:
        width = sub.width
        buffer = np.zeros(width)
        for i in range(m):
            row = sub.row(i)
            buffer[row.columns] = row.weights
            cross = sub.matvec(buffer)
            d2 = norms[i] + norms - 2.0 * cross
            d2[i] = np.inf
            order = np.argsort(d2, kind="stable")
            neighbors[i] = order[:k]
            buffer[row.columns] = 0.0
    return neighbors


def _interpolate(parent: SparseRow, neighbor: SparseRow, gap: float) -> SparseRow:
    """parent + gap * (neighbor - parent) on the union support, zeros dropped."""
    columns = np.union1d(parent.columns, neighbor.columns)
    a = np.zeros(len(columns))
    b = np.zeros(len(columns))
    a[np.searchsorted(columns, parent.columns)] = parent.weights
    b[np.searchsorted(columns, neighbor.columns)] = neighbor.weights
    values = a + gap * (b - a)
    nonzero = values != 0.0
    return SparseRow(columns[nonzero].astype(np.int64), values[nonzero])


def smote_with_origin(X: FeatureMatrix, y: np.ndarray, k: int, seed: int) -> Resampled:
    y = np.asarray(y, dtype=np.int64)
    minority_rows, majority_rows = _class_split(y)
    if len(minority_rows) < 2:
        raise MinorityTooSmall("SMOTE needs at least two minority rows")
    if k > len(minority_rows) - 1:
        log.warning(
            "smote: clamping k from %d to %d (minority size %d)",
            k, len(minority_rows) - 1, len(minority_rows),
        )
        k = len(minority_rows) - 1

    quota = len(majority_rows) - len(minority_rows)
    identity = np.arange(len(y), dtype=np.int64)
    if quota == 0:
        return Resampled(X.take(identity), y.copy(), identity)

    neighbors = _minority_neighbors(X, minority_rows, k)
    # Fixed generator order: one batch of neighbour picks, one batch of gaps.
    rng = np.random.default_rng(seed)
    picks = rng.integers(0, k, size=quota)
    gaps = rng.random(quota)

    minority_sub = X.take(minority_rows)
    synthetic = []
    m = len(minority_rows)
    for t in range(quota):
        parent_pos = t % m  # round-robin keeps synthesis pressure even
        neighbor_pos = neighbors[parent_pos, picks[t]]
        synthetic.append(
            _interpolate(
                minority_sub.row(parent_pos), minority_sub.row(neighbor_pos), gaps[t]
            )
        )
    X_out = X.vstack_rows(synthetic)
    minority_label = y[minority_rows[0]]
    y_out = np.concatenate([y, np.full(quota, minority_label, dtype=np.int64)])
    origin = np.concatenate([identity, minority_rows[np.arange(quota) % m]])
    return Resampled(X_out, y_out, origin)


def smote_oversample(
    X: FeatureMatrix, y: np.ndarray, k: int, seed: int
) -> tuple[FeatureMatrix, np.ndarray]:
    """Append interpolated minority rows until the classes balance exactly."""
    result = smote_with_origin(X, y, k, seed)
    return result.X, result.y


def apply_plan(X: FeatureMatrix, y: np.ndarray, plan: ResamplePlan) -> Resampled:
    if plan.strategy == "none":
        identity = np.arange(len(y), dtype=np.int64)
        return Resampled(X, np.asarray(y, dtype=np.int64), identity)
    if plan.strategy == "under":
        return undersample_with_origin(X, y, plan.seed)
    return smote_with_origin(X, y, plan.k_neighbors, plan.seed)
