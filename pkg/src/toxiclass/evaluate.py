"""Splitting, confusion-matrix metrics, and the Welch two-sample t-test.

Toxic is the positive class. Zero-denominator conventions: precision and
recall are 0 when undefined, and F1 is 0 when precision + recall is 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyEvaluation, LengthMismatch, SampleTooSmall, TooFewRows


def train_test_split(
    n_rows: int, ratio: float = 0.75, seed: int = 42
) -> tuple[np.ndarray, np.ndarray]:
    """Seeded uniform shuffle; first floor(ratio * n) rows train, rest test.

    Not stratified: per-class counts in each side are whatever the shuffle
    gives. Returned index arrays are sorted, disjoint, and exhaustive.
    """
    if n_rows < 4:
        raise TooFewRows(f"need at least 4 rows to split, got {n_rows}")
    if not 0.0 < ratio < 1.0:
        raise ValueError("ratio must be in (0, 1)")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n_rows)
    cut = int(math.floor(ratio * n_rows))
    return np.sort(order[:cut]), np.sort(order[cut:])


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


def confusion(pred: np.ndarray, truth: np.ndarray) -> ConfusionMatrix:
    """Tally binary predictions against truth (1 = Toxic = positive)."""
    pred = np.asarray(pred, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.int64)
    if len(pred) != len(truth):
        raise LengthMismatch(f"{len(pred)} predictions vs {len(truth)} truths")
    tp = int(np.sum((pred == 1) & (truth == 1)))
    tn = int(np.sum((pred == 0) & (truth == 0)))
    fp = int(np.sum((pred == 1) & (truth == 0)))
    fn = int(np.sum((pred == 0) & (truth == 1)))
    return ConfusionMatrix(tp, tn, fp, fn)


@dataclass(frozen=True)
class MetricSet:
    accuracy: float
    precision: float
    recall: float
    f1: float
    cp: int
    wp: int


def metrics(cm: ConfusionMatrix) -> MetricSet:
    total = cm.total
    if total == 0:
        raise EmptyEvaluation("confusion matrix is empty")
    accuracy = (cm.tp + cm.tn) / total
    precision = cm.tp / (cm.tp + cm.fp) if cm.tp + cm.fp > 0 else 0.0
    recall = cm.tp / (cm.tp + cm.fn) if cm.tp + cm.fn > 0 else 0.0
    f1 = (
        2.0 * precision * recall / (precision + recall)
        if precision + recall > 0
        else 0.0
    )
    return MetricSet(accuracy, precision, recall, f1, cm.tp + cm.tn, cm.fp + cm.fn)


# ---------------------------------------------------------------------------
# Welch t-test (two-sided p-value via the regularized incomplete beta)
# ---------------------------------------------------------------------------


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz scheme)."""
    max_iterations = 300
    tiny = 1e-300
    eps = 3e-16
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    result = d
    for m in range(1, max_iterations + 1):
        m2 = 2 * m
        numerator = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + numerator * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + numerator / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        result *= d * c
        numerator = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + numerator * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + numerator / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        result *= delta
        if abs(delta - 1.0) < eps:
            return result
    return result


def betainc_regularized(a: float, b: float, x: float) -> float:
    """I_x(a, b), the regularized incomplete beta function."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    front = math.exp(
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_two_sided_p(t: float, df: float) -> float:
    """P(|T| >= |t|) for Student's t with ``df`` degrees of freedom."""
    if math.isinf(t):
        return 0.0
    if t == 0.0:
        return 1.0
    x = df / (df + t * t)
    return betainc_regularized(df / 2.0, 0.5, x)


@dataclass(frozen=True)
class TTestResult:
    t_statistic: float
    degrees_of_freedom: float
    p_value: float
    significant: bool
    alpha: float


def welch_ttest(sample_a, sample_b, alpha: float = 0.05) -> TTestResult:
    """Welch two-sample t-test with Welch-Satterthwaite degrees of freedom.

    Degenerate convention: when both samples are constant, t = 0 and p = 1
    if their means agree, otherwise t = +/-inf and p = 0.
    """
    a = np.asarray(sample_a, dtype=np.float64)
    b = np.asarray(sample_b, dtype=np.float64)
    if len(a) < 2 or len(b) < 2:
        raise SampleTooSmall("each sample needs at least two values")
    na, nb = len(a), len(b)
    mean_a, mean_b = float(np.mean(a)), float(np.mean(b))
    var_a = float(np.var(a, ddof=1))
    var_b = float(np.var(b, ddof=1))
    sa, sb = var_a / na, var_b / nb
    pooled = sa + sb
    if pooled == 0.0:
        df = float(na + nb - 2)
        if mean_a == mean_b:
            return TTestResult(0.0, df, 1.0, False, alpha)
        t = math.copysign(math.inf, mean_a - mean_b)
        return TTestResult(t, df, 0.0, True, alpha)
    t = (mean_a - mean_b) / math.sqrt(pooled)
    df = pooled**2 / (sa**2 / (na - 1) + sb**2 / (nb - 1))
    p = student_t_two_sided_p(t, df)
    return TTestResult(float(t), float(df), float(p), p < alpha, alpha)
