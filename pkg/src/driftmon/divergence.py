"""Data drift metrics between a training (TDD) and a live (LDD) distribution.

Histogram metrics accept either :class:`~driftmon.binning.Histogram` values or
plain frequency sequences. When two histograms are given their bin labels must
agree. KL divergence and the stability index use natural logarithms, while
Jensen-Shannon uses base 2 so that the divergence lies in ``[0, 1]``.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .binning import Histogram
from .errors import (
    DriftError,
    EmptyInput,
    LabelMismatch,
    LengthMismatch,
    NegativeInput,
    OutOfRange,
    SingleClass,
    ZeroBin,
    ZeroBinInQ,
)

HistogramLike = Histogram | Sequence[float] | np.ndarray


class DriftLevel(IntEnum):
    """Covariate drift bands, ordered so that ``HIGH > MEDIUM > LOW > NON_EXISTENT``."""

    NON_EXISTENT = 0
    LOW = 1
    MEDIUM = 2
    HIGH = 3

    @property
    def label(self) -> str:
        return _DRIFT_LABELS[self]


class StabilityLevel(IntEnum):
    VERY_SLIGHT = 0
    NOT_SIGNIFICANT = 1
    SIGNIFICANT = 2

    @property
    def label(self) -> str:
        return _STABILITY_LABELS[self]


_DRIFT_LABELS = {
    DriftLevel.NON_EXISTENT: "NonExistent",
    DriftLevel.LOW: "Low",
    DriftLevel.MEDIUM: "Medium",
    DriftLevel.HIGH: "High",
}
_STABILITY_LABELS = {
    StabilityLevel.VERY_SLIGHT: "VerySlight",
    StabilityLevel.NOT_SIGNIFICANT: "NotSignificant",
    StabilityLevel.SIGNIFICANT: "Significant",
}


def _freqs(h: HistogramLike) -> np.ndarray:
    if isinstance(h, Histogram):
        return h.as_array()
    arr = np.asarray(h, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise DriftError("a histogram must be a non-empty 1-d sequence of frequencies")
    if (arr < 0).any() or np.isnan(arr).any():
        raise DriftError("frequencies must be non-negative")
    return arr


def _pair(p: HistogramLike, q: HistogramLike) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(p, Histogram) and isinstance(q, Histogram) and p.labels != q.labels:
        raise LabelMismatch(f"bin labels differ: {p.labels[:3]}... vs {q.labels[:3]}...")
    pa, qa = _freqs(p), _freqs(q)
    if pa.shape != qa.shape:
        raise LabelMismatch(f"histograms have {pa.size} and {qa.size} bins")
    return pa, qa


def kl_divergence(p: HistogramLike, q: HistogramLike) -> float:
    """Discrete Kullback-Leibler divergence ``sum p_i ln(p_i / q_i)`` in nats.

    Bins with ``p_i == 0`` contribute nothing. A zero ``q_i`` under positive
    ``p_i`` raises :class:`ZeroBinInQ`; smooth ``q`` first.
    """
    pa, qa = _pair(p, q)
    support = pa > 0
    if (qa[support] == 0).any():
        raise ZeroBinInQ("q has a zero-frequency bin where p has mass")
    return float(max(0.0, np.sum(pa[support] * np.log(pa[support] / qa[support]))))


def covariate_drift(p: HistogramLike, q: HistogramLike) -> float:
    """Non-intersection distance ``1 - sum min(p_i, q_i)``."""
    pa, qa = _pair(p, q)
    return float(min(1.0, max(0.0, 1.0 - np.sum(np.minimum(pa, qa)))))


def classify_covariate_drift(d: float) -> DriftLevel:
    if not 0.0 <= d <= 1.0:
        raise OutOfRange(f"covariate drift must lie in [0, 1], got {d!r}")
    if d > 0.4:
        return DriftLevel.HIGH
    if d > 0.3:
        return DriftLevel.MEDIUM
    if d > 0.2:
        return DriftLevel.LOW
    return DriftLevel.NON_EXISTENT


def stability_index(p: HistogramLike, q: HistogramLike) -> float:
    """Stability index (PSI on a predictor, CSI on the model output).

    ``sum (p_i - q_i) ln(p_i / q_i)``, the symmetrised KL divergence. Both
    histograms must be free of zero bins, except bins empty in both.
    """
    pa, qa = _pair(p, q)
    both_zero = (pa == 0) & (qa == 0)
    if ((pa == 0) | (qa == 0))[~both_zero].any():
        raise ZeroBin("stability index needs smoothed histograms without zero bins")
    keep = ~both_zero
    # ln p - ln q rather than ln(p/q): both factors flip sign exactly under a swap
    diff = pa[keep] - qa[keep]
    return float(np.sum(diff * (np.log(pa[keep]) - np.log(qa[keep]))))


def classify_stability(si: float) -> StabilityLevel:
    if si < 0 or math.isnan(si):
        raise NegativeInput(f"stability index must be non-negative, got {si!r}")
    if si < 0.1:
        return StabilityLevel.VERY_SLIGHT
    if si <= 0.2:
        return StabilityLevel.NOT_SIGNIFICANT
    return StabilityLevel.SIGNIFICANT


def _kl2(a: np.ndarray, m: np.ndarray) -> float:
    support = a > 0
    return float(np.sum(a[support] * np.log2(a[support] / m[support])))


def js_divergence(p: HistogramLike, q: HistogramLike) -> float:
    """Jensen-Shannon divergence in bits, against the equal mixture ``(p + q) / 2``."""
    pa, qa = _pair(p, q)
    m = (pa + qa) / 2.0
    div = (_kl2(pa, m) + _kl2(qa, m)) / 2.0
    return float(min(1.0, max(0.0, div)))


def js_distance(p: HistogramLike, q: HistogramLike) -> float:
    """Square root of :func:`js_divergence`; 0 for identical, 1 for disjoint supports."""
    return math.sqrt(js_divergence(p, q))


def wasserstein_1d(x: Sequence[float], y: Sequence[float], normalized: bool = False) -> float:
    """Earth mover's distance by the running-difference recursion.

    ``w_0 = 0``, ``w_i = x[i-1] - y[i-1] + w_{i-1}`` and the distance is
    ``sum |w_i|``. Inputs must have equal length and are expected sorted
    ascending. With ``normalized`` the sum is divided by ``n``.
    """
    if len(x) != len(y):
        raise LengthMismatch(f"samples have lengths {len(x)} and {len(y)}")
    if len(x) == 0:
        raise EmptyInput("wasserstein_1d needs non-empty samples")
    w = 0.0
    total = 0.0
    for xi, yi in zip(x, y):
        w = float(xi) - float(yi) + w
        total += abs(w)
    return total / len(x) if normalized else total


def quantile_sketch(values: Iterable[float], points: int = 100) -> np.ndarray:
    """Sample quantiles at the mid-points ``(k + 0.5) / points`` of ``points`` equal slices."""
    arr = np.asarray(values if isinstance(values, np.ndarray) else list(values), dtype=float)
    arr = arr[~np.isnan(arr)]
    if arr.size == 0:
        raise EmptyInput("cannot sketch an empty sample")
    if points < 1:
        raise DriftError("points must be positive")
    grid = (np.arange(points) + 0.5) / points
    return np.quantile(arr, grid)


def wasserstein_samples(
    x: Iterable[float], y: Iterable[float], points: int | None = None, normalized: bool = True
) -> float:
    """:func:`wasserstein_1d` for unequal-length, unsorted samples.

    Both samples are resampled onto a shared quantile grid (``points`` defaults
    to the longer sample length) before the recursion is applied.
    """
    xa = np.asarray(list(x) if not isinstance(x, np.ndarray) else x, dtype=float)
    ya = np.asarray(list(y) if not isinstance(y, np.ndarray) else y, dtype=float)
    if xa.size == 0 or ya.size == 0:
        raise EmptyInput("wasserstein_samples needs non-empty samples")
    n = points or max(xa.size, ya.size)
    return wasserstein_1d(quantile_sketch(xa, n), quantile_sketch(ya, n), normalized=normalized)


def ks_statistic(x: Iterable[float], y: Iterable[float]) -> float:
    """Two-sample Kolmogorov-Smirnov statistic ``sup_t |F_x(t) - F_y(t)|``."""
    xa = np.sort(np.asarray(list(x) if not isinstance(x, np.ndarray) else x, dtype=float))
    ya = np.sort(np.asarray(list(y) if not isinstance(y, np.ndarray) else y, dtype=float))
    if xa.size == 0 or ya.size == 0:
        raise EmptyInput("ks_statistic needs two non-empty samples")
    pooled = np.concatenate([xa, ya])
    fx = np.searchsorted(xa, pooled, side="right") / xa.size
    fy = np.searchsorted(ya, pooled, side="right") / ya.size
    return float(np.max(np.abs(fx - fy)))


@dataclass(frozen=True)
class KsReport:
    """KS separation between two class-conditioned samples of one feature.

    ``change`` is the absolute difference to a reference report for the same
    class pair, when one was supplied.
    """

    statistic: float
    group_pair: tuple[str, str]
    change: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.statistic <= 1.0:
            raise OutOfRange(f"KS statistic must lie in [0, 1], got {self.statistic!r}")
        object.__setattr__(self, "group_pair", tuple(str(g) for g in self.group_pair))


def ks_class_separation(
    feature: Sequence[float],
    labels: Sequence,
    reference: KsReport | Iterable[KsReport] | Mapping[tuple[str, str], KsReport] | None = None,
) -> list[KsReport]:
    """KS statistic for every pair of classes on the class-conditioned feature values.

    Pairs are ordered by sorted class label. Observations whose feature value is
    NaN are dropped. When ``reference`` reports are supplied (typically those
    computed on training data), each returned report carries the absolute change
    for its class pair; pairs absent from the reference get ``change=None``.
    """
    values = np.asarray(feature, dtype=float)
    labels = [str(label) for label in labels]
    if values.size != len(labels):
        raise LengthMismatch(f"{values.size} feature values but {len(labels)} labels")
    keep = ~np.isnan(values)
    groups: dict[str, list[float]] = {}
    for value, label, ok in zip(values, labels, keep):
        if ok:
            groups.setdefault(label, []).append(float(value))
    if not groups:
        raise EmptyInput("no observations to compare")
    if len(groups) < 2:
        raise SingleClass(f"only class {next(iter(groups))!r} is present")

    if reference is None:
        ref = {}
    elif isinstance(reference, KsReport):
        ref = {reference.group_pair: reference}
    elif isinstance(reference, Mapping):
        ref = {tuple(map(str, k)): v for k, v in reference.items()}
    else:
        ref = {r.group_pair: r for r in reference}

    reports = []
    for a, b in itertools.combinations(sorted(groups), 2):
        stat = ks_statistic(groups[a], groups[b])
        base = ref.get((a, b)) or ref.get((b, a))
        change = abs(stat - base.statistic) if base is not None else None
        reports.append(KsReport(stat, (a, b), change))
    return reports
