"""Equal-width discretization and relative-frequency histograms.

Every batch metric in :mod:`driftmon.divergence` works on :class:`Histogram`
values produced here. Numeric features are cut into equal-width intervals whose
outermost bins are open-ended, so live values outside the training range are
never dropped. Categorical features get one bin per known label plus a trailing
``OTHER`` bin for labels never seen at baseline time.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

from .errors import AllValuesIdentical, DriftError, EmptyInput, NonFiniteValue

OTHER_LABEL = "__OTHER__"

DEFAULT_EPSILON = 1e-4
COVARIATE_BINS = 20
STABILITY_BINS = 10


@dataclass(frozen=True)
class BinningSpec:
    bin_count: int = COVARIATE_BINS
    strategy: str = "equal-width"
    edge_policy: str = "open-ended-edges"

    def __post_init__(self):
        if int(self.bin_count) != self.bin_count or self.bin_count < 2:
            raise DriftError(f"bin_count must be an integer >= 2, got {self.bin_count!r}")
        if self.strategy != "equal-width":
            raise DriftError(f"unsupported binning strategy {self.strategy!r}")
        if self.edge_policy != "open-ended-edges":
            raise DriftError(f"unsupported edge policy {self.edge_policy!r}")


@dataclass(frozen=True)
class BinEdges:
    """Interior cut points; ``len(edges) + 1`` bins, first and last open-ended."""

    edges: tuple[float, ...]

    def __post_init__(self):
        edges = tuple(float(e) for e in self.edges)
        if not edges:
            raise DriftError("at least one cut point is required")
        if any(math.isnan(e) or math.isinf(e) for e in edges):
            raise DriftError("bin edges must be finite")
        if any(b <= a for a, b in zip(edges, edges[1:])):
            raise DriftError("bin edges must be strictly increasing")
        object.__setattr__(self, "edges", edges)

    @property
    def bin_count(self) -> int:
        return len(self.edges) + 1

    def labels(self) -> tuple[str, ...]:
        bounds = ["-inf", *(repr(e) for e in self.edges), "inf"]
        return tuple(
            f"{'(' if i == 0 else '['}{lo}, {hi})" for i, (lo, hi) in enumerate(zip(bounds, bounds[1:]))
        )


@dataclass(frozen=True)
class Histogram:
    """Binned relative frequencies.

    ``count`` is the number of values that were binned; ``missing`` counts the
    NaN/None values that were excluded. An empty histogram (``count == 0``) has
    all-zero frequencies and ``empty`` set. ``degenerate`` marks the single-bin
    stand-in built for a constant feature.
    """

    labels: tuple[str, ...]
    freqs: tuple[float, ...]
    count: int
    missing: int = 0
    degenerate: bool = False

    def __post_init__(self):
        labels = tuple(str(label) for label in self.labels)
        freqs = tuple(float(f) for f in self.freqs)
        if len(labels) != len(freqs):
            raise DriftError("labels and freqs must have equal length")
        if any(f < 0 or math.isnan(f) for f in freqs):
            raise DriftError("frequencies must be non-negative")
        if self.count > 0 and abs(math.fsum(freqs) - 1.0) > 1e-9:
            raise DriftError(f"frequencies sum to {math.fsum(freqs)!r}, expected 1")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "freqs", freqs)

    @property
    def empty(self) -> bool:
        return self.count == 0

    @property
    def bin_count(self) -> int:
        return len(self.freqs)

    @property
    def missing_rate(self) -> float:
        total = self.count + self.missing
        return self.missing / total if total else 0.0

    def as_array(self) -> np.ndarray:
        return np.asarray(self.freqs, dtype=float)


def _as_spec(spec: BinningSpec | int) -> BinningSpec:
    return spec if isinstance(spec, BinningSpec) else BinningSpec(bin_count=int(spec))


def _finite_values(values: Iterable[float]) -> tuple[np.ndarray, int]:
    arr = np.asarray(list(values) if not isinstance(values, np.ndarray) else values, dtype=float).ravel()
    nan = np.isnan(arr)
    arr = arr[~nan]
    if np.isinf(arr).any():
        raise NonFiniteValue("infinite values cannot be binned")
    return arr, int(nan.sum())


def fit_binning(values: Iterable[float], spec: BinningSpec | int = BinningSpec()) -> BinEdges:
    """Equal-width cut points spanning ``[min(values), max(values)]``.

    NaN values are ignored. Raises :class:`EmptyInput` when nothing finite is
    left and :class:`AllValuesIdentical` on a zero-width range.
    """
    spec = _as_spec(spec)
    arr, _ = _finite_values(values)
    if arr.size == 0:
        raise EmptyInput("cannot fit bins on an empty sample")
    lo, hi = float(arr.min()), float(arr.max())
    if lo == hi:
        raise AllValuesIdentical(f"all values equal {lo!r}; range has zero width")
    cuts = np.linspace(lo, hi, spec.bin_count + 1)[1:-1]
    return BinEdges(tuple(cuts.tolist()))


def histogram(values: Iterable[float], edges: BinEdges) -> Histogram:
    """Relative-frequency histogram of ``values`` over frozen ``edges``.

    A value equal to a cut point belongs to the bin on its right. Values below
    the first cut land in bin 0 and values above the last cut in the final bin.
    """
    arr, missing = _finite_values(values)
    labels = edges.labels()
    if arr.size == 0:
        return Histogram(labels, (0.0,) * len(labels), 0, missing)
    idx = np.searchsorted(np.asarray(edges.edges), arr, side="right")
    counts = np.bincount(idx, minlength=edges.bin_count)
    return Histogram(labels, tuple((counts / arr.size).tolist()), int(arr.size), missing)


def _is_missing(value) -> bool:
    return value is None or (isinstance(value, float) and math.isnan(value))


def categorical_histogram(values: Iterable, vocabulary: Sequence) -> Histogram:
    """One bin per vocabulary label plus a trailing ``OTHER`` bin for unseen labels."""
    vocab = [str(v) for v in vocabulary]
    if not vocab:
        raise EmptyInput("vocabulary must not be empty")
    if len(set(vocab)) != len(vocab):
        raise DriftError("vocabulary labels must be unique")
    index = {label: i for i, label in enumerate(vocab)}
    counts = [0] * (len(vocab) + 1)
    missing = 0
    for value in values:
        if _is_missing(value):
            missing += 1
            continue
        counts[index.get(str(value), len(vocab))] += 1
    n = sum(counts)
    labels = (*vocab, OTHER_LABEL)
    if n == 0:
        return Histogram(labels, (0.0,) * len(labels), 0, missing)
    return Histogram(labels, tuple(c / n for c in counts), n, missing)


def degenerate_histogram(values: Iterable[float]) -> Histogram:
    """Single-bin histogram used in place of a constant feature's binning."""
    arr, missing = _finite_values(values)
    if arr.size == 0:
        return Histogram(("all",), (0.0,), 0, missing, degenerate=True)
    return Histogram(("all",), (1.0,), int(arr.size), missing, degenerate=True)


def smooth(h: Histogram | Sequence[float], epsilon: float = DEFAULT_EPSILON) -> Histogram | np.ndarray:
    """Additive smoothing: ``(f + eps) / (1 + k * eps)``, renormalized.

    An empty histogram becomes uniform. A plain frequency sequence is smoothed
    the same way and returned as an array.
    """
    if not epsilon > 0:
        raise DriftError(f"epsilon must be positive, got {epsilon!r}")
    if not isinstance(h, Histogram):
        arr = np.asarray(h, dtype=float) + epsilon
        return arr / arr.sum()
    shifted = h.as_array() + epsilon
    freqs = shifted / shifted.sum()
    return Histogram(h.labels, tuple(freqs.tolist()), h.count, h.missing, h.degenerate)


def paired_histograms(
    tdd: Iterable[float],
    ldd: Iterable[float],
    spec: BinningSpec | int = BinningSpec(),
    pooled: bool = True,
) -> tuple[Histogram, Histogram]:
    """Bin a training and a live sample on shared edges.

    With ``pooled`` the edges span both samples (batch comparison); otherwise
    they are fit on ``tdd`` alone, as a deployed monitor would.
    """
    tdd_arr, _ = _finite_values(tdd)
    ldd_arr, _ = _finite_values(ldd)
    fit_on = np.concatenate([tdd_arr, ldd_arr]) if pooled else tdd_arr
    edges = fit_binning(fit_on, spec)
    return histogram(tdd, edges), histogram(ldd, edges)


@dataclass(frozen=True)
class Vocabulary:
    """Ordered category labels, most frequent first (ties broken by label)."""

    labels: tuple[str, ...] = field(default_factory=tuple)

    @classmethod
    def from_values(cls, values: Iterable, max_size: int | None = None) -> "Vocabulary":
        counts: dict[str, int] = {}
        for value in values:
            if _is_missing(value):
                continue
            key = str(value)
            counts[key] = counts.get(key, 0) + 1
        ordered = sorted(counts, key=lambda k: (-counts[k], k))
        if max_size is not None:
            ordered = ordered[:max_size]
        return cls(tuple(ordered))
