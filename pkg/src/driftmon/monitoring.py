"""Control charts over metric time series.

A chart has a fixed lower limit of 0 and a per-metric limit. Rising charts
(distances, divergences, Page-Hinkley) breach when the latest value exceeds the
limit. Falling charts (EDDM) breach when it drops to the limit or below. A
run of ``trend_k`` consecutive moves toward the limit flags ``TRENDING``. When
a ``warning_limit`` is set, the run only counts once the latest point has
crossed it.
"""

from __future__ import annotations

import math
from collections import deque
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field, replace
from enum import IntEnum

from .errors import DriftError, EmptySeries, NonFiniteValue, NonMonotoneWindow, UnknownMetric

DEFAULT_TREND_K = 5
DEFAULT_RETENTION = 10_000
# a rising trend only warns in the top quarter of the in-control band
TREND_ZONE = 0.75
HLNR_ALARM_SHARE = 0.5


class ChartStatus(IntEnum):
    IN_CONTROL = 0
    TRENDING = 1
    BREACH = 2

    @property
    def label(self) -> str:
        return _STATUS_LABELS[self]

    @classmethod
    def from_label(cls, label: str) -> "ChartStatus":
        for status, text in _STATUS_LABELS.items():
            if text == label:
                return status
        raise DriftError(f"unknown chart status {label!r}")


_STATUS_LABELS = {
    ChartStatus.IN_CONTROL: "InControl",
    ChartStatus.TRENDING: "Trending",
    ChartStatus.BREACH: "Breach",
}


def worst_status(statuses: Iterable[ChartStatus]) -> ChartStatus:
    return max(statuses, default=ChartStatus.IN_CONTROL)


@dataclass
class MetricSeries:
    metric_id: str
    retention: int = DEFAULT_RETENTION
    points: deque = field(default_factory=deque)

    def __post_init__(self):
        if self.retention < 1:
            raise DriftError("retention must be >= 1")
        self.points = deque(self.points, maxlen=self.retention)

    @property
    def values(self) -> list[float]:
        return [v for _, v in self.points]

    def __len__(self) -> int:
        return len(self.points)


def record(series: MetricSeries, window: int, value: float) -> MetricSeries:
    if series.points and window <= series.points[-1][0]:
        raise NonMonotoneWindow(f"window {window} does not follow {series.points[-1][0]}")
    value = float(value)
    if not math.isfinite(value):
        raise NonFiniteValue(f"{series.metric_id}: non-finite value {value!r}")
    series.points.append((int(window), value))
    return series


@dataclass(frozen=True)
class ControlChart:
    upper_limit: float
    trend_k: int = DEFAULT_TREND_K
    direction: str = "rising"
    warning_limit: float | None = None
    lower_limit: float = 0.0

    def __post_init__(self):
        if self.lower_limit != 0.0:
            raise DriftError("the lower control limit is fixed at 0")
        if not self.upper_limit > 0:
            raise DriftError("upper_limit must be > 0")
        if int(self.trend_k) != self.trend_k or self.trend_k < 2:
            raise DriftError("trend_k must be an integer >= 2")
        if self.direction not in ("rising", "falling"):
            raise DriftError(f"unknown chart direction {self.direction!r}")

    def breached(self, value: float) -> bool:
        if self.direction == "rising":
            return value > self.upper_limit
        return value <= self.upper_limit

    def in_warning_zone(self, value: float) -> bool:
        if self.warning_limit is None:
            return True
        if self.direction == "rising":
            return value >= self.warning_limit
        return value <= self.warning_limit


def evaluate(chart: ControlChart, series: MetricSeries) -> ChartStatus:
    values = series.values
    if not values:
        raise EmptySeries(f"{series.metric_id}: nothing recorded yet")
    latest = values[-1]
    if chart.breached(latest):
        return ChartStatus.BREACH
    run = values[-(chart.trend_k + 1):]
    if len(run) == chart.trend_k + 1 and chart.in_warning_zone(latest):
        if chart.direction == "rising":
            moving = all(b > a for a, b in zip(run, run[1:]))
        else:
            moving = all(b < a for a, b in zip(run, run[1:]))
        if moving:
            return ChartStatus.TRENDING
    return ChartStatus.IN_CONTROL


def default_chart_for(metric_id: str, ph_lambda: float = 50.0, trend_k: int = DEFAULT_TREND_K) -> ControlChart:
    """Chart preset for a known metric. ``metric_id`` may carry a ``/feature`` suffix."""
    base = metric_id.split("/", 1)[0]
    if base in ("covariate_drift", "stability_index"):
        return ControlChart(0.2, trend_k, "rising", TREND_ZONE * 0.2)
    if base == "eddm":
        return ControlChart(0.90, trend_k, "falling", 0.95)
    if base == "hlnr":
        # share of a window's labelled records spent below baseline - delta
        return ControlChart(HLNR_ALARM_SHARE, trend_k, "rising", TREND_ZONE * HLNR_ALARM_SHARE)
    if base == "page_hinkley":
        return ControlChart(ph_lambda, trend_k, "rising", TREND_ZONE * ph_lambda)
    raise UnknownMetric(f"no default chart for {metric_id!r}")


def chart_with_overrides(chart: ControlChart, overrides: Mapping | None) -> ControlChart:
    """Apply a config block such as ``{"upper_limit": 0.3, "trend_k": 4}``.

    Raising ``upper_limit`` alone also rescales a default warning limit.
    """
    if not overrides:
        return chart
    allowed = {"upper_limit", "trend_k", "direction", "warning_limit"}
    unknown = set(overrides) - allowed
    if unknown:
        raise DriftError(f"unknown chart settings: {sorted(unknown)}")
    changes = dict(overrides)
    if "upper_limit" in changes and "warning_limit" not in changes and chart.warning_limit is not None:
        if chart.direction == "rising" and changes.get("direction", "rising") == "rising":
            changes["warning_limit"] = chart.warning_limit / chart.upper_limit * float(changes["upper_limit"])
    return replace(chart, **changes)
