import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from driftmon.errors import DriftError, EmptySeries, NonFiniteValue, NonMonotoneWindow, UnknownMetric
from driftmon.monitoring import (
    TREND_ZONE,
    ChartStatus,
    ControlChart,
    MetricSeries,
    chart_with_overrides,
    default_chart_for,
    evaluate,
    record,
    worst_status,
)


def series_of(values, metric_id="covariate_drift/x", retention=10_000):
    s = MetricSeries(metric_id, retention)
    for i, v in enumerate(values):
        record(s, i, v)
    return s


def test_record_appends_in_order():
    s = series_of([0.1, 0.2])
    record(s, 5, 0.3)
    assert list(s.points) == [(0, 0.1), (1, 0.2), (5, 0.3)]


@pytest.mark.parametrize("window", [1, 0])
def test_record_rejects_non_increasing_window(window):
    s = series_of([0.1, 0.2])
    with pytest.raises(NonMonotoneWindow):
        record(s, window, 0.5)
    assert len(s) == 2


def test_record_rejects_non_finite():
    with pytest.raises(NonFiniteValue):
        record(MetricSeries("m"), 0, float("nan"))


def test_retention_drops_oldest():
    s = series_of([1, 2, 3, 4, 5], retention=3)
    assert s.values == [3, 4, 5]


def test_breach_on_latest_above_limit():
    assert evaluate(ControlChart(0.4), series_of([0.1, 0.15, 0.5])) is ChartStatus.BREACH


def test_at_limit_is_not_breach():
    assert evaluate(ControlChart(0.4), series_of([0.4])) is ChartStatus.IN_CONTROL


def test_trending_needs_k_consecutive_rises():
    chart = ControlChart(0.4, trend_k=3)
    assert evaluate(chart, series_of([0.1, 0.12, 0.14, 0.16])) is ChartStatus.TRENDING
    assert evaluate(chart, series_of([0.12, 0.14, 0.16])) is ChartStatus.IN_CONTROL
    assert evaluate(chart, series_of([0.1, 0.12, 0.12, 0.16])) is ChartStatus.IN_CONTROL


def test_trend_gated_by_warning_limit():
    chart = ControlChart(0.2, trend_k=3, warning_limit=0.15)
    assert evaluate(chart, series_of([0.01, 0.02, 0.03, 0.04])) is ChartStatus.IN_CONTROL
    assert evaluate(chart, series_of([0.1, 0.12, 0.14, 0.16])) is ChartStatus.TRENDING


def test_constant_series_in_control():
    assert evaluate(ControlChart(0.2), series_of([0.1] * 30)) is ChartStatus.IN_CONTROL


def test_empty_series():
    with pytest.raises(EmptySeries):
        evaluate(ControlChart(0.2), MetricSeries("m"))


def test_falling_chart():
    chart = default_chart_for("eddm", trend_k=3)
    assert evaluate(chart, series_of([1.0, 0.97, 0.9])) is ChartStatus.BREACH
    assert evaluate(chart, series_of([1.0, 0.99, 0.97, 0.94])) is ChartStatus.TRENDING
    assert evaluate(chart, series_of([1.0, 0.99, 0.98, 0.97])) is ChartStatus.IN_CONTROL
    assert evaluate(chart, series_of([0.93, 0.96])) is ChartStatus.IN_CONTROL


def test_default_charts():
    cd = default_chart_for("covariate_drift/age")
    assert (cd.upper_limit, cd.direction, cd.lower_limit) == (0.2, "rising", 0.0)
    assert cd.warning_limit == pytest.approx(TREND_ZONE * 0.2)
    assert default_chart_for("stability_index").upper_limit == 0.2
    ph = default_chart_for("page_hinkley", ph_lambda=12.0)
    assert ph.upper_limit == 12.0 and ph.warning_limit == pytest.approx(9.0)
    ed = default_chart_for("eddm")
    assert (ed.upper_limit, ed.direction) == (0.90, "falling")
    with pytest.raises(UnknownMetric):
        default_chart_for("accuracy")


def test_chart_overrides():
    chart = chart_with_overrides(default_chart_for("covariate_drift"), {"upper_limit": 0.4, "trend_k": 3})
    assert chart.upper_limit == 0.4 and chart.trend_k == 3
    assert chart.warning_limit == pytest.approx(0.3)
    with pytest.raises(DriftError):
        chart_with_overrides(chart, {"colour": "red"})


def test_chart_validation():
    for kwargs in ({"upper_limit": 0}, {"upper_limit": 0.2, "trend_k": 1},
                   {"upper_limit": 0.2, "direction": "sideways"}, {"upper_limit": 0.2, "lower_limit": 0.1}):
        with pytest.raises(DriftError):
            ControlChart(**kwargs)


def test_worst_status_and_labels():
    assert worst_status([]) is ChartStatus.IN_CONTROL
    assert worst_status([ChartStatus.TRENDING, ChartStatus.IN_CONTROL]) is ChartStatus.TRENDING
    assert ChartStatus.from_label("Breach") is ChartStatus.BREACH
    assert [s.label for s in ChartStatus] == ["InControl", "Trending", "Breach"]


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 200), st.integers(2, 10))
def test_all_zero_series_in_control(n, k):
    assert evaluate(ControlChart(0.2, trend_k=k), series_of([0.0] * n)) is ChartStatus.IN_CONTROL


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=30), st.floats(0.01, 1), st.floats(0.01, 1))
def test_raising_limit_never_worsens_status(values, a, b):
    low, high = sorted((a, b))
    s = series_of(values)
    assert evaluate(ControlChart(high), s) <= evaluate(ControlChart(low), s)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=30))
def test_breach_iff_latest_above_limit(values):
    status = evaluate(ControlChart(0.4, trend_k=3), series_of(values))
    assert (status is ChartStatus.BREACH) == (values[-1] > 0.4)


def test_hlnr_chart_uses_alarm_share():
    chart = default_chart_for("hlnr/TPR")
    assert (chart.upper_limit, chart.direction) == (0.5, "rising")
    assert evaluate(chart, series_of([0.3, 0.6], "hlnr/TPR")) is ChartStatus.BREACH
    assert evaluate(chart, series_of([0.3, 0.5], "hlnr/TPR")) is ChartStatus.IN_CONTROL
