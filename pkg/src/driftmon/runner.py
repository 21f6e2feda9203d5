"""Windowed monitoring of a live record stream against a baseline snapshot.

:class:`StreamMonitor` consumes NDJSON lines one at a time. Records are grouped
into count-based windows, and batch data-drift metrics run when a window
fills. Concept detectors update on every record that carries ``y_true``. Each
closed window yields one report dictionary (schema ``driftmon.report/1``).
Reports depend only on the input lines, never on wall-clock time.
"""

from __future__ import annotations

import json
import math
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field

import numpy as np

from . import binning, divergence
from .concept import (
    EddmLevel,
    EddmState,
    HlnrState,
    PageHinkleyState,
    PredictionRecord,
    brier_score,
    eddm_update,
    hlnr_update,
    outcome_of,
    ph_update,
    suggest_ph_threshold,
)
from .config import RunConfig
from .errors import DriftError, ParseFailure, SchemaMismatch, SingleClass, EmptyInput
from .monitoring import (
    ChartStatus,
    ControlChart,
    MetricSeries,
    chart_with_overrides,
    default_chart_for,
    evaluate,
    record,
    worst_status,
)
from .reference import BaselineSnapshot, FeatureBaseline, error_signal, to_float, to_label

REPORT_SCHEMA = "driftmon.report/1"
SUMMARY_SCHEMA = "driftmon.summary/1"
MAX_FEATURE = "__max__"

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_TRENDING = 3
EXIT_BREACH = 4

_EXIT_BY_STATUS = {
    ChartStatus.IN_CONTROL: EXIT_OK,
    ChartStatus.TRENDING: EXIT_TRENDING,
    ChartStatus.BREACH: EXIT_BREACH,
}


def exit_code_for(status: ChartStatus) -> int:
    return _EXIT_BY_STATUS[status]


class MalformedRecord(DriftError):
    pass


@dataclass
class _Window:
    index: int
    first_record: int | None = None
    last_record: int | None = None
    records: int = 0
    labeled: int = 0
    malformed: int = 0
    malformed_lines: list[int] = field(default_factory=list)
    values: dict[str, list] = field(default_factory=dict)
    labels: list[str | None] = field(default_factory=list)
    brier_records: list[PredictionRecord] = field(default_factory=list)
    ph_max: float | None = None
    ph_alarm: bool = False
    ph_dec_max: float | None = None
    ph_dec_alarm: bool = False
    eddm_min: float | None = None
    eddm_level: EddmLevel | None = None
    hlnr_alarms: dict = field(default_factory=dict)
    hlnr_updates: int = 0


def _round_trip(value: float | None) -> float | None:
    if value is None or not math.isfinite(value):
        return None
    return float(value)


class StreamMonitor:
    """Stateful window/charts/detector bundle for one monitored model."""

    def __init__(self, snapshot: BaselineSnapshot, config: RunConfig | None = None):
        self.snapshot = snapshot
        self.config = config or RunConfig()
        cfg = self.config
        self.features: dict[str, FeatureBaseline] = {n: fb for n, fb in snapshot.features.items() if fb.monitored}
        self.target = snapshot.column("target")
        self.prediction = snapshot.column("prediction")
        self.probability = snapshot.column("probability")
        self.classification = self.target is not None and self.target.kind == "categorical"
        self.positive = snapshot.positive_label
        self.known_keys = {f.name for f in snapshot.schema} | {"y_true", "y_pred", "y_prob"}

        self.ph_lambda = cfg.ph_lambda or suggest_ph_threshold(snapshot.error_std or 0.0)
        self.concept_enabled = snapshot.has_concept
        self.ph_inc = self.ph_dec = None
        self.eddm = None
        self.hlnr = None
        if self.concept_enabled:
            if cfg.enabled("page_hinkley"):
                self.ph_inc = PageHinkleyState(cfg.ph_alpha, self.ph_lambda, "increase", cfg.ph_mode)
                self.ph_dec = PageHinkleyState(cfg.ph_alpha, self.ph_lambda, "decrease", cfg.ph_mode)
            if cfg.enabled("eddm") and self.classification:
                self.eddm = EddmState(warmup_min_errors=cfg.eddm_warmup)
            if cfg.enabled("hlnr") and snapshot.confusion and self.positive is not None:
                c = snapshot.confusion
                try:
                    self.hlnr = HlnrState.from_confusion(
                        c["tn"], c["fp"], c["fn"], c["tp"], cfg.hlnr_eta0, cfg.hlnr_delta, cfg.hlnr_rates
                    )
                except DriftError:
                    self.hlnr = None

        self.series: dict[str, MetricSeries] = {}
        self.charts: dict[str, ControlChart] = {}
        self.record_index = 0
        self.line_number = 0
        self.window = _Window(0)
        self.worst = ChartStatus.IN_CONTROL
        self._checked_schema = False

    # -- charts ---------------------------------------------------------------

    def _chart(self, metric_id: str) -> ControlChart:
        chart = self.charts.get(metric_id)
        if chart is None:
            base = metric_id.split("/", 1)[0]
            chart = default_chart_for(base, ph_lambda=self.ph_lambda, trend_k=self.config.trend_k)
            chart = chart_with_overrides(chart, self.config.charts.get(base))
            chart = chart_with_overrides(chart, self.config.charts.get(metric_id))
            self.charts[metric_id] = chart
        return chart

    def _observe(self, metric_id: str, window: int, value: float | None, statuses: dict) -> None:
        if value is None:
            return
        series = self.series.get(metric_id)
        if series is None:
            series = self.series[metric_id] = MetricSeries(metric_id, self.config.retention)
        record(series, window, value)
        statuses[metric_id] = evaluate(self._chart(metric_id), series)

    # -- ingestion ------------------------------------------------------------

    def _parse(self, line: str) -> dict:
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedRecord(f"invalid JSON: {exc.msg}") from None
        if not isinstance(rec, dict):
            raise MalformedRecord("record is not a JSON object")
        if not self._checked_schema:
            self._checked_schema = True
            if not self.known_keys & set(rec):
                raise SchemaMismatch(f"record keys {sorted(rec)[:5]} match no baseline column")

        parsed: dict = {}
        for name, fb in self.features.items():
            raw = rec.get(name)
            if raw is None and fb.role == "prediction":
                raw = rec.get("y_pred")
            elif raw is None and fb.role == "probability":
                raw = rec.get("y_prob")
            if fb.kind == "numeric":
                try:
                    parsed[name] = to_float(raw)
                except (TypeError, ValueError):
                    raise MalformedRecord(f"{name}: non-numeric value {raw!r}") from None
            else:
                parsed[name] = to_label(raw)

        def pick(generic: str, column) -> object:
            if rec.get(generic) is not None:
                return rec[generic]
            return rec.get(column.name) if column is not None else None

        parsed["__y_true__"] = pick("y_true", self.target)
        parsed["__y_pred__"] = pick("y_pred", self.prediction)
        prob = pick("y_prob", self.probability)
        if prob is not None:
            try:
                prob = to_float(prob)
            except (TypeError, ValueError):
                raise MalformedRecord(f"y_prob: non-numeric value {prob!r}") from None
            if math.isnan(prob):
                prob = None
            elif not 0.0 <= prob <= 1.0:
                raise MalformedRecord(f"y_prob {prob!r} outside [0, 1]")
        parsed["__y_prob__"] = prob
        return parsed

    def feed(self, line: str) -> dict | None:
        """Ingest one NDJSON line; returns a report when it completes a window."""
        self.line_number += 1
        if not line.strip():
            return None
        w = self.window
        try:
            rec = self._parse(line)
        except MalformedRecord as exc:
            if self.config.strict:
                raise ParseFailure(str(exc), self.line_number) from None
            w.malformed += 1
            w.malformed_lines.append(self.line_number)
            return None

        if w.first_record is None:
            w.first_record = self.record_index
        w.last_record = self.record_index
        w.records += 1
        for name in self.features:
            w.values.setdefault(name, []).append(rec[name])
        truth = to_label(rec["__y_true__"]) if self.classification else rec["__y_true__"]
        w.labels.append(truth if self.classification else None)
        if rec["__y_true__"] is not None:
            w.labeled += 1
            self._update_concept(rec, self.record_index)
        self.record_index += 1
        if w.records >= self.config.window_size:
            return self._close(partial=False)
        return None

    def _update_concept(self, rec: Mapping, index: int) -> None:
        if not self.concept_enabled:
            return
        w = self.window
        y_true, y_pred, y_prob = rec["__y_true__"], rec["__y_pred__"], rec["__y_prob__"]
        if y_prob is not None and self.positive is not None and self.config.enabled("brier"):
            w.brier_records.append(PredictionRecord(y_pred, to_label(y_true), y_prob, index))
        if y_pred is None:
            return
        try:
            err = error_signal(y_true, y_pred, self.classification)
        except (TypeError, ValueError):
            err = None
        if err is None:
            return
        if self.ph_inc is not None:
            _, ph, alarm = ph_update(self.ph_inc, err)
            w.ph_max = ph if w.ph_max is None else max(w.ph_max, ph)
            w.ph_alarm |= alarm
            _, ph_dec, alarm_dec = ph_update(self.ph_dec, err)
            w.ph_dec_max = ph_dec if w.ph_dec_max is None else max(w.ph_dec_max, ph_dec)
            w.ph_dec_alarm |= alarm_dec
        if self.eddm is not None:
            _, value, level = eddm_update(self.eddm, err == 1.0)
            if value is not None:
                w.eddm_min = value if w.eddm_min is None else min(w.eddm_min, value)
                w.eddm_level = level if w.eddm_level is None else max(w.eddm_level, level)
        if self.hlnr is not None:
            _, alarms = hlnr_update(self.hlnr, outcome_of(to_label(y_true), to_label(y_pred), self.positive))
            w.hlnr_updates += 1
            for kind in alarms:
                w.hlnr_alarms[kind] = w.hlnr_alarms.get(kind, 0) + 1

    def finish(self) -> dict | None:
        """Close the trailing partial window, if it holds anything."""
        w = self.window
        if w.records == 0 and w.malformed == 0:
            return None
        return self._close(partial=True)

    def run(self, lines: Iterable[str]) -> Iterator[dict]:
        for line in lines:
            report = self.feed(line)
            if report is not None:
                yield report
        tail = self.finish()
        if tail is not None:
            yield tail

    # -- window evaluation -----------------------------------------------------

    def _feature_metrics(self, name: str, fb: FeatureBaseline, values: list, labels: list) -> dict:
        cfg = self.config
        out: dict = {"role": fb.role}
        total = len(values)
        if fb.kind == "numeric":
            arr = np.asarray(values, dtype=float)
            finite = arr[~np.isnan(arr)]
            out["missing_rate"] = float(np.isnan(arr).mean()) if total else 0.0
            n = int(finite.size)
        else:
            finite = [v for v in values if v is not None]
            out["missing_rate"] = (total - len(finite)) / total if total else 0.0
            n = len(finite)
        out["count"] = n
        for key in ("covariate_drift", "covariate_drift_level", "stability_index", "stability_level",
                    "js_distance", "wasserstein", "ks_delta"):
            out[key] = None
        if n == 0:
            return out

        if fb.kind == "numeric":
            live_cd = binning.histogram(finite, fb.cd_edges)
            live_si = binning.histogram(finite, fb.si_edges)
        else:
            live_cd = live_si = binning.categorical_histogram(finite, fb.vocabulary)

        if cfg.enabled("covariate_drift"):
            d = divergence.covariate_drift(fb.cd_hist, live_cd)
            out["covariate_drift"] = d
            out["covariate_drift_level"] = divergence.classify_covariate_drift(d).label
        if cfg.enabled("stability_index"):
            si = divergence.stability_index(binning.smooth(fb.si_hist, cfg.epsilon), binning.smooth(live_si, cfg.epsilon))
            out["stability_index"] = si
            out["stability_level"] = divergence.classify_stability(si).label
        if cfg.enabled("js_distance"):
            out["js_distance"] = divergence.js_distance(
                binning.smooth(fb.cd_hist, cfg.epsilon), binning.smooth(live_cd, cfg.epsilon)
            )
        if fb.kind == "numeric" and cfg.enabled("wasserstein") and fb.quantiles:
            live_q = divergence.quantile_sketch(finite, len(fb.quantiles))
            out["wasserstein"] = divergence.wasserstein_1d(fb.quantiles, live_q.tolist(), normalized=True)
        if fb.kind == "numeric" and cfg.enabled("ks_delta") and fb.ks_reports:
            pairs = [(v, t) for v, t in zip(values, labels) if t is not None and not math.isnan(v)]
            try:
                reports = divergence.ks_class_separation(
                    [v for v, _ in pairs], [t for _, t in pairs], reference=fb.ks_reports
                )
            except (SingleClass, EmptyInput):
                reports = []
            changes = [r.change for r in reports if r.change is not None]
            out["ks_delta"] = max(changes) if changes else None
        return out

    def _close(self, partial: bool) -> dict:
        w = self.window
        idx = w.index
        statuses: dict[str, ChartStatus] = {}
        features = {}
        for name, fb in self.features.items():
            features[name] = self._feature_metrics(name, fb, w.values.get(name, []), w.labels)
            if features[name]["count"] == 0:
                continue
            self._observe(f"covariate_drift/{name}", idx, features[name]["covariate_drift"], statuses)
            self._observe(f"stability_index/{name}", idx, features[name]["stability_index"], statuses)
        for metric in ("covariate_drift", "stability_index"):
            vals = [f[metric] for f in features.values() if f[metric] is not None]
            if vals:
                self._observe(f"{metric}/{MAX_FEATURE}", idx, max(vals), statuses)

        concept: dict = {"enabled": self.concept_enabled, "labeled": w.labeled}
        if self.concept_enabled:
            if self.ph_inc is not None:
                concept["page_hinkley"] = {
                    "value": self.ph_inc.value,
                    "max": w.ph_max,
                    "alarm": w.ph_alarm,
                    "threshold": self.ph_lambda,
                    "decrease_value": self.ph_dec.value,
                    "decrease_alarm": w.ph_dec_alarm,
                }
                self._observe("page_hinkley", idx, w.ph_max, statuses)
            brier = brier_score(w.brier_records, positive_label=self.positive) if w.brier_records else None
            concept["brier"] = brier
            if self.eddm is not None:
                concept["eddm"] = {
                    "value": self.eddm.last_value,
                    "min": w.eddm_min,
                    "level": w.eddm_level.label if w.eddm_level is not None else None,
                    "errors": self.eddm.error_count,
                }
                self._observe("eddm", idx, w.eddm_min, statuses)
            if self.hlnr is not None:
                concept["hlnr"] = {
                    "rates": dict(sorted(self.hlnr.rates.items())),
                    "eta": dict(sorted(self.hlnr.decays.items())),
                    "baselines": dict(sorted(self.hlnr.baselines.items())),
                    "alarms": sorted(w.hlnr_alarms),
                    "alarm_share": {
                        kind: (w.hlnr_alarms.get(kind, 0) / w.hlnr_updates if w.hlnr_updates else None)
                        for kind in sorted(self.hlnr.rates)
                    },
                }
                if w.hlnr_updates:
                    for kind in self.hlnr.rates:
                        share = w.hlnr_alarms.get(kind, 0) / w.hlnr_updates
                        self._observe(f"hlnr/{kind}", idx, share, statuses)

        verdict = worst_status(statuses.values())
        self.worst = max(self.worst, verdict)
        report = {
            "schema": REPORT_SCHEMA,
            "window": idx,
            "partial": partial,
            "first_record": w.first_record,
            "last_record": w.last_record,
            "records": w.records,
            "malformed": w.malformed,
            "malformed_lines": list(w.malformed_lines),
            "features": features,
            "concept": concept,
            "charts": {k: s.label for k, s in sorted(statuses.items())},
            "verdict": verdict.label,
        }
        self.window = _Window(idx + 1)
        return _sanitize(report)


def _sanitize(obj):
    if isinstance(obj, float):
        return _round_trip(obj)
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    return obj


def dumps_report(report: Mapping) -> str:
    return json.dumps(report, sort_keys=True, allow_nan=False)


# -- report summaries ---------------------------------------------------------


def summarize_reports(reports: Iterable[Mapping]) -> dict:
    """Collapse a stream of window reports into one summary document."""
    reports = list(reports)
    if not reports:
        raise EmptyInput("no reports to summarize")
    worst = ChartStatus.IN_CONTROL
    first_breach = first_trending = None
    series: dict[str, list] = {}
    latest_cd: dict[str, float] = {}
    for rep in reports:
        if rep.get("schema") != REPORT_SCHEMA:
            raise DriftError(f"unexpected report schema {rep.get('schema')!r}")
        window = rep["window"]
        status = ChartStatus.from_label(rep["verdict"])
        worst = max(worst, status)
        if status is ChartStatus.BREACH and first_breach is None:
            first_breach = window
        if status >= ChartStatus.TRENDING and first_trending is None:
            first_trending = window
        for name, metrics in rep.get("features", {}).items():
            for metric in ("covariate_drift", "stability_index", "js_distance", "wasserstein", "ks_delta"):
                value = metrics.get(metric)
                if value is not None:
                    series.setdefault(f"{metric}/{name}", []).append([window, value])
            if metrics.get("covariate_drift") is not None:
                latest_cd[name] = metrics["covariate_drift"]
        concept = rep.get("concept") or {}
        for key, value in (
            ("page_hinkley", (concept.get("page_hinkley") or {}).get("max")),
            ("brier", concept.get("brier")),
            ("eddm", (concept.get("eddm") or {}).get("min")),
        ):
            if value is not None:
                series.setdefault(key, []).append([window, value])
    ranking = [
        {"feature": name, "covariate_drift": value}
        for name, value in sorted(latest_cd.items(), key=lambda kv: (-kv[1], kv[0]))
    ]
    return {
        "schema": SUMMARY_SCHEMA,
        "windows": len(reports),
        "records": sum(r.get("records", 0) for r in reports),
        "malformed": sum(r.get("malformed", 0) for r in reports),
        "verdict": worst.label,
        "first_breach_window": first_breach,
        "first_trending_window": first_trending,
        "ranking": ranking,
        "series": dict(sorted(series.items())),
    }
