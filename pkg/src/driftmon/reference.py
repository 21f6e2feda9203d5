"""Frozen training-data baseline: build, save, load.

The snapshot holds everything later monitoring needs, so training data never
has to be re-read. Per monitored feature it stores the bin edges and
histograms, the vocabulary or a quantile sketch, and the class-conditioned KS
reports. It also stores training error statistics, confusion counts and the
Brier score when the schema provides a target and a prediction.

On disk a snapshot is a single JSON document with a SHA-256 checksum over its
canonical serialization.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import binning
from .binning import BinEdges, Histogram, Vocabulary
from .concept import PredictionRecord, brier_score, outcome_of
from .divergence import KsReport, ks_class_separation, quantile_sketch
from .errors import (
    AllValuesIdentical,
    CorruptSnapshot,
    DriftError,
    EmptyDataset,
    EmptyInput,
    IoFailure,
    SchemaMismatch,
    VersionUnsupported,
)

FORMAT_NAME = "driftmon.baseline"
FORMAT_VERSION = 1

KINDS = ("numeric", "categorical")
ROLES = ("predictor", "target", "prediction", "probability", "ignore")
MONITORED_ROLES = ("predictor", "prediction", "probability")
MISSING_TOKENS = frozenset({"", "na", "nan", "null", "none"})


@dataclass(frozen=True)
class FeatureSchema:
    name: str
    kind: str = "numeric"
    role: str = "predictor"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaMismatch(f"{self.name}: unknown kind {self.kind!r}")
        if self.role not in ROLES:
            raise SchemaMismatch(f"{self.name}: unknown role {self.role!r}")
        if self.role == "probability" and self.kind != "numeric":
            raise SchemaMismatch(f"{self.name}: probability columns must be numeric")


def validate_schema(schema: Sequence[FeatureSchema]) -> None:
    names = [f.name for f in schema]
    if len(set(names)) != len(names):
        raise SchemaMismatch("duplicate column names in schema")
    for role in ("target", "prediction", "probability"):
        if sum(f.role == role for f in schema) > 1:
            raise SchemaMismatch(f"at most one {role} column is allowed")
    roles = {f.role for f in schema}
    if "probability" in roles and "target" not in roles:
        raise SchemaMismatch("a probability column requires a target column")


@dataclass(frozen=True)
class BaselineConfig:
    cd_bins: int = binning.COVARIATE_BINS
    si_bins: int = binning.STABILITY_BINS
    quantile_points: int = 100
    max_categories: int | None = None
    positive_label: str | None = None


@dataclass(frozen=True)
class FeatureBaseline:
    name: str
    kind: str
    role: str
    count: int
    missing_rate: float
    degenerate: bool = False
    cd_edges: BinEdges | None = None
    si_edges: BinEdges | None = None
    cd_hist: Histogram | None = None
    si_hist: Histogram | None = None
    vocabulary: tuple[str, ...] = ()
    quantiles: tuple[float, ...] = ()
    ks_reports: tuple[KsReport, ...] = ()

    @property
    def monitored(self) -> bool:
        return not self.degenerate and self.cd_hist is not None


@dataclass(frozen=True)
class BaselineSnapshot:
    schema: tuple[FeatureSchema, ...]
    features: dict[str, FeatureBaseline]
    row_count: int
    created_at: str
    config: BaselineConfig = field(default_factory=BaselineConfig)
    target_classes: tuple[str, ...] | None = None
    positive_label: str | None = None
    error_mean: float | None = None
    error_std: float | None = None
    confusion: dict[str, int] | None = None
    brier: float | None = None
    format_version: int = FORMAT_VERSION

    def column(self, role: str) -> FeatureSchema | None:
        return next((f for f in self.schema if f.role == role), None)

    @property
    def degenerate_features(self) -> list[str]:
        return [name for name, fb in self.features.items() if fb.degenerate]

    @property
    def has_concept(self) -> bool:
        return self.column("target") is not None and self.column("prediction") is not None


def is_missing(value) -> bool:
    if value is None:
        return True
    if isinstance(value, float):
        return math.isnan(value)
    if isinstance(value, str):
        return value.strip().lower() in MISSING_TOKENS
    return False


def to_float(value) -> float:
    """Parse a numeric cell; missing cells become NaN, garbage raises ``ValueError``."""
    if is_missing(value):
        return math.nan
    if isinstance(value, bool):
        return float(value)
    result = float(value)
    if math.isinf(result):
        raise ValueError(f"infinite value {value!r}")
    return result


def to_label(value) -> str | None:
    """Canonical string form of a categorical cell; ``1``, ``1.0`` and ``"1"`` agree."""
    if is_missing(value):
        return None
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float) and value.is_integer():
        return str(int(value))
    text = str(value).strip()
    try:
        number = float(text)
    except ValueError:
        return text
    if number.is_integer() and math.isfinite(number):
        return str(int(number))
    return text


def numeric_column(name: str, values: Sequence) -> np.ndarray:
    out = np.empty(len(values), dtype=float)
    for i, value in enumerate(values):
        try:
            out[i] = to_float(value)
        except (TypeError, ValueError):
            raise SchemaMismatch(f"column {name!r}: non-numeric value {value!r} at row {i + 1}") from None
    return out


def _choose_positive(classes: tuple[str, ...], configured: str | None) -> str | None:
    if configured is not None:
        label = to_label(configured)
        if label not in classes:
            raise SchemaMismatch(f"positive label {configured!r} not among target classes {classes}")
        return label
    if set(classes) <= {"0", "1"} and "1" in classes:
        return "1"
    if len(classes) == 2:
        return classes[-1]
    return None


def _build_feature(column: FeatureSchema, raw: Sequence, config: BaselineConfig, target: list[str | None] | None) -> FeatureBaseline:
    if column.kind == "categorical":
        labels = [to_label(v) for v in raw]
        vocab = Vocabulary.from_values(labels, config.max_categories).labels
        if not vocab:
            return FeatureBaseline(column.name, column.kind, column.role, 0, 1.0 if labels else 0.0, degenerate=True)
        hist = binning.categorical_histogram(labels, vocab)
        return FeatureBaseline(
            column.name, column.kind, column.role, hist.count, hist.missing_rate,
            degenerate=len(vocab) < 2, cd_hist=hist, si_hist=hist, vocabulary=vocab,
        )

    values = numeric_column(column.name, raw)
    finite = values[~np.isnan(values)]
    missing_rate = float(np.isnan(values).mean()) if values.size else 0.0
    try:
        cd_edges = binning.fit_binning(finite, config.cd_bins)
        si_edges = binning.fit_binning(finite, config.si_bins)
    except (AllValuesIdentical, EmptyInput):
        return FeatureBaseline(
            column.name, column.kind, column.role, int(finite.size), missing_rate,
            degenerate=True, cd_hist=binning.degenerate_histogram(values),
        )
    reports: tuple[KsReport, ...] = ()
    if target is not None and column.role == "predictor":
        pairs = [(v, t) for v, t in zip(values, target) if t is not None and not math.isnan(v)]
        if len({t for _, t in pairs}) >= 2:
            reports = tuple(ks_class_separation([v for v, _ in pairs], [t for _, t in pairs]))
    return FeatureBaseline(
        column.name, column.kind, column.role, int(finite.size), missing_rate,
        cd_edges=cd_edges, si_edges=si_edges,
        cd_hist=binning.histogram(values, cd_edges),
        si_hist=binning.histogram(values, si_edges),
        quantiles=tuple(quantile_sketch(finite, config.quantile_points).tolist()),
        ks_reports=reports,
    )


def error_signal(y_true, y_pred, classification: bool) -> float | None:
    """Per-prediction error fed to Page-Hinkley: 0/1 misclassification or absolute residual."""
    if classification:
        truth, pred = to_label(y_true), to_label(y_pred)
        if truth is None or pred is None:
            return None
        return 0.0 if truth == pred else 1.0
    truth, pred = to_float(y_true), to_float(y_pred)
    if math.isnan(truth) or math.isnan(pred):
        return None
    return abs(truth - pred)


def build_baseline(
    dataset: Mapping[str, Sequence],
    schema: Sequence[FeatureSchema],
    config: BaselineConfig | None = None,
    created_at: str | None = None,
) -> BaselineSnapshot:
    """Freeze the training distribution described by ``schema``.

    ``dataset`` maps column names to equal-length sequences of raw cells
    (strings, numbers or None). Constant or all-missing features are kept in
    the snapshot with ``degenerate=True`` and are skipped by drift metrics.
    """
    config = config or BaselineConfig()
    schema = tuple(schema)
    validate_schema(schema)
    missing_cols = [f.name for f in schema if f.name not in dataset]
    if missing_cols:
        raise SchemaMismatch(f"columns missing from dataset: {missing_cols}")
    lengths = {len(dataset[f.name]) for f in schema}
    if len(lengths) > 1:
        raise SchemaMismatch("columns have different lengths")
    n_rows = lengths.pop() if lengths else 0
    if n_rows == 0:
        raise EmptyDataset("dataset has no rows")

    target_spec = next((f for f in schema if f.role == "target"), None)
    pred_spec = next((f for f in schema if f.role == "prediction"), None)
    prob_spec = next((f for f in schema if f.role == "probability"), None)
    classification = target_spec is not None and target_spec.kind == "categorical"

    target_labels = None
    classes = None
    positive = None
    if classification:
        target_labels = [to_label(v) for v in dataset[target_spec.name]]
        classes = tuple(sorted({t for t in target_labels if t is not None}))
        if not classes:
            raise EmptyDataset(f"target column {target_spec.name!r} has no values")
        positive = _choose_positive(classes, config.positive_label)
    if prob_spec is not None and (not classification or len(classes) != 2 and config.positive_label is None):
        raise SchemaMismatch("a probability column requires a binary target (or an explicit positive label)")

    features = {
        f.name: _build_feature(f, list(dataset[f.name]), config, target_labels)
        for f in schema
        if f.role in MONITORED_ROLES
    }

    error_mean = error_std = None
    confusion = None
    brier = None
    if target_spec is not None and pred_spec is not None:
        truths, preds = list(dataset[target_spec.name]), list(dataset[pred_spec.name])
        errors = [e for e in (error_signal(t, p, classification) for t, p in zip(truths, preds)) if e is not None]
        if errors:
            arr = np.asarray(errors)
            error_mean, error_std = float(arr.mean()), float(arr.std())
        if classification and positive is not None:
            counts = {"tn": 0, "fp": 0, "fn": 0, "tp": 0}
            for t, p in zip(truths, preds):
                t, p = to_label(t), to_label(p)
                if t is None or p is None:
                    continue
                counts[outcome_of(t, p, positive).value.lower()] += 1
            confusion = counts
    if prob_spec is not None and positive is not None:
        records = []
        for i, (t, p) in enumerate(zip(target_labels, dataset[prob_spec.name])):
            prob = to_float(p)
            if t is not None and not math.isnan(prob):
                records.append(PredictionRecord(y_pred=None, y_true=t, y_prob=prob, timestamp=i))
        if records:
            brier = brier_score(records, positive_label=positive)

    return BaselineSnapshot(
        schema=schema,
        features=features,
        row_count=n_rows,
        created_at=created_at or datetime.now(timezone.utc).isoformat(timespec="seconds"),
        config=config,
        target_classes=classes,
        positive_label=positive,
        error_mean=error_mean,
        error_std=error_std,
        confusion=confusion,
        brier=brier,
    )


# -- serialization -------------------------------------------------------------


def _hist_to_dict(h: Histogram | None):
    if h is None:
        return None
    return {"labels": list(h.labels), "freqs": list(h.freqs), "count": h.count, "missing": h.missing, "degenerate": h.degenerate}


def _hist_from_dict(d) -> Histogram | None:
    if d is None:
        return None
    return Histogram(tuple(d["labels"]), tuple(d["freqs"]), d["count"], d["missing"], d["degenerate"])


def snapshot_to_dict(s: BaselineSnapshot) -> dict:
    features = {}
    for name, fb in s.features.items():
        features[name] = {
            "name": fb.name,
            "kind": fb.kind,
            "role": fb.role,
            "count": fb.count,
            "missing_rate": fb.missing_rate,
            "degenerate": fb.degenerate,
            "cd_edges": list(fb.cd_edges.edges) if fb.cd_edges else None,
            "si_edges": list(fb.si_edges.edges) if fb.si_edges else None,
            "cd_hist": _hist_to_dict(fb.cd_hist),
            "si_hist": _hist_to_dict(fb.si_hist),
            "vocabulary": list(fb.vocabulary),
            "quantiles": list(fb.quantiles),
            "ks_reports": [{"statistic": r.statistic, "group_pair": list(r.group_pair)} for r in fb.ks_reports],
        }
    return {
        "format_version": s.format_version,
        "created_at": s.created_at,
        "row_count": s.row_count,
        "schema": [{"name": f.name, "kind": f.kind, "role": f.role} for f in s.schema],
        "feature_order": list(s.features),
        "features": features,
        "config": {
            "cd_bins": s.config.cd_bins,
            "si_bins": s.config.si_bins,
            "quantile_points": s.config.quantile_points,
            "max_categories": s.config.max_categories,
            "positive_label": s.config.positive_label,
        },
        "target_classes": list(s.target_classes) if s.target_classes is not None else None,
        "positive_label": s.positive_label,
        "error_mean": s.error_mean,
        "error_std": s.error_std,
        "confusion": s.confusion,
        "brier": s.brier,
    }


def snapshot_from_dict(d: Mapping) -> BaselineSnapshot:
    features = {}
    for name in d["feature_order"]:
        f = d["features"][name]
        features[name] = FeatureBaseline(
            name=f["name"],
            kind=f["kind"],
            role=f["role"],
            count=f["count"],
            missing_rate=f["missing_rate"],
            degenerate=f["degenerate"],
            cd_edges=BinEdges(tuple(f["cd_edges"])) if f["cd_edges"] is not None else None,
            si_edges=BinEdges(tuple(f["si_edges"])) if f["si_edges"] is not None else None,
            cd_hist=_hist_from_dict(f["cd_hist"]),
            si_hist=_hist_from_dict(f["si_hist"]),
            vocabulary=tuple(f["vocabulary"]),
            quantiles=tuple(f["quantiles"]),
            ks_reports=tuple(KsReport(r["statistic"], tuple(r["group_pair"])) for r in f["ks_reports"]),
        )
    return BaselineSnapshot(
        schema=tuple(FeatureSchema(**f) for f in d["schema"]),
        features=features,
        row_count=d["row_count"],
        created_at=d["created_at"],
        config=BaselineConfig(**d["config"]),
        target_classes=tuple(d["target_classes"]) if d["target_classes"] is not None else None,
        positive_label=d["positive_label"],
        error_mean=d["error_mean"],
        error_std=d["error_std"],
        confusion=d["confusion"],
        brier=d["brier"],
        format_version=d["format_version"],
    )


def _canonical(payload: Mapping) -> bytes:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), allow_nan=False).encode("utf-8")


def dumps_baseline(snapshot: BaselineSnapshot) -> str:
    payload = snapshot_to_dict(snapshot)
    doc = {
        "format": FORMAT_NAME,
        "format_version": snapshot.format_version,
        "checksum": "sha256:" + hashlib.sha256(_canonical(payload)).hexdigest(),
        "snapshot": payload,
    }
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"


def loads_baseline(text: str) -> BaselineSnapshot:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorruptSnapshot(f"baseline is not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_NAME:
        raise CorruptSnapshot("not a driftmon baseline document")
    version = doc.get("format_version")
    if not isinstance(version, int) or version > FORMAT_VERSION or version < 1:
        raise VersionUnsupported(f"baseline format_version {version!r} is not supported (max {FORMAT_VERSION})")
    payload = doc.get("snapshot")
    if not isinstance(payload, dict):
        raise CorruptSnapshot("baseline has no snapshot body")
    expected = "sha256:" + hashlib.sha256(_canonical(payload)).hexdigest()
    if doc.get("checksum") != expected:
        raise CorruptSnapshot("baseline checksum mismatch")
    try:
        return snapshot_from_dict(payload)
    except (KeyError, TypeError, DriftError) as exc:
        raise CorruptSnapshot(f"baseline body is malformed: {exc}") from None


def save_baseline(snapshot: BaselineSnapshot, path: str | os.PathLike) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(dumps_baseline(snapshot))
    except OSError as exc:
        raise IoFailure(f"cannot write baseline to {path}: {exc}") from exc


def load_baseline(path: str | os.PathLike) -> BaselineSnapshot:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise IoFailure(f"cannot read baseline {path}: {exc}") from exc
    return loads_baseline(text)
