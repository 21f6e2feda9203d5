"""Drift monitoring for deployed models: data drift metrics, concept drift detectors, control charts."""

__version__ = "0.1.0"

from .binning import (
    BinEdges,
    BinningSpec,
    Histogram,
    categorical_histogram,
    fit_binning,
    histogram,
    smooth,
)
from .concept import (
    ConfusionOutcome,
    EddmLevel,
    EddmState,
    HlnrState,
    PageHinkleyState,
    PredictionRecord,
    brier_score,
    eddm_update,
    hlnr_update,
    ph_update,
    rates_from_confusion,
)
from .divergence import (
    DriftLevel,
    KsReport,
    StabilityLevel,
    classify_covariate_drift,
    classify_stability,
    covariate_drift,
    js_distance,
    kl_divergence,
    ks_class_separation,
    ks_statistic,
    stability_index,
    wasserstein_1d,
)
from .monitoring import ChartStatus, ControlChart, MetricSeries, default_chart_for, evaluate, record
from .reference import BaselineSnapshot, FeatureSchema, build_baseline, load_baseline, save_baseline

__all__ = [
    "BaselineSnapshot",
    "BinEdges",
    "BinningSpec",
    "ChartStatus",
    "ConfusionOutcome",
    "ControlChart",
    "DriftLevel",
    "EddmLevel",
    "EddmState",
    "FeatureSchema",
    "Histogram",
    "HlnrState",
    "KsReport",
    "MetricSeries",
    "PageHinkleyState",
    "PredictionRecord",
    "StabilityLevel",
    "brier_score",
    "build_baseline",
    "categorical_histogram",
    "classify_covariate_drift",
    "classify_stability",
    "covariate_drift",
    "default_chart_for",
    "eddm_update",
    "evaluate",
    "fit_binning",
    "histogram",
    "hlnr_update",
    "js_distance",
    "kl_divergence",
    "ks_class_separation",
    "ks_statistic",
    "load_baseline",
    "ph_update",
    "rates_from_confusion",
    "record",
    "save_baseline",
    "smooth",
    "stability_index",
    "wasserstein_1d",
]
