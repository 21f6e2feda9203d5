"""Run configuration for the ``driftmon`` CLI.

Settings come from a JSON file, then from ``DRIFTMON_*`` environment
variables, then from command-line flags, each layer overriding the previous.
Nested keys use a double underscore in the environment, for example
``DRIFTMON_CHARTS__COVARIATE_DRIFT__UPPER_LIMIT=0.3`` or
``DRIFTMON_METRICS__JS_DISTANCE=false``.
"""

from __future__ import annotations

import json
import os
from collections.abc import Mapping
from dataclasses import asdict, dataclass, field, fields

from .concept import RATE_KINDS
from .errors import DriftError

ENV_PREFIX = "DRIFTMON_"

METRICS = (
    "covariate_drift",
    "stability_index",
    "js_distance",
    "wasserstein",
    "ks_delta",
    "page_hinkley",
    "brier",
    "eddm",
    "hlnr",
)


@dataclass
class RunConfig:
    window_size: int = 500
    epsilon: float = 1e-4
    metrics: dict[str, bool] = field(default_factory=lambda: {m: True for m in METRICS})
    charts: dict[str, dict] = field(default_factory=dict)
    trend_k: int = 5
    retention: int = 10_000
    cd_bins: int = 20
    si_bins: int = 10
    quantile_points: int = 100
    ph_alpha: float = 0.005
    ph_lambda: float | None = None
    ph_mode: str = "weighted"
    hlnr_eta0: float = 0.9
    hlnr_delta: float = 0.05
    hlnr_rates: tuple[str, ...] = RATE_KINDS
    eddm_warmup: int = 30
    strict: bool = False

    def __post_init__(self):
        merged = {m: True for m in METRICS}
        for key, value in dict(self.metrics).items():
            if key not in METRICS:
                raise DriftError(f"unknown metric toggle {key!r}")
            merged[key] = bool(value)
        self.metrics = merged
        self.hlnr_rates = tuple(self.hlnr_rates)
        if self.window_size < 1:
            raise DriftError("window_size must be >= 1")
        if not self.epsilon > 0:
            raise DriftError("epsilon must be > 0")
        if self.trend_k < 2:
            raise DriftError("trend_k must be >= 2")
        if self.cd_bins < 2 or self.si_bins < 2:
            raise DriftError("bin counts must be >= 2")
        if self.quantile_points < 1:
            raise DriftError("quantile_points must be >= 1")
        if self.ph_alpha < 0:
            raise DriftError("ph_alpha must be >= 0")
        if self.ph_lambda is not None and not self.ph_lambda > 0:
            raise DriftError("ph_lambda must be > 0")
        if self.ph_mode not in ("weighted", "cumulative"):
            raise DriftError("ph_mode must be 'weighted' or 'cumulative'")
        if not 0 < self.hlnr_eta0 <= 1:
            raise DriftError("hlnr_eta0 must lie in (0, 1]")
        if self.hlnr_delta < 0:
            raise DriftError("hlnr_delta must be >= 0")
        if any(r not in RATE_KINDS for r in self.hlnr_rates):
            raise DriftError(f"hlnr_rates must be drawn from {RATE_KINDS}")
        if self.eddm_warmup < 1:
            raise DriftError("eddm_warmup must be >= 1")

    def enabled(self, metric: str) -> bool:
        return self.metrics.get(metric, False)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hlnr_rates"] = list(self.hlnr_rates)
        return d


def _parse_env_value(raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def env_overrides(environ: Mapping[str, str] | None = None) -> dict:
    environ = os.environ if environ is None else environ
    known = {f.name for f in fields(RunConfig)}
    out: dict = {}
    for key, raw in sorted(environ.items()):
        if not key.startswith(ENV_PREFIX):
            continue
        path = key[len(ENV_PREFIX):].lower().split("__")
        if path[0] not in known:
            raise DriftError(f"unknown configuration variable {key}")
        value = _parse_env_value(raw)
        if path[0] == "hlnr_rates" and isinstance(value, str):
            value = [v.strip().upper() for v in value.split(",") if v.strip()]
        node = out
        for part in path[:-1]:
            node = node.setdefault(part, {})
        node[path[-1]] = value
    return out


def _merge(base: dict, extra: Mapping) -> dict:
    merged = dict(base)
    for key, value in extra.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), Mapping):
            merged[key] = _merge(dict(merged[key]), value)
        else:
            merged[key] = value
    return merged


def load_config(path: str | os.PathLike | None = None, environ: Mapping[str, str] | None = None, **overrides) -> RunConfig:
    data: dict = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise DriftError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise DriftError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise DriftError("config file must hold a JSON object")
    data = _merge(data, env_overrides(environ))
    data = _merge(data, {k: v for k, v in overrides.items() if v is not None})
    known = {f.name for f in fields(RunConfig)}
    unknown = set(data) - known
    if unknown:
        raise DriftError(f"unknown configuration keys: {sorted(unknown)}")
    try:
        return RunConfig(**data)
    except TypeError as exc:
        raise DriftError(f"invalid configuration: {exc}") from exc
