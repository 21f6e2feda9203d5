"""Streaming concept drift detectors fed with per-prediction outcomes.

Detector states are small mutable dataclasses. The ``*_update`` functions
advance a state in place and return it along with the step's outputs. That
lets callers write ``state, value, alarm = ph_update(state, e)`` without
caring whether the state was copied. Every state has ``reset()`` for use after
the model is retrained.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from enum import Enum, IntEnum

from .errors import (
    DriftError,
    EmptyInput,
    MissingProbability,
    NonFiniteError,
    NotInitialized,
    ZeroDenominator,
)

RATE_KINDS = ("TPR", "TNR", "PPV", "NPV")


@dataclass(frozen=True)
class PredictionRecord:
    y_pred: object
    y_true: object = None
    y_prob: float | None = None
    timestamp: int = 0

    def __post_init__(self):
        if self.y_prob is not None and not 0.0 <= self.y_prob <= 1.0:
            raise DriftError(f"y_prob must lie in [0, 1], got {self.y_prob!r}")

    @property
    def labeled(self) -> bool:
        return self.y_true is not None


# -- Page-Hinkley ------------------------------------------------------------


@dataclass
class PageHinkleyState:
    """Page-Hinkley accumulator.

    ``mode="weighted"`` applies the recency weight ``(t-1)/t`` to the previous
    cumulative deviation. ``mode="cumulative"`` keeps the plain running sum of
    ``e_i - mean_i - alpha``. With ``direction="decrease"`` the tolerance
    flips sign, the running maximum replaces the minimum, and the statistic
    becomes ``M - L``.
    """

    alpha: float = 0.005
    lambda_threshold: float = 50.0
    direction: str = "increase"
    mode: str = "weighted"
    t: int = 0
    err_mean: float = 0.0
    L: float = 0.0
    M: float | None = None

    def __post_init__(self):
        if self.alpha < 0:
            raise DriftError("alpha must be >= 0")
        if not self.lambda_threshold > 0:
            raise DriftError("lambda_threshold must be > 0")
        if self.direction not in ("increase", "decrease"):
            raise DriftError(f"unknown direction {self.direction!r}")
        if self.mode not in ("weighted", "cumulative"):
            raise DriftError(f"unknown mode {self.mode!r}")

    @property
    def value(self) -> float:
        if self.M is None:
            return 0.0
        return self.L - self.M if self.direction == "increase" else self.M - self.L

    def reset(self) -> None:
        self.t = 0
        self.err_mean = 0.0
        self.L = 0.0
        self.M = None


def ph_update(state: PageHinkleyState, error: float) -> tuple[PageHinkleyState, float, bool]:
    """Feed one error; returns ``(state, PH_t, PH_t >= lambda)``."""
    if state is None:
        raise NotInitialized("Page-Hinkley state has not been initialised")
    error = float(error)
    if not math.isfinite(error):
        raise NonFiniteError(f"non-finite error {error!r}")
    state.t += 1
    t = state.t
    state.err_mean += (error - state.err_mean) / t
    sign = 1.0 if state.direction == "increase" else -1.0
    carry = state.L * (t - 1) / t if state.mode == "weighted" else state.L
    state.L = carry + (error - state.err_mean - sign * state.alpha)
    if state.M is None:
        state.M = state.L
    elif state.direction == "increase":
        state.M = min(state.M, state.L)
    else:
        state.M = max(state.M, state.L)
    ph = state.value
    return state, ph, ph >= state.lambda_threshold


def suggest_ph_threshold(train_error_std: float, multiplier: float = 50.0) -> float:
    """Alarm threshold scaled from the error spread seen at training time."""
    if not train_error_std > 0 or not math.isfinite(train_error_std):
        return multiplier
    return multiplier * train_error_std


# -- Brier ---------------------------------------------------------------------


def _binary(value, positive_label) -> float:
    if positive_label is not None:
        return 1.0 if str(value) == str(positive_label) else 0.0
    if isinstance(value, bool):
        return float(value)
    try:
        y = float(value)
    except (TypeError, ValueError):
        raise DriftError(f"binary target expected, got {value!r}") from None
    if y not in (0.0, 1.0):
        raise DriftError(f"binary target expected, got {value!r}")
    return y


def brier_score(records: Iterable[PredictionRecord], positive_label=None) -> float:
    """Mean squared gap between ``y_prob`` and the 0/1 outcome.

    Targets must already be 0/1 unless ``positive_label`` is given, in which
    case the score is one-vs-rest for that class.
    """
    total = 0.0
    n = 0
    for rec in records:
        if rec.y_prob is None:
            raise MissingProbability(f"record at t={rec.timestamp} has no y_prob")
        if rec.y_true is None:
            raise DriftError(f"record at t={rec.timestamp} has no y_true")
        total += (_binary(rec.y_true, positive_label) - float(rec.y_prob)) ** 2
        n += 1
    if n == 0:
        raise EmptyInput("brier_score needs at least one record")
    return total / n


# -- EDDM ----------------------------------------------------------------------


class EddmLevel(IntEnum):
    NORMAL = 0
    WARNING = 1
    DRIFT = 2

    @property
    def label(self) -> str:
        return self.name.capitalize()


def classify_eddm(value: float) -> EddmLevel:
    if value > 0.95:
        return EddmLevel.NORMAL
    if value > 0.90:
        return EddmLevel.WARNING
    return EddmLevel.DRIFT


@dataclass
class EddmState:
    """Early drift detection on the spacing between consecutive errors.

    Distances are measured in stream positions, so back-to-back errors are 1
    apart. The maxima start being tracked once ``warmup_min_errors`` errors have
    been seen, and no value is reported before that.
    """

    warmup_min_errors: int = 30
    t: int = 0
    error_count: int = 0
    last_error_index: int = 0
    dist_mean: float = 0.0
    dist_var_acc: float = 0.0
    best_mean: float | None = None
    best_std: float | None = None
    last_value: float | None = None
    level: EddmLevel = EddmLevel.NORMAL

    @property
    def dist_std(self) -> float:
        if self.error_count == 0:
            return 0.0
        return math.sqrt(max(self.dist_var_acc, 0.0) / self.error_count)

    def reset(self) -> None:
        warmup = self.warmup_min_errors
        self.__init__(warmup_min_errors=warmup)


def eddm_update(state: EddmState, is_error: bool) -> tuple[EddmState, float | None, EddmLevel]:
    """Advance one prediction. The value and level only change on errors."""
    if state is None:
        raise NotInitialized("EDDM state has not been initialised")
    state.t += 1
    if not is_error:
        return state, state.last_value, state.level

    state.error_count += 1
    distance = state.t - state.last_error_index
    state.last_error_index = state.t
    delta = distance - state.dist_mean
    state.dist_mean += delta / state.error_count
    state.dist_var_acc = max(0.0, state.dist_var_acc + delta * (distance - state.dist_mean))

    if state.error_count < state.warmup_min_errors:
        return state, None, state.level

    mean, std = state.dist_mean, state.dist_std
    current = mean + 2.0 * std
    if state.best_mean is None or current > state.best_mean + 2.0 * state.best_std:
        state.best_mean, state.best_std = mean, std
    value = current / (state.best_mean + 2.0 * state.best_std)
    level = classify_eddm(value)
    if level is EddmLevel.DRIFT:
        state.best_mean, state.best_std = mean, std
    state.last_value, state.level = value, level
    return state, value, level


# -- Confusion-matrix rates and HLnR ------------------------------------------


class ConfusionOutcome(Enum):
    TP = "TP"
    TN = "TN"
    FP = "FP"
    FN = "FN"


def outcome_of(y_true, y_pred, positive_label="1") -> ConfusionOutcome:
    actual = str(y_true) == str(positive_label)
    predicted = str(y_pred) == str(positive_label)
    if actual:
        return ConfusionOutcome.TP if predicted else ConfusionOutcome.FN
    return ConfusionOutcome.FP if predicted else ConfusionOutcome.TN


def rates_from_confusion(tn: int, fp: int, fn: int, tp: int, strict: bool = False) -> dict[str, float | None]:
    """TPR, TNR, PPV and NPV. A rate with a zero denominator is ``None``,
    or raises :class:`ZeroDenominator` when ``strict``."""
    if min(tn, fp, fn, tp) < 0:
        raise DriftError("confusion counts must be non-negative")
    parts = {
        "TPR": (tp, tp + fn),
        "TNR": (tn, tn + fp),
        "PPV": (tp, tp + fp),
        "NPV": (tn, tn + fn),
    }
    rates: dict[str, float | None] = {}
    for kind, (num, den) in parts.items():
        if den == 0:
            if strict:
                raise ZeroDenominator(f"{kind} is undefined: zero denominator")
            rates[kind] = None
        else:
            rates[kind] = num / den
    return rates


# outcome -> {rate kind: indicator}
_HLNR_EVENTS = {
    ConfusionOutcome.TP: {"TPR": 1.0, "PPV": 1.0},
    ConfusionOutcome.FN: {"TPR": 0.0, "NPV": 0.0},
    ConfusionOutcome.TN: {"TNR": 1.0, "NPV": 1.0},
    ConfusionOutcome.FP: {"TNR": 0.0, "PPV": 0.0},
}


@dataclass
class HlnrState:
    """Exponentially weighted confusion-matrix rates with adaptive decay.

    ``eta_floor`` keeps each decay strictly positive; the decreasing branch of
    the decay recursion can otherwise cross zero once a decay falls below 0.5.
    """

    rates: dict[str, float]
    decays: dict[str, float]
    baselines: dict[str, float]
    delta_alarm: float = 0.05
    eta_floor: float = 0.01
    initial_eta: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if set(self.rates) != set(self.decays) or set(self.rates) != set(self.baselines):
            raise DriftError("rates, decays and baselines must cover the same rate kinds")
        for kind in self.rates:
            if kind not in RATE_KINDS:
                raise DriftError(f"unknown rate kind {kind!r}")
            if not 0.0 <= self.rates[kind] <= 1.0:
                raise DriftError(f"{kind} must lie in [0, 1]")
            if not 0.0 < self.decays[kind] <= 1.0:
                raise DriftError(f"decay for {kind} must lie in (0, 1]")
        if not self.initial_eta:
            self.initial_eta = dict(self.decays)

    @classmethod
    def from_confusion(
        cls,
        tn: int,
        fp: int,
        fn: int,
        tp: int,
        eta0: float = 0.9,
        delta_alarm: float = 0.05,
        kinds: Iterable[str] = RATE_KINDS,
    ) -> "HlnrState":
        """Seed every requested, defined rate from training-time confusion counts."""
        computed = rates_from_confusion(tn, fp, fn, tp)
        rates = {k: computed[k] for k in kinds if computed.get(k) is not None}
        if not rates:
            raise NotInitialized("no monitored rate is defined by the confusion counts")
        return cls(
            rates=dict(rates),
            decays={k: eta0 for k in rates},
            baselines=dict(rates),
            delta_alarm=delta_alarm,
        )

    def alarms(self) -> list[str]:
        return [k for k in RATE_KINDS if k in self.rates and self.rates[k] < self.baselines[k] - self.delta_alarm]

    def reset(self, baselines: Mapping[str, float] | None = None) -> None:
        if baselines is not None:
            self.baselines = {k: float(baselines[k]) for k in self.rates}
        self.rates = dict(self.baselines)
        self.decays = dict(self.initial_eta)


def hlnr_update(state: HlnrState, outcome: ConfusionOutcome) -> tuple[HlnrState, list[str]]:
    """Update the rates whose defining outcomes include ``outcome``; returns the alarmed kinds."""
    if state is None:
        raise NotInitialized("HLnR state has not been initialised")
    for kind, indicator in _HLNR_EVENTS[outcome].items():
        if kind not in state.rates:
            continue
        prev, eta = state.rates[kind], state.decays[kind]
        current = eta * prev + (1.0 - eta) * indicator
        step = current - prev
        if current >= prev:
            new_eta = (eta - 1.0) * math.exp(-step) + 1.0
        else:
            new_eta = (1.0 - eta) * math.exp(step) + (2.0 * eta - 1.0)
        state.rates[kind] = min(1.0, max(0.0, current))
        state.decays[kind] = max(state.eta_floor, new_eta)
    return state, state.alarms()
