"""Exception hierarchy shared by every driftmon module."""


class DriftError(ValueError):
    """Base class for all driftmon errors."""


class EmptyInput(DriftError):
    pass


class AllValuesIdentical(DriftError):
    """Raised when a numeric feature has zero range and cannot be binned."""


class LabelMismatch(DriftError):
    pass


class ZeroBin(DriftError):
    """A log-based metric hit a zero-frequency bin; smooth the histograms first."""


class ZeroBinInQ(ZeroBin):
    pass


class OutOfRange(DriftError):
    pass


class NegativeInput(DriftError):
    pass


class LengthMismatch(DriftError):
    pass


class SingleClass(DriftError):
    pass


class NotInitialized(DriftError):
    pass


class NonFiniteError(DriftError):
    pass


class MissingProbability(DriftError):
    pass


class ZeroDenominator(DriftError):
    pass


class NonMonotoneWindow(DriftError):
    pass


class NonFiniteValue(DriftError):
    pass


class EmptySeries(DriftError):
    pass


class UnknownMetric(DriftError):
    pass


class SchemaMismatch(DriftError):
    pass


class EmptyDataset(DriftError):
    pass


class ParseFailure(DriftError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class IoFailure(DriftError):
    pass


class VersionUnsupported(DriftError):
    pass


class CorruptSnapshot(DriftError):
    pass
