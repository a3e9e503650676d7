"""Exception types shared across the package."""


class SdamhError(Exception):
    """Base class for all package-specific errors."""


class InsufficientHistoryError(SdamhError):
    """Raised when an operation needs more past trades than the series holds."""


class VariantError(SdamhError):
    """Raised when an operation is asked to run on an unsupported model variant."""


class LikelihoodDomainError(SdamhError):
    """Trade-sign probability collapsed to 0/1 on too many observations.

    Carries the first offending trade index in ``trade_index``.
    """

    def __init__(self, message: str, trade_index: int):
        super().__init__(message)
        self.trade_index = trade_index


class BalancedWindowError(SdamhError):
    """Sign sum of an aggregation window is exactly zero; the ratio estimator is undefined."""


class AntitheticError(SdamhError):
    """Raised when mirroring an already-mirrored shock stream."""


class DegenerateSampleError(SdamhError):
    """A statistical test received a sample it cannot score (e.g. zero variance)."""


class IngestError(SdamhError):
    """Malformed input data. ``line`` holds the 1-based offending line when known."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message)
        self.line = line


class ConfigError(SdamhError):
    """Invalid run configuration; message lists every violation found."""
