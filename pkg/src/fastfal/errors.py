"""Exception hierarchy shared across the simulator.

Two branches matter for the CLI exit-code contract: ConfigError (bad
experiment setup, exit 2) and DataError (bad or corrupt input data,
exit 3). Everything else is a plain FalError (exit 1).
"""


class FalError(Exception):
    """Base class for all simulator errors."""


class ConfigError(FalError):
    """Invalid experiment configuration or infeasible setup request."""


class DataError(FalError):
    """Problem with an input data file or its contents."""


class FormatError(DataError):
    """File does not follow the expected binary layout."""


class CorruptionError(DataError):
    """File payload is truncated or otherwise inconsistent with its header."""


class StoreValidationError(DataError):
    """Embedding store content violates an invariant (label range, NaN, ...)."""


class GenerationError(ConfigError):
    """Synthetic data generation cannot satisfy the requested geometry."""


class InfeasibleError(ConfigError):
    """Partitioning or allocation request that no assignment can satisfy."""


class PropagationError(FalError):
    """Label propagation invoked without any labeled seed samples."""


class DegenerateInputError(FalError):
    """Numerically degenerate input, e.g. a zero-norm embedding."""


class ScoringError(FalError):
    """Uncertainty scoring received an invalid similarity vector."""


class BudgetError(FalError):
    """An operation would push oracle consumption past the global budget."""
