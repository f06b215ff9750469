"""Exception types shared across the package.

Plain ``ValueError`` / ``IndexError`` are used for argument-domain problems;
the classes below mark failures of numerical or statistical preconditions
that callers may want to catch and handle (e.g. retry with regularization).
"""


class GrouError(Exception):
    """Base class for package-specific errors."""


class ConfigurationError(GrouError):
    """Inconsistent model configuration (shape/weight-stage mismatches)."""


class StationarityError(GrouError):
    """Operation requires a stationary (Hurwitz) system and none was given."""


class SingularityError(GrouError):
    """A matrix that must be invertible is singular or too ill-conditioned."""


class EstimationError(GrouError):
    """Estimation cannot proceed (insufficient or degenerate data)."""


class IngestionError(GrouError):
    """Raw data could not be turned into a usable input."""
