"""Exception hierarchy.

Two broad classes matter for the CLI exit-code contract:
``ValidationError`` (bad input, exit code 2) and ``NumericalError``
(a computation cannot proceed or has no solution, exit code 3).
"""


class BpreLabError(Exception):
    """Base class for all package errors."""


class ValidationError(BpreLabError):
    """Invalid input: bad vectors, parameters, files, or preconditions."""


class NumericalError(BpreLabError):
    """A numerical procedure failed or the requested quantity does not exist."""


# -- input / precondition violations ---------------------------------------

class NegativeMass(ValidationError):
    """A probability entry is below -1e-15."""


class BadNormalization(ValidationError):
    """A probability vector does not sum to 1 within tolerance."""


class BadParams(ValidationError):
    """Fractional-linear parameters violate their constraints."""


class DomainError(ValidationError):
    """Argument outside the mathematical domain of the operation."""


class ZeroMean(ValidationError):
    """Negative-power moment requested for an offspring law with mean 0."""


class TruncationTooSmall(ValidationError):
    """State-space truncation too small for the request."""


class DimensionMismatch(ValidationError):
    """Kernel and distribution truncations disagree."""


class ExtinctionMass(ValidationError):
    """Operation requires zero mass at population 0."""


class ExtinctionPossible(ValidationError):
    """Operation requires every offspring law to have p0 = 0."""


class NotSupercritical(ValidationError):
    """E log m0 <= 0; the process does not grow."""


class NotFractionalLinear(ValidationError):
    """Operation is only defined for fractional-linear environments."""


# -- numerical failures -----------------------------------------------------

class DegenerateGamma(NumericalError):
    """Single-child probability is degenerate (0 or 1) or a denominator vanished."""


class Degenerate(NumericalError):
    """Root-finding input is degenerate."""


class NoRoot(NumericalError):
    """The defining equation has no solution in the search range."""
