"""Exception hierarchy shared across the package.

Every error this package raises deliberately derives from
:class:`VarauxError`, so callers can catch one type at the boundary.
The CLI maps these onto exit codes: bad input or malformed files exit
with 2, degenerate data and failed runs exit with 3.
"""


class VarauxError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(VarauxError, ValueError):
    """An argument violates a documented precondition."""


class PopulationFormatError(InvalidInputError):
    """A population CSV or moment-table JSON file does not conform to its format."""


class InvalidSpecError(InvalidInputError):
    """A synthetic-population spec is unusable (bad marginal, non-PD correlations, ...)."""


class InvalidDesignError(VarauxError):
    """A sampling design violates its structural constraints (sizes, nesting)."""


class DegeneratePopulationError(VarauxError):
    """A population variate has zero variance where a positive one is required."""


class DegenerateSampleError(VarauxError):
    """A drawn sample has zero variance in a variate an estimator divides by."""


class NoUniqueOptimumError(VarauxError):
    """The combined-weight objective is flat, so no unique optimal weight exists."""


class SimulationError(VarauxError):
    """A simulation run could not produce a trustworthy report."""
