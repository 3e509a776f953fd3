"""Error vocabulary shared across the package.

Every failure mode that callers are expected to branch on gets its own
class; anything else surfaces as a plain ValueError/LinAlgError from the
underlying libraries.
"""


class LorpError(Exception):
    """Base class for all package-specific errors."""


class InvalidInputError(LorpError, ValueError):
    """Arguments outside an operation's stated domain."""


class NumericalFailureError(LorpError, RuntimeError):
    """A numerical routine produced results outside its guaranteed range
    (eigenvalue below tolerance, non-convergent fixed point, ...)."""


class SingularityError(LorpError):
    """A log-determinant or volume is infinite: alpha = 0 with a singular
    penalized loss matrix, or a degenerate ellipsoid axis."""


class DegenerateDataError(LorpError):
    """The observed response carries no signal to rank against (y = 0)."""


class FilterInapplicableError(LorpError):
    """Generic-direction filtering requested for a smoother that does not
    reproduce constants (M @ 1 != 1), or in a configuration where the
    constant direction is not an eigendirection."""


class NotAProjectionError(LorpError):
    """A matrix handed to the projective fast path is not idempotent."""


class OutsideValidityError(LorpError):
    """The closed-form minimizer does not exist for this (d, rho, n):
    the data fit is too poor for the penalized volume to have an interior
    minimum (requires 1 - rho > d/n)."""


class PerfectFitError(LorpError):
    """Residuals are (numerically) zero, so the score is unbounded below."""


class EnumerationBudgetError(LorpError):
    """An exact or grid enumeration would exceed the point budget."""


class IndeterminateRatioError(LorpError):
    """Monte-Carlo volume ratio undefined: one of the regions, or their
    intersection, received no hits."""


class DivergentSeriesError(LorpError):
    """Log-det series requested for a matrix with spectral radius >= 1."""


class InfiniteDivergenceError(LorpError):
    """KL divergence is infinite: q on the boundary without matching p."""


class SelectionError(LorpError):
    """Every candidate in a selection run failed to score."""


class DataError(LorpError):
    """Malformed input data (CSV structure, non-numeric cells, too few rows)."""
