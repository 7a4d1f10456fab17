"""Exception hierarchy shared by all modules."""


class FlagTomoError(Exception):
    """Base class for library errors."""


class InvalidParameter(FlagTomoError, ValueError):
    """A body or quadrature parameter is out of its admissible range."""


class DegenerateFrame(FlagTomoError):
    """The East reference on a great circle is undefined (direction at the pole)."""


class NearPoleSingularity(FlagTomoError):
    """Rotation-derivative coefficients blow up because cos(nu) vanishes."""


class InsufficientSmoothness(FlagTomoError):
    """The support function is not smooth enough for the requested operation."""


class NegativeRadius(FlagTomoError):
    """A projection curvature radius is negative beyond tolerance (non-convex input)."""


class NonSmooth(FlagTomoError):
    """Finite-difference gradient estimates disagree beyond tolerance."""


class StepTooLarge(FlagTomoError):
    """A Richardson pair of finite-difference estimates disagrees too much."""


class PoleDivergence(FlagTomoError):
    """The pole integrand of the reconstruction does not stay bounded.

    ``c1`` is the fitted coefficient of the ``cos(nu)`` term of the inner
    double integral near the pole; a nonzero value signals data that fails
    the belt-derivative condition.
    """

    def __init__(self, message, c1=float("nan"), direction=None):
        super().__init__(message)
        self.c1 = c1
        self.direction = direction


class QuadratureUnderresolved(FlagTomoError):
    """Halving the quadrature resolution moved the result by too much."""


class IllConditioned(FlagTomoError):
    """A least-squares system is rank deficient."""
