"""Exception types raised across the package."""


class SpinDiracError(Exception):
    """Base class for all package errors."""


class NonOrthogonal(SpinDiracError, ValueError):
    pass


class ParseError(SpinDiracError, ValueError):
    pass


class NotClosed(SpinDiracError, ValueError):
    pass


class NotOrientable(SpinDiracError, ValueError):
    pass


class DegenerateFace(SpinDiracError, ValueError):
    pass


class InvalidParameter(SpinDiracError, ValueError):
    pass


class DegenerateOneRing(SpinDiracError, ValueError):
    pass


class CurvatureMismatch(SpinDiracError, ValueError):
    pass


class SolverFailure(SpinDiracError, RuntimeError):
    """Eigensolver did not reach the requested residual.

    The achieved residual is kept on ``residual``.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class IncompleteBasis(SpinDiracError, ValueError):
    pass


class UnresolvedLambda1(SpinDiracError, ValueError):
    pass


class ZeroSpinor(SpinDiracError, ValueError):
    pass
