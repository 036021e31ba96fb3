"""Exception hierarchy shared by all modules."""


class PressureLabError(Exception):
    """Base class for all library errors."""


class ConfigurationError(PressureLabError, ValueError):
    """Malformed grid, config or parameter."""


class ResolutionError(PressureLabError, ValueError):
    """Requested frequency level or shell is not representable on the grid."""


class EmptyBlockError(PressureLabError, ValueError):
    """A dyadic block that must be nonzero vanished."""


class DegenerateFitError(PressureLabError, ValueError):
    """Decay-exponent fit on too few levels or on a zero block."""


class PreconditionError(PressureLabError, ValueError):
    """Input violates a hypothesis required by the operation."""


class NonEllipticError(PressureLabError, ValueError):
    """Sharp symbol never satisfies the ellipticity lower bound on the lattice."""


class NumericalFailure(PressureLabError, RuntimeError):
    """Iterative solver failed to converge.

    Attributes
    ----------
    history : list of float
        Relative residual after each iteration.
    """

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history or [])
