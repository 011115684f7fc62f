class PCSFError(Exception):
    """
    Base class for every failure the simulator reports. The class attribute
    exit_code is what the command line returns when the error reaches it.
    """
    exit_code = 1


class NumericalError(PCSFError):
    exit_code = 1


class ResolutionError(NumericalError):
    """Grid too coarse for the requested mode radius."""


class RealityError(NumericalError):
    """Conjugate symmetry coeffs(-n) = conj(coeffs(n)) violated."""


class ConvexityLostError(NumericalError):
    """Non-positive curvature sample on the evaluation grid."""


class StepUnderflowError(NumericalError):
    pass


class MaxStepsExceededError(NumericalError):
    pass


class FitError(NumericalError):
    pass


class DomainError(NumericalError):
    pass


class ConfigError(PCSFError):
    exit_code = 2


class ConvexityViolationError(ConfigError):
    """Support function with h + h'' <= 0 somewhere."""


class OutputError(PCSFError):
    exit_code = 3
