"""Exception hierarchy shared by every hjlab module."""


class HJError(Exception):
    """Base class for all library errors."""


class ConfigError(HJError, ValueError):
    """Invalid user input or parameters (CLI exit code 2)."""


class ComputationError(HJError):
    """A solver or constructor could not produce a result (CLI exit code 3)."""


# hamiltonian
class UnknownFamily(ConfigError):
    pass


class SingularTransform(ConfigError):
    pass


class NotFound(ComputationError):
    pass


# initial_data
class OutsideDomain(ConfigError):
    pass


class EmptyInput(ConfigError):
    pass


# characteristics
class HorizonExceeded(ComputationError):
    pass


class NoConvergence(ComputationError):
    pass


# wavefront
class DegenerateParam(ComputationError):
    pass


class UnsupportedBranch(ConfigError):
    pass


class ResolutionTooCoarse(ComputationError):
    pass


class EmptyFiber(ComputationError):
    pass


# variational
class DomainViolation(ConfigError):
    pass


# viscosity
class NotConvex(ConfigError):
    pass


class CFLViolation(ConfigError):
    pass


class UnstableDetected(ComputationError):
    pass


# experiments
class NormalizationFailed(ComputationError):
    pass


class ShockSolverFailed(ComputationError):
    pass


class EmptyViolationInterval(ConfigError):
    pass


class WitnessGapNonpositive(ComputationError):
    pass


class AxisMismatch(ConfigError):
    pass
