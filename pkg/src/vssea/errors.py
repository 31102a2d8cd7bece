"""Exception hierarchy shared by the solver, mechanism and simulation layers."""


class VsseaError(Exception):
    """Base class for every error raised by this package."""


class NoConvergence(VsseaError):
    pass


class SlopeOutOfRange(VsseaError):
    """Tip slope bracket reached pi/2: load too large for the elastica model."""


class QuadratureFailure(VsseaError):
    pass


class DeflectionUnreachable(VsseaError):
    pass


class DeflectionLimitExceeded(VsseaError):
    pass


class InfeasibleGeometry(VsseaError):
    pass


class NonFiniteState(VsseaError):
    pass


class SimulationDiverged(VsseaError):
    pass


class IoError(VsseaError):
    """Reading or writing an output file failed."""


class ConfigInvalid(VsseaError):
    pass


class ParseError(ConfigInvalid):
    def __init__(self, message, line=None, column=None):
        super().__init__(message)
        self.line = line
        self.column = column


class UnknownKey(ConfigInvalid):
    pass


class ValidationError(ConfigInvalid):
    def __init__(self, message, module=None, invariant=None):
        super().__init__(message)
        self.module = module
        self.invariant = invariant
