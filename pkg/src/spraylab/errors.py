"""Exception taxonomy shared by every module.

Each class carries an ``exit_code`` so the command line front end can map
expected failures to stable process exit codes without stack traces.
"""


class SprayError(Exception):
    exit_code = 4


class ConfigError(SprayError):
    exit_code = 2


class UnknownLabel(ConfigError):
    pass


class BadParams(ConfigError):
    pass


class DimensionMismatch(SprayError):
    exit_code = 3


class DomainViolation(SprayError):
    exit_code = 3


class ZeroVelocity(DomainViolation):
    pass


class ImmediateDomainViolation(DomainViolation):
    pass


class DifferentiationFailure(SprayError):
    pass


class StepUnderflow(SprayError):
    pass


class TooFewSamples(SprayError):
    pass


class FitDiverged(SprayError):
    pass


class NonMonotone(SprayError):
    pass


class QuadratureFailure(SprayError):
    pass


class NotAGeodesicPointSet(SprayError):
    pass


class NewtonDiverged(SprayError):
    pass


class JacobianSingular(NewtonDiverged):
    pass


class GaugeAmbiguity(SprayError):
    pass


class ClosureFailure(SprayError):
    def __init__(self, message, sample=None):
        super().__init__(message)
        self.sample = sample


class NotGraphLike(SprayError):
    pass


class ParamCountMismatch(SprayError):
    exit_code = 2


class WrongIntervalPattern(SprayError):
    pass


class ProbeFailure(SprayError):
    pass
