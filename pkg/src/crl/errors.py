"""Exception hierarchy.

Every error carries an ``exit_code`` used by the command line front end:
1 for solver failures, 2 for configuration errors, 3 for precondition refusals.
"""


class CrlError(Exception):
    exit_code = 1

    def __init__(self, message="", **details):
        super().__init__(message)
        self.details = details


class SolverFailure(CrlError):
    exit_code = 1


class ConfigError(CrlError):
    exit_code = 2


class PreconditionRefused(CrlError):
    exit_code = 3


# geometry
class InvalidRegion(ConfigError):
    pass


class UnsupportedCombination(ConfigError):
    pass


class InvalidRadius(ConfigError):
    pass


class EmptyLevelSet(SolverFailure):
    pass


class DisconnectedLevelSet(SolverFailure):
    pass


# conformal
class NonPositiveFactor(PreconditionRefused):
    pass


class NonIdentityBoundary(PreconditionRefused):
    pass


class InvalidDelta(ConfigError):
    pass


class NonPositiveEigenvalue(PreconditionRefused):
    pass


# spectral
class SolverDivergence(SolverFailure):
    pass


class BracketFailure(SolverFailure):
    pass


# deform
class NoValidEpsilon(SolverFailure):
    pass


class EmptyTWindow(SolverFailure):
    pass


class MeanCurvatureOrderingFailed(SolverFailure):
    pass


class DeltaBudgetExceeded(SolverFailure):
    pass


class CertifiedPositiveEigenvalue(PreconditionRefused):
    pass


class CertifiedNegativeEigenvalue(PreconditionRefused):
    pass


# lab
class OptimizerStall(SolverFailure):
    pass


class NoCrossing(SolverFailure):
    pass


class TruncationTooSmall(SolverFailure):
    pass
