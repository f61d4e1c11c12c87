"""Exception and warning types raised across the package."""


class SedPceError(Exception):
    """Base class for every error raised by sedpce."""


# lp
class MalformedProblem(SedPceError, ValueError):
    pass


class IterationLimit(SedPceError):
    pass


# grid / gas
class DisconnectedNetwork(SedPceError):
    pass


class SingularSusceptanceMatrix(SedPceError):
    pass


class DimensionMismatch(SedPceError, ValueError):
    pass


class NegativeWind(SedPceError, ValueError):
    pass


class PressureOrderViolation(SedPceError, ValueError):
    pass


class ZeroFlowSingularity(SedPceError):
    pass


class SlpNonconvergence(SedPceError):
    pass


# transforms / orthopoly
class DegenerateSample(SedPceError, ValueError):
    pass


class EmptySample(SedPceError, ValueError):
    pass


class SingularMomentMatrix(SedPceError):
    pass


class CandidateExplosion(SedPceError):
    pass


class NonPositiveNorm(SedPceError):
    pass


# sparse_fit
class LeverageOne(SedPceError):
    pass


class AllDegreesFailed(SedPceError):
    pass


# uq pipeline
class InsufficientData(SedPceError, ValueError):
    pass


class ZeroBaseline(SedPceError, ValueError):
    pass


# io
class ParseError(SedPceError):
    pass


class SchemaError(SedPceError):
    pass


class InvariantViolation(SedPceError, ValueError):
    pass


class IllConditioned(UserWarning):
    """Moment matrix condition estimate above the warning threshold."""


class RankDeficientActiveSet(UserWarning):
    """A candidate column was skipped because it is nearly dependent on the active set."""


class DegenerateSampleWarning(UserWarning):
    pass
