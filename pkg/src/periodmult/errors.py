"""Exception hierarchy shared by all modules."""


class PeriodMultError(Exception):
    """Base class for every error raised by this package."""


class DivergentInductance(PeriodMultError, ArithmeticError):
    pass


class FluxSingularity(PeriodMultError, ValueError):
    pass


class GammaOutOfRange(PeriodMultError, ValueError):
    pass


class RootBracketFailure(PeriodMultError, RuntimeError):
    pass


class UnsupportedOrder(PeriodMultError, ValueError):
    pass


class MissingHigherMode(PeriodMultError, ValueError):
    """Odd-order pump with no channel that could produce a nonzero coefficient."""


class StepSizeUnderflow(PeriodMultError, RuntimeError):
    pass


class StepTooLarge(PeriodMultError, ValueError):
    pass


class IncompatibleHistograms(PeriodMultError, ValueError):
    pass


class NoClusters(PeriodMultError, ValueError):
    pass


class WrongMultiplicity(PeriodMultError, ValueError):
    pass


class ConfigInvalid(PeriodMultError, ValueError):
    pass


class CommandUnknown(PeriodMultError, ValueError):
    pass


class IoFailure(PeriodMultError, OSError):
    pass
