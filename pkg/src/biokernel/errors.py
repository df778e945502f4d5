"""Exception hierarchy shared by all modules."""


class BiokernelError(Exception):
    """Base class for numeric failures (CLI exit code 1)."""


class NonConvergence(BiokernelError):
    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class InvalidContour(BiokernelError):
    pass


class TailTooFat(BiokernelError):
    pass


class NoDecay(BiokernelError):
    pass


class PoleAtNonpositiveInteger(BiokernelError):
    pass


class OutsideStrip(BiokernelError):
    pass


class AtPoleOrZero(BiokernelError):
    pass


class EmptyStrip(BiokernelError):
    pass


class PreconditionViolated(BiokernelError):
    pass


class NoRoom(BiokernelError):
    pass


class ZeroW(BiokernelError):
    pass


class ConfluentSources(BiokernelError):
    pass


class BranchCutHit(BiokernelError):
    pass


class DecayViolation(BiokernelError):
    pass


class SeriesNotConverged(BiokernelError):
    pass


class GridTooCoarse(BiokernelError):
    pass


class ConfigError(Exception):
    """Malformed configuration (CLI exit code 2)."""
