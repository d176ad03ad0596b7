"""Exception hierarchy shared by all modules."""


class TwistFockError(Exception):
    """Base class for every error raised by the library."""


# standard subspace construction
class NotPositive(TwistFockError):
    pass


class NotInvolutive(TwistFockError):
    pass


class ModularMismatch(TwistFockError):
    pass


class BadPairing(TwistFockError):
    pass


class NonPositiveEigenvalue(TwistFockError):
    pass


class InvalidNorm(TwistFockError):
    pass


class WrongBasisMode(TwistFockError):
    pass


# twists and operators
class BadParams(TwistFockError):
    pass


class SizeCapExceeded(TwistFockError):
    pass


class NotStrictlyPositive(TwistFockError):
    pass


class ShapeMismatch(TwistFockError):
    pass


class TruncationTooSmall(TwistFockError):
    pass


class IndexOutOfRange(TwistFockError):
    pass


# combinatorics
class CapExceeded(TwistFockError):
    pass


class NotAdmissible(TwistFockError):
    pass


class NotOdd(TwistFockError):
    pass


class NotASingleton(TwistFockError):
    pass


class InconsistentSizes(TwistFockError):
    pass


class WrongCase(TwistFockError):
    pass


# cli
class ConfigParse(TwistFockError):
    pass
