"""Exception hierarchy shared across the package."""


class TwistLabError(Exception):
    """Base class for all package errors."""


# geometry
class NonMonotoneProfile(TwistLabError):
    pass


class NoConvergence(TwistLabError):
    pass


class OutOfCollar(TwistLabError):
    pass


# hamflow
class DegenerateAtBoundary(TwistLabError):
    pass


class PoleAtBoundary(TwistLabError):
    pass


class BlowUp(TwistLabError):
    """Step size fell below the floor, typically near a boundary pole."""


class EscapedDomain(TwistLabError):
    pass


# extension / action
class NotC2(TwistLabError):
    pass


class BadConstants(TwistLabError):
    pass


class QuantitativeTwistFails(TwistLabError):
    pass


class QuadratureFailure(TwistLabError):
    pass


class SampleEscaped(TwistLabError):
    pass


# smoothing
class TwistFails(TwistLabError):
    pass


# index
class FrameDegenerate(TwistLabError):
    pass


class NonIsolatedCrossing(TwistLabError):
    pass


# models
class OffVariety(TwistLabError):
    pass


class NotOnPage(TwistLabError):
    pass


class TangentRay(TwistLabError):
    pass


# orbits
class JacobianSingular(TwistLabError):
    pass
