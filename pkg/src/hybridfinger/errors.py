"""Exception types raised across the toolkit."""


class FingerError(Exception):
    """Base class for every error raised by hybridfinger."""


class ParamsError(FingerError):
    """A parameter file is malformed or fails a self-consistency check."""


class Unsolvable(FingerError):
    """A loop-closure equation has no real solution (the loop cannot close)."""

    def __init__(self, message, loop=None):
        super().__init__(message)
        self.loop = loop


class OutOfJointLimits(FingerError):
    def __init__(self, message, loop=None, joint=None):
        super().__init__(message)
        self.loop = loop
        self.joint = joint


class Unreachable(FingerError):
    def __init__(self, message, waypoint=None):
        super().__init__(message)
        self.waypoint = waypoint


class SingularLoop(FingerError):
    """Implicit differentiation hit a loop at a fold (zero denominator)."""

    def __init__(self, message, loop=None):
        super().__init__(message)
        self.loop = loop


class NearSingular(FingerError):
    """The motor Jacobian is too ill-conditioned to invert."""

    def __init__(self, message, cond=None):
        super().__init__(message)
        self.cond = cond


class Infeasible(FingerError):
    """The joint-space planner could not satisfy the motor speed limits."""


class WaypointTimeout(FingerError):
    def __init__(self, message, waypoint=None):
        super().__init__(message)
        self.waypoint = waypoint


class MetricsError(FingerError):
    pass


class LengthMismatch(MetricsError):
    pass


class NotClosed(MetricsError):
    pass


class EmptyInput(MetricsError):
    pass


class NonPositiveSigma(MetricsError):
    pass
