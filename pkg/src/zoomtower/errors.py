"""Exception types shared across the package.

Sentinel values for "no finite answer" results live here as well, so that
callers can distinguish a failed computation (exception) from a certified
negative answer (sentinel).
"""

import math


class ZoomtowerError(Exception):
    """Base class for all package errors."""


class ConfigError(ZoomtowerError):
    """Malformed run or map configuration; carries field diagnostics."""

    def __init__(self, message, *, section=None, key=None, line=None):
        self.section = section
        self.key = key
        self.line = line
        where = []
        if section is not None:
            where.append(f"section [{section}]")
        if key is not None:
            where.append(f"key {key!r}")
        if line is not None:
            where.append(f"line {line}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(message + suffix)


class CriticalHit(ZoomtowerError):
    """An orbit point landed within machine tolerance of the critical set."""

    def __init__(self, index, point):
        self.index = index
        self.point = point
        super().__init__(f"orbit hit critical set at step {index} (x={point!r})")


class UndefinedDerivative(ZoomtowerError):
    """Derivative channel requested past a critical truncation."""


class UndefinedJacobian(ZoomtowerError):
    """Reference measure has no evaluable Jacobian at the requested point."""


class BranchEscape(ZoomtowerError):
    """A pull-back target leaves the image of the prescribed branch."""


class PrecisionLoss(ZoomtowerError):
    """Bisection or enumeration could not separate values at tolerance."""


class NotAZoomingTime(ZoomtowerError):
    """Pre-ball construction failed: no certified backward contraction."""


class CapExceeded(ZoomtowerError):
    """An order/work cap was hit before the computation stabilized."""


class HypothesisFail(ZoomtowerError):
    """A required summability/geometry certificate does not hold."""


class NoConvergence(ZoomtowerError):
    """Transfer-operator iteration did not reach tolerance within max_iter."""


class DistortionUnbounded(ZoomtowerError):
    """Distortion estimate blew up; bounded-distortion hypothesis violated."""


class InfiniteMeanReturn(ZoomtowerError):
    """Projection requested for a tower measure with non-integrable R."""


class WeightMass(ZoomtowerError):
    """Bernoulli weights do not carry enough mass on discovered atoms."""


class InvalidScenario(ZoomtowerError):
    """Counting-lemma scenario violates the closure hypothesis."""


class OrbitEscape(ZoomtowerError):
    """Induced orbit left the tower base before the requested horizon."""

    def __init__(self, message, steps_available=None):
        self.steps_available = steps_available
        super().__init__(message)


#: Sentinel for "no finite moment exists within the observed orbit".
UNBOUNDED = math.inf

#: Sentinel return-time value meaning "no certified return within the cap".
NO_RETURN = 0
