"""Exception types raised by the scheduling library."""


class SchedulingError(Exception):
    """Base class for all library errors."""


class ConfigurationError(SchedulingError, ValueError):
    """Invalid parameters (place count, experiment settings, profiles)."""


class ConsistencyError(SchedulingError):
    """Declared task relations contradict each other or the task windows."""


class SystemUnsuitableError(SchedulingError):
    """A grid needs more rows than the robotic system has streams."""


class IncompatibleSystemError(SchedulingError):
    """No robot can host an Equals-class (needs strictly more streams than members)."""


class OracleCapacityError(SchedulingError):
    """Exhaustive enumeration was requested on an instance that is too large."""
