"""Exception types shared across the queue and scheduler modules."""


class PktschedError(Exception):
    pass


class RankRangeError(PktschedError):
    """Rank falls outside the fixed range a queue was built for."""


class StaleRankError(PktschedError):
    """Rank is below the low edge of a moving-window queue."""


class InvalidHandleError(PktschedError):
    """A removal handle was already consumed or never belonged to this queue."""


class QueueStateError(PktschedError):
    """An operation would corrupt internal queue state (e.g. double-mark)."""


class HorizonError(PktschedError):
    """Timestamp lies beyond the horizon of a time-indexed structure."""


class ConfigError(PktschedError):
    """Invalid policy-tree, workload, or benchmark configuration."""
