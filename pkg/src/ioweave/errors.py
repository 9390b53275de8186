"""Exception types. Each carries the machine-readable ``code`` used in reports."""


class IoweaveError(Exception):
    code = "ERROR"


class BudgetExceeded(IoweaveError):
    code = "BUDGET_EXCEEDED"


class BoundExceeded(IoweaveError):
    code = "BOUND_EXCEEDED"


class GuardDependsOnInput(IoweaveError):
    code = "GUARD_DEPENDS_ON_INPUT"


class EmptySet(IoweaveError):
    code = "EMPTY_SET"


class InvalidRing(IoweaveError):
    code = "INVALID_RING"


class UniverseNotClosed(IoweaveError):
    code = "UNIVERSE_NOT_CLOSED"


class MonitorViolation(IoweaveError):
    code = "MONITOR_VIOLATION"

    def __init__(self, node, action, reason):
        super().__init__(f"node {node!r}: {action} denied ({reason})")
        self.node = node
        self.action = action
        self.reason = reason


class StepLimit(IoweaveError):
    code = "STEP_LIMIT"


class ConfigError(IoweaveError):
    code = "CONFIG_ERROR"
