"""Exception types raised across the package."""


class WalkMPNNError(Exception):
    """Base class for all package errors."""


class GraphFormatError(WalkMPNNError, ValueError):
    """Malformed graph input. ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SelfLoopError(GraphFormatError):
    pass


class ConstructionError(WalkMPNNError, ValueError):
    """Invalid parameters for a synthetic graph or a model."""


class WalkOverflowError(WalkMPNNError, OverflowError):
    def __init__(self, node, length):
        self.node = node
        self.length = length
        super().__init__(
            f"walk count of node {node} at length {length} exceeds the int64 range"
        )


class EnumerationBudgetError(WalkMPNNError, RuntimeError):
    pass


class DimensionMismatchError(WalkMPNNError, ValueError):
    pass


class IsolatedNodeError(WalkMPNNError, ValueError):
    def __init__(self, node):
        self.node = node
        super().__init__(
            f"node {node} has no neighbours; attention over an empty neighbourhood is undefined"
        )


class ConvergenceError(WalkMPNNError, RuntimeError):
    def __init__(self, message, iterate, residual):
        self.iterate = iterate
        self.residual = residual
        super().__init__(message)


class UsageError(WalkMPNNError, ValueError):
    """A valid object used with an operation that does not apply to it."""
