"""Exception types shared across the package."""


class InputError(ValueError):
    """Invalid argument: unknown node id, malformed request, bad parameter."""


class MapParseError(InputError):
    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class CapacityError(InputError):
    """More agents (or parking spots) requested than the graph can hold."""


class ContractError(RuntimeError):
    """A precondition of an operation was violated by the caller."""


class InfeasibleError(RuntimeError):
    """The targets cannot all be matched."""


class SolverTimeout(RuntimeError):
    def __init__(self, message, last_horizon=None, elapsed=None):
        super().__init__(message)
        self.last_horizon = last_horizon
        self.elapsed = elapsed


class BudgetExhausted(RuntimeError):
    """Online execution ran out of activations; carries the partial trace."""

    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace
