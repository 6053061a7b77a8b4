"""Exception types shared across the toolkit."""


class LambdaForgeError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(LambdaForgeError, ValueError):
    """Operands act on different numbers of qubits."""


class DomainError(LambdaForgeError, ValueError):
    """An argument lies outside the domain an operation accepts."""


class CapacityError(LambdaForgeError, ValueError):
    """Input too large for an exhaustive routine."""


class ContractError(LambdaForgeError, ValueError):
    """Inputs are individually valid but inconsistent with each other."""


class InfeasibleError(LambdaForgeError):
    """No code order can reach the requested logical error."""


class InsufficientStatisticsError(LambdaForgeError):
    """A fit was requested on estimates that recorded zero failures."""
