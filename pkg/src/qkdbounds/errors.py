"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the function."""


class DimensionError(ValueError):
    """Operands have incompatible sizes."""


class ValidationError(ValueError):
    """An object violates the invariants of its type."""


class CapacityError(RuntimeError):
    """An exact computation would exceed the enumeration cap."""

    def __init__(self, message, cap=None):
        super().__init__(message)
        self.cap = cap


class InfeasibleError(ValueError):
    """A requested construction cannot be realised under the given budget."""

    def __init__(self, message, max_achievable=None):
        super().__init__(message)
        self.max_achievable = max_achievable
