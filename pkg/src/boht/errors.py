"""Exception types shared across the package."""


class DomainError(ValueError):
    """A parameter lies outside the range where the operation is defined."""


class ResourceError(RuntimeError):
    """A requested computation exceeds its enumeration or memory budget."""


class ConvergenceError(RuntimeError):
    """An iterative procedure failed to converge within its iteration cap."""
