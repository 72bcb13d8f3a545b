"""Exception types shared across the package."""


class SingularSystemError(ValueError):
    """A linear system is singular or too ill-conditioned to solve."""


class IntegrationError(RuntimeError):
    """Numerical integration produced a non-finite state."""


class DatasetFormatError(ValueError):
    """A dataset file does not match the documented record format."""
