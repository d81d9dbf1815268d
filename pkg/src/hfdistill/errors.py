"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Raised when an argument violates a documented precondition."""


class ContractViolationError(RuntimeError):
    """Raised when objects are combined out of order, e.g. a stale forward cache."""


class TrainingDivergedError(RuntimeError):
    """Raised when an optimizer update produces NaN or Inf."""

    def __init__(self, message: str, epoch: int | None = None):
        super().__init__(message)
        self.epoch = epoch
