class InvalidArgument(ValueError):
    pass


class InvalidPath(InvalidArgument):
    pass


class RangeError(ValueError):
    """A bound was queried outside the parameter range where it holds."""


class ResourceLimit(RuntimeError):
    """An exact computation would exceed its resource guard."""


class AlgorithmInvariantViolation(RuntimeError):
    """Internal state that a feasible configuration can never reach."""


class AuditFailure(AssertionError):
    pass
