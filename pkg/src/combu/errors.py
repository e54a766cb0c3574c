"""Exception types shared across the package."""


class CombuError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(CombuError):
    """An argument or configuration value is out of its valid range."""


class ShapeError(CombuError):
    """Array dimensions do not agree."""


class DomainError(CombuError):
    """An expression is evaluated (or compiled) outside its valid domain."""


class BoundError(CombuError):
    """Interval analysis produced an unbounded or inconsistent interval."""


class ConditioningError(CombuError):
    """A construction would require constants too large for 64-bit floats."""


class SchemaError(CombuError):
    """A file (CSV, JSON config, s-expression) does not match its schema."""


class TrainingDiverged(CombuError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch: int):
        super().__init__(f"non-finite loss at epoch {epoch}")
        self.epoch = epoch
