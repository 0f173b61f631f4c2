"""Exception hierarchy.

``ConfigError`` and its subclasses signal bad input (CLI exit code 2);
``InvariantError`` and its subclasses signal a broken internal guarantee
(CLI exit code 3).
"""


class FactprobError(Exception):
    """Base class for all package errors."""


class ConfigError(FactprobError, ValueError):
    """Invalid parameters or configuration."""

    def __init__(self, message, path=None):
        self.message = message
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class RangeError(ConfigError):
    """A measured value falls outside an axis range."""


class SchemaError(ConfigError):
    """A description does not fit the view it is used with."""


class EmptySampleError(ConfigError):
    """An estimate was requested from zero observations."""


class MembershipError(ConfigError):
    """An event references labels outside a law's support."""


class InvariantError(FactprobError, RuntimeError):
    """An internal invariant was violated."""

    name = "invariant"


class GridBoundsError(InvariantError):
    """A cell falls outside the points-grid (the declared zone is too small)."""

    name = "grid-bounds"


class SolverError(InvariantError):
    """The border puzzle could not be completed."""

    name = "solver"


class ConsistencyError(InvariantError):
    """A trace and a points-form do not describe the same run."""

    name = "consistency"
