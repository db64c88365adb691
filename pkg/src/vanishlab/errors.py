"""Exception hierarchy shared by the lab modules."""


class LabError(Exception):
    """Base class for all errors raised by vanishlab."""


class InvalidSpecError(LabError, ValueError):
    """A kernel, potential or grid description violates its invariants."""


class DomainError(LabError, ValueError):
    """An evaluation point lies outside the domain of the formula."""


class DivergentSeriesError(DomainError):
    """A series expansion was requested outside its disc of convergence."""


class ConvergenceError(LabError, ArithmeticError):
    """An iterative or series computation failed to reach its tolerance."""


class ConfigError(LabError, ValueError):
    """A scenario configuration is malformed."""
