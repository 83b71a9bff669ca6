"""Exception types shared across the package."""


class OscbathError(Exception):
    """Base class for package errors."""


class DomainError(OscbathError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class PreparationError(OscbathError, ValueError):
    """A bath preparation violates positivity or the uncertainty bound."""


class PoleError(OscbathError, ArithmeticError):
    """The susceptibility denominator vanishes (undamped mode)."""


class PoleScanError(OscbathError, RuntimeError):
    """The real-axis pole scan rejected the scenario."""


class BranchTrackingError(OscbathError, RuntimeError):
    """Phase unwrapping of the counting-statistics integrand failed."""


class ToleranceError(OscbathError, RuntimeError):
    """A self-check exceeded its accuracy target."""


class BudgetError(OscbathError, RuntimeError):
    """A quadrature would exceed its configured evaluation budget."""


class ConfigError(OscbathError, ValueError):
    """A run configuration file is malformed or inconsistent."""
