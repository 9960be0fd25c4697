"""Exception hierarchy shared by the numerical core and the command line."""


class CircBayesError(Exception):
    """Base class for all package errors."""


class InputError(CircBayesError, ValueError):
    """Malformed or inconsistent user input (files, arguments, shapes)."""


class ConfigError(CircBayesError, ValueError):
    """Invalid configuration value or configuration file."""


class NumericalError(CircBayesError, ArithmeticError):
    """A numerical procedure could not produce a trustworthy result."""


class SingularSystemError(NumericalError):
    """A linear system that must be positive definite is not."""


class RankDeficiencyError(NumericalError):
    """A design or collocation matrix lacks full column rank."""
