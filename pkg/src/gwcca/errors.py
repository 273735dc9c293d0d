"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: input/schema problems exit
with 2, numerical/degeneracy failures with 3, configuration problems
with 4.
"""


class GwccaError(Exception):
    """Base class for all package errors."""


class InputError(GwccaError):
    """Malformed user input: bad shapes, non-finite data, unusable files."""


class SchemaError(InputError):
    """A declared CSV column is missing or the file cannot be interpreted."""


class ConfigurationError(GwccaError):
    """Invalid configuration or an infeasible combination of settings."""


class ParameterError(ConfigurationError):
    """A single parameter is outside its valid range."""


class ValidityError(ConfigurationError):
    """Parameters describe a model that cannot be realized (e.g. a
    covariance that is not positive definite)."""


class CapacityError(ConfigurationError):
    """Requested problem size exceeds what the dense algorithms support."""


class NumericalError(GwccaError):
    """Numerical failure while fitting."""


class DegenerateNeighborhoodError(NumericalError):
    """Too little local weight mass to estimate local moments."""


class DegenerateVarianceError(NumericalError):
    """A variable has zero (local) variance."""


class DegenerateFitError(NumericalError):
    """A fit carries no usable signal (e.g. all local correlations zero)."""


EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3
EXIT_CONFIG = 4


def exit_code_for(exc: BaseException) -> int:
    """Process exit code for an exception raised by this package."""
    if isinstance(exc, InputError):
        return EXIT_INPUT
    if isinstance(exc, NumericalError):
        return EXIT_NUMERICAL
    if isinstance(exc, ConfigurationError):
        return EXIT_CONFIG
    return 1
