"""Exception hierarchy.

Each class carries the CLI exit code for its failure class so that the
command-line front end can map exceptions to exit statuses without a
lookup table.
"""


class KakeyaLabError(Exception):
    exit_code = 1


class InputError(KakeyaLabError, ValueError):
    """Malformed or missing input (grid files, recipes, parameters)."""

    exit_code = 2


class GeometryError(InputError):
    """A construction's geometric preconditions are violated."""


class NumericalError(KakeyaLabError, ArithmeticError):
    """An iterative computation failed to converge or produced non-finite values."""

    exit_code = 3


class DiscretizationError(KakeyaLabError):
    """The discrete rectangle basis cannot represent the requested object."""

    exit_code = 4
