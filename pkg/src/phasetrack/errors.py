"""Exception types shared across the package.

Two families matter operationally: bad inputs (rejected up front) and
quantities that are mathematically divergent or numerically unreachable.
The CLI maps them to exit codes 2 and 3 respectively.
"""


class ValidationError(ValueError):
    """A parameter or configuration violates a documented precondition."""


class NumericalError(RuntimeError):
    """A requested quantity is divergent or an iteration failed to converge."""
