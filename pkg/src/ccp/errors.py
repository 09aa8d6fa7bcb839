"""Exception types shared across the package.

The CLI maps these onto exit codes: InputError -> 2, FitError -> 3,
InvariantError -> 4.
"""


class InputError(ValueError):
    """Malformed or degenerate input data / configuration."""


class FitError(RuntimeError):
    """Hyperparameter search or model fitting could not succeed."""


class InvariantError(RuntimeError):
    """An internal consistency check failed."""
