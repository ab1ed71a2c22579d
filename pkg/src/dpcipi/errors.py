"""Exception types shared across the package."""


class InputError(ValueError):
    """Bad user-supplied data or configuration. The CLI maps this to exit code 2."""


class UnsupportedTaskError(InputError):
    """The requested task is not defined for this model family."""
