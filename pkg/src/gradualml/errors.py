"""Exception types shared across the package.

The CLI maps these to exit codes: InputError -> 2, InvariantError -> 3.
"""


class InputError(ValueError):
    """A rejected input: malformed file, unknown reference, bad config value."""


class InvariantError(RuntimeError):
    """An internal contract was breached (e.g. relabeling a committed variable)."""


class StageError(RuntimeError):
    """Wraps a failure with the pipeline stage it occurred in."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
