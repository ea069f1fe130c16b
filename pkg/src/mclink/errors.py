"""Exception hierarchy shared by the library and the CLI."""


class ValidationError(ValueError):
    """A parameter or input violates a documented precondition."""


class UnsupportedRegimeError(ValidationError):
    """The requested operation has no model in this regime (e.g. drift capture)."""


class NoSignalError(Exception):
    """A trace or prediction carries no detectable signal."""


class IncompleteTraceError(ValidationError):
    """The trace ends before the response decays to the 3 dB point."""
