"""Exception hierarchy shared by every mirage subsystem."""


class MirageError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(MirageError, ValueError):
    """An argument lies outside the domain of a calculator."""


class ParseError(MirageError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConfigInvalid(MirageError, ValueError):
    pass


class DifficultyOutOfRange(MirageError, ValueError):
    pass


class Unsolvable(MirageError):
    """No candidate key reproduces the check value; the puzzle is corrupt."""


class DepthTooLarge(MirageError, ValueError):
    pass


class AclOverflow(MirageError):
    """An ACL push would exceed the per-victim entry bound."""


class BatchExhausted(MirageError):
    """The puzzle server has no puzzle left for the requested interval."""


class ServiceError(MirageError):
    """A remote service answered with an Error message."""

    def __init__(self, code, message=""):
        self.code = code
        super().__init__(f"{code}: {message}" if message else code)


class BindError(MirageError, OSError):
    """A service could not bind its listening socket."""


class WireError(MirageError, ValueError):
    """A frame is not a valid protocol message."""
