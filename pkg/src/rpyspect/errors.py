"""Exception types shared across the package."""


class RpysError(Exception):
    """Base class for all package-specific errors."""


class EmptySampleError(RpysError):
    """A sampler selected nothing (the message names the sampling mode)."""


class OffsetTooLargeError(RpysError):
    """Systematic sampling offset is >= the selection step."""


class DomainError(RpysError):
    """An argument violates an operation's numeric domain."""


class EmptyDatasetError(RpysError):
    """An operation that needs at least one dated variant got none."""


class CreFormatError(RpysError):
    """A CRE file is structurally malformed."""


class FormatVersionError(CreFormatError):
    """A CRE file declares an unsupported major version."""


class ChecksumError(RpysError):
    """A CRE file body does not match its trailing checksum."""


class ScriptError(RpysError):
    """Base for script-language errors; carries a source location."""

    def __init__(self, message, line=None, col=None):
        self.line = line
        self.col = col
        if line is not None:
            message = f"line {line}, col {col}: {message}"
        super().__init__(message)


class ScriptSyntaxError(ScriptError):
    pass


class UnknownFunctionError(ScriptError):
    pass


class BadArgumentError(ScriptError):
    pass
