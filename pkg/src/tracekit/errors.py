"""Error types shared across the toolkit."""


class SourceError(Exception):
    """Base for errors that point at a source line."""

    def __init__(self, message, line=None):
        super().__init__(message)
        self.message = message
        self.line = line


class LexError(SourceError):
    pass


class ParseError(SourceError):
    pass


class UnsupportedConstructError(ParseError):
    """A construct outside the supported subset."""

    def __init__(self, construct, line=None):
        super().__init__(f"unsupported construct: {construct}", line)
        self.construct = construct


class ConfigError(Exception):
    """Bad configuration supplied by the caller (not by the program under test)."""


class InterpRuntimeError(Exception):
    """A runtime failure inside the interpreted program.

    kind mirrors the reference language's exception class name
    (ZeroDivisionError, TypeError, ...). line is the faulting statement.
    """

    def __init__(self, kind, message, line=None):
        super().__init__(f"{kind}: {message}")
        self.kind = kind
        self.message = message
        self.line = line


class FuelExhausted(Exception):
    def __init__(self, line=None):
        super().__init__("statement budget exhausted")
        self.line = line


class OutputOverflow(Exception):
    def __init__(self, line=None, what="output"):
        super().__init__(f"{what} exceeds configured limit")
        self.line = line
        self.what = what
