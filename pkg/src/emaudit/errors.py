"""Exception hierarchy shared by every emaudit module."""


class EMAuditError(Exception):
    """Base class for all errors raised by emaudit."""


class UnknownGroupValue(EMAuditError, KeyError):
    def __init__(self, name: str):
        super().__init__(name)
        self.name = name

    def __str__(self) -> str:
        return f"unknown group value {self.name!r}"


class LengthMismatch(EMAuditError, ValueError):
    pass


class ParseError(EMAuditError, ValueError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class MissingColumn(EMAuditError, ValueError):
    def __init__(self, column: str):
        super().__init__(f"missing column {column!r}")
        self.column = column


class MissingAttribute(EMAuditError, KeyError):
    def __init__(self, attribute: str):
        super().__init__(attribute)
        self.attribute = attribute

    def __str__(self) -> str:
        return f"record has no attribute {self.attribute!r}"


class MissingDecision(EMAuditError, ValueError):
    pass


class MissingScore(EMAuditError, ValueError):
    pass


class UndefinedRatio(EMAuditError, ZeroDivisionError):
    pass


class TooFewThresholds(EMAuditError, ValueError):
    pass


class InsufficientSourceRows(EMAuditError, ValueError):
    def __init__(self, group: str, needed: int, available: int):
        super().__init__(
            f"group {group!r} needs {needed} rows but the source only has {available}"
        )
        self.group = group
        self.needed = needed
        self.available = available


class ConfigError(EMAuditError, ValueError):
    """Invalid or incomplete run configuration."""
