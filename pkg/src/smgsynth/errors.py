"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class SMGError(Exception):
    """Base class for every error raised by smgsynth."""


class ValidationError(SMGError):
    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("invalid game: " + "; ".join(self.violations))


class SupportError(SMGError):
    def __init__(self, vertex: str, message: str = "support leaves vertex without successors"):
        self.vertex = vertex
        super().__init__(f"{message}: {vertex}")


class ProfileError(SMGError):
    def __init__(self, vertex: str, message: str):
        self.vertex = vertex
        super().__init__(f"{message}: {vertex}")


class ParseError(SMGError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        loc = f"line {line}, column {column}: " if line else ""
        super().__init__(loc + message)


class BoundExceeded(SMGError):
    """An exhaustive procedure refused to run because its search space is too big."""

    def __init__(self, what: str, count: int, limit: int):
        self.what = what
        self.count = count
        self.limit = limit
        super().__init__(f"{what}: {count} exceeds the configured limit {limit}")


class UnknownVariable(SMGError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unknown vertex variable in formula: {name}")


class NotAnEndComponent(SMGError):
    pass


class TerminationRequired(SMGError):
    pass
