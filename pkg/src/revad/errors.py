"""Exception hierarchy.  Every error carries a short machine-friendly kind."""

from __future__ import annotations


class RevadError(Exception):
    kind = "error"


class SyntaxError_(RevadError):
    kind = "SyntaxError"

    def __init__(self, line: int, col: int, expected: str, found: str = "") -> None:
        self.line, self.col, self.expected, self.found = line, col, expected, found
        msg = f"{line}:{col}: expected {expected}"
        if found:
            msg += f", found {found!r}"
        super().__init__(msg)


class TypeError_(RevadError):
    kind = "TypeError"


class UnboundVariable(TypeError_):
    kind = "UnboundVariable"

    def __init__(self, name: str) -> None:
        self.name = name
        super().__init__(f"unbound variable {name!r}")


class TypeMismatch(TypeError_):
    kind = "TypeMismatch"

    def __init__(self, expected: object, found: object, location: str = "") -> None:
        self.expected, self.found, self.location = expected, found, location
        super().__init__(f"expected {expected}, found {found}" + (f" in {location}" if location else ""))


class ArraySizeMismatch(TypeError_):
    kind = "ArraySizeMismatch"

    def __init__(self, n: int, m: int) -> None:
        self.n, self.m = n, m
        super().__init__(f"array sizes differ: {n} vs {m}")


class IllegalFreeVariableInReduce(TypeError_):
    kind = "IllegalFreeVariableInReduce"

    def __init__(self, name: str) -> None:
        self.name = name
        super().__init__(f"reduce body mentions free variable {name!r}")


class ArityMismatch(TypeError_):
    kind = "ArityMismatch"


class UnsupportedConstruct(TypeError_):
    kind = "UnsupportedConstruct"


class JudgmentMismatch(TypeError_):
    kind = "JudgmentMismatch"

    def __init__(self, message: str, expected: object = None, found: object = None) -> None:
        self.expected, self.found = expected, found
        super().__init__(message)


class MissingContinuationSlot(JudgmentMismatch):
    kind = "MissingContinuationSlot"


class MalformedDiffImage(RevadError):
    kind = "MalformedDiffImage"


class NotScalarOutput(RevadError):
    kind = "NotScalarOutput"


class NonScalarBranches(RevadError):
    kind = "NonScalarBranches"


class UnknownVariable(RevadError):
    kind = "UnknownVariable"


class IndexOutOfRange(RevadError):
    kind = "IndexOutOfRange"


class DynamicTypeError(RevadError):
    kind = "DynamicTypeError"


class NotInRestrictedFragment(RevadError):
    kind = "NotInRestrictedFragment"


class FixpointBudgetExceeded(RevadError):
    kind = "FixpointBudgetExceeded"

    def __init__(self, limit: int) -> None:
        self.limit = limit
        super().__init__(f"rewriting did not reach a fixpoint within {limit} passes")


class TypeDisagreement(RevadError):
    kind = "TypeDisagreement"
