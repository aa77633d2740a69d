"""Exception hierarchy shared by all logshield modules."""

from __future__ import annotations


class LogShieldError(Exception):
    """Base class for every error raised by logshield."""


# -- ingestion ---------------------------------------------------------------

class EmptyInput(LogShieldError):
    pass


class MissingColumn(LogShieldError):
    def __init__(self, column: str):
        super().__init__(f"missing required column: {column!r}")
        self.column = column


class BadTimestamp(LogShieldError):
    def __init__(self, line: int, value: str):
        super().__init__(f"line {line}: cannot parse timestamp {value!r}")
        self.line = line
        self.value = value


class MalformedRow(LogShieldError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class InconsistentSensitive(LogShieldError):
    def __init__(self, case_id: str, values):
        super().__init__(f"case {case_id!r} carries several sensitive values: {sorted(values)}")
        self.case_id = case_id
        self.values = tuple(sorted(values))


class MissingSensitive(LogShieldError):
    def __init__(self, case_id: str, attribute: str):
        super().__init__(f"case {case_id!r} has an event without attribute {attribute!r}")
        self.case_id = case_id
        self.attribute = attribute


class DuplicateCaseId(LogShieldError):
    def __init__(self, case_id: str):
        super().__init__(f"duplicate case id {case_id!r}")
        self.case_id = case_id


# -- anonymization -------------------------------------------------------------

class SizeMismatch(LogShieldError):
    pass


class Infeasible(LogShieldError):
    """No suppression within the budget reaches the requested k."""

    def __init__(self, bk, best_k: int, context: str = ""):
        msg = f"cannot reach k for background knowledge {list(bk)} (best matching set size {best_k})"
        if context:
            msg = f"{context}: {msg}"
        super().__init__(msg)
        self.bk = tuple(bk)
        self.best_k = best_k
        self.context = context


# -- attack analysis -----------------------------------------------------------

class CandidateExplosion(LogShieldError):
    pass


class NoCandidates(LogShieldError):
    pass


class NoLinker(LogShieldError):
    pass


class LimitExceeded(LogShieldError):
    pass


class IllegalComposition(LogShieldError):
    pass


class ReleaseIndexError(LogShieldError, IndexError):
    pass
