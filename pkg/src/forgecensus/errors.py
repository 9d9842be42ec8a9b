"""Exception hierarchy shared by all forgecensus modules.

Every domain error derives from ForgeCensusError so the CLI can map them
to a single exit code; usage errors are argparse's business.
"""

from __future__ import annotations


class ForgeCensusError(Exception):
    """Base class for all domain errors raised by this package."""


# --- transport ---------------------------------------------------------


class BudgetExhausted(ForgeCensusError):
    """No request slot available in the current rolling window."""

    def __init__(self, message: str, retry_after: float = 0.0):
        super().__init__(message)
        self.retry_after = retry_after


class AuthRejected(ForgeCensusError):
    """The forge refused our credentials (401/403)."""


class UpstreamError(ForgeCensusError):
    """The forge kept failing after all retries, or replied nonsense."""

    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


class FixtureMiss(ForgeCensusError):
    """Replay mode was asked for a request that was never recorded."""


class NotFound(ForgeCensusError):
    """A user, snapshot or resource does not exist."""


# --- census ------------------------------------------------------------


class ParseError(ForgeCensusError):
    """A location config document is malformed or violates the schema."""


class InvalidPattern(ForgeCensusError):
    """An include/exclude pattern does not compile."""

    def __init__(self, field: str, pattern: str, reason: str):
        super().__init__(f"invalid {field} pattern {pattern!r}: {reason}")
        self.field = field
        self.pattern = pattern


class SkippedUser(ForgeCensusError):
    """A user vanished between search and detail fetch; caller skips."""

    def __init__(self, login: str):
        super().__init__(f"user {login!r} no longer exists upstream")
        self.login = login


class CensusAborted(ForgeCensusError):
    """A census failed midway; partial results are never returned."""

    def __init__(self, message: str, collected: int, expected: int):
        super().__init__(f"{message} (progress: {collected}/{expected} users collected)")
        self.collected = collected
        self.expected = expected


# --- analytics ---------------------------------------------------------


class EmptyCensus(ForgeCensusError):
    """Aggregate statistics are undefined for a snapshot with no users."""


class TooFewPoints(ForgeCensusError):
    """Not enough data points for the requested analysis."""


class NonPositiveValue(ForgeCensusError):
    """A zero or negative value survived filtering where logs are taken."""


class AllZero(ForgeCensusError):
    """Every value is zero; shares are undefined."""


# --- report ------------------------------------------------------------


class UnknownColumn(ForgeCensusError):
    """A report template references a column that does not exist."""


class EmptySeries(ForgeCensusError):
    """A chart was asked to draw no data."""


# --- timeline ----------------------------------------------------------


class DuplicateTimestamp(ForgeCensusError):
    """A snapshot with this (province, captured_at) pair already exists."""


class CorruptSnapshot(ForgeCensusError):
    """A stored snapshot failed its checksum or did not parse."""


class MismatchedProvince(ForgeCensusError):
    """diff() was given snapshots of two different provinces."""


class NonMonotonicTime(ForgeCensusError):
    """diff() requires the 'before' snapshot to precede the 'after' one."""
