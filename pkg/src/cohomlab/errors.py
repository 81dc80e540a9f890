"""Exception hierarchy shared by all cohomlab modules.

The CLI maps these onto exit codes: validation-type errors exit 2,
solver-type errors exit 3, I/O problems exit 4.
"""

from __future__ import annotations


class CohomlabError(Exception):
    """Base class for all library errors."""


class ValidationError(CohomlabError):
    """Bad user input: parameters outside the tables, malformed jobs, etc."""


class ParseError(ValidationError):
    """Expression syntax error; ``offset`` is the 0-based byte offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class EvalDomainError(CohomlabError):
    """Domain violation while evaluating an expression; carries the point ``r``."""

    def __init__(self, message: str, r: float):
        super().__init__(f"{message} (at r={r!r})")
        self.r = r


class DegenerateProfileError(CohomlabError):
    """Positivity of f or h failed at an interior point."""

    def __init__(self, r: float, f: float, h: float):
        super().__init__(f"profile degenerate at r={r!r}: f={f!r}, h={h!r}")
        self.r = r
        self.f = f
        self.h = h


class SolverFailure(CohomlabError):
    """A solver could not produce a solution (scan failed, blow-up, ...)."""

    def __init__(self, message: str, r_last: float | None = None):
        if r_last is not None:
            message = f"{message} (last good r={r_last!r})"
        super().__init__(message)
        self.r_last = r_last


class BlowUpError(SolverFailure):
    """Step-size underflow during integration; ``r_last`` is the last good point."""


class BracketError(SolverFailure):
    """Root bracketing failed: no sign change on the given interval."""


class SingularSystemError(SolverFailure):
    """Linear system is numerically singular."""
