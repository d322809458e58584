"""Shared error taxonomy.

Three failure modes are kept apart deliberately, because the command-line
driver maps them to distinct exit codes and because they mean different
things during an audit:

* ``DomainError`` -- the caller asked for something outside a precondition
  (zero input, a place of the wrong kind, malformed text).
* ``SearchExhausted`` -- a bounded deterministic search ran out of budget.
  This is *incompleteness*, never a nonexistence proof.
* ``InvariantFailure`` -- an internal cross-check (reciprocity, dual-route
  agreement, self-certification) came out wrong.  Always a bug, never
  user error.
"""
from __future__ import annotations

__all__ = ["DomainError", "SearchExhausted", "InvariantFailure"]


class DomainError(ValueError):
    """Input violates a documented precondition."""


class SearchExhausted(RuntimeError):
    """A bounded search hit its budget; result is 'unknown', not 'no'."""


class InvariantFailure(AssertionError):
    """An internal consistency check failed; indicates an implementation bug."""
