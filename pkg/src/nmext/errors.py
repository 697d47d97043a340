"""Exception types shared across the package."""

from __future__ import annotations


class NmextError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(NmextError, ValueError):
    """Operand lengths or widths do not chain."""


class BudgetExceeded(NmextError):
    """An exhaustive computation would exceed its enumeration budget."""


class PreconditionError(NmextError, ValueError):
    """Inputs violate a documented precondition (e.g. zero-probability event)."""


class SearchExhausted(NmextError):
    """A randomized search ran out of budget before meeting its target."""


class InfeasiblePlan(NmextError):
    """A parameter plan violates one of its relations."""

    def __init__(self, relation: str, detail: str = "") -> None:
        self.relation = relation
        msg = f"infeasible plan: {relation}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)
