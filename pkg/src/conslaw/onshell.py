"""Reduction modulo solved equations and their differential consequences."""

from __future__ import annotations

from typing import Sequence

from .core import Expr, ExprError, Func, Jet, VarTable, normalize, partial, substitute_atom
from .jet import total_derivative_multi

Rule = tuple  # (Jet lead, Expr rhs)


def solve_for(eq, lead: Jet) -> Expr:
    """Right side r of ``lead = r`` from ``eq = 0``.

    ``eq`` must be linear in ``lead`` with a single-monomial coefficient,
    and after solving nothing on the right may be ``lead`` or one of its
    derivatives.
    """
    eq = normalize(eq)
    if lead not in eq.atoms():
        raise ExprError(f"leading derivative {lead} does not occur in the equation")
    coef = partial(eq, lead)
    if lead in coef.all_atoms():
        raise ExprError(f"equation is not linear in its leading derivative {lead}")
    if len(coef) != 1:
        raise ExprError(f"coefficient of the leading derivative {lead} must be a single term")
    rest = eq - coef * Expr.atom(lead)
    rhs = -rest / coef
    for a in rhs.jets():
        if a.name == lead.name and lead.orders.divides(a.orders):
            raise ExprError(f"solved form for {lead} refers to {a}, a derivative of itself")
    return rhs


class Reducer:
    """Replaces every jet that is a derivative of a rule's leading term.

    A jet ``u_K`` with rule ``u_J = r`` and ``J <= K`` becomes
    ``D_{K-J}(r)``, itself reduced again.  The first matching rule wins.
    """

    def __init__(self, rules: Sequence[Rule], vars: VarTable, max_depth: int = 200):
        self.rules = tuple(rules)
        self.vars = vars
        self.max_depth = max_depth
        self._memo: dict = {}
        self._active: set = set()

    def leads(self) -> list:
        return [lead for lead, _ in self.rules]

    def is_leading(self, a: Jet) -> bool:
        return self._rule_for(a) is not None

    def _rule_for(self, a: Jet):
        for lead, rhs in self.rules:
            if lead.name == a.name and lead.orders.divides(a.orders):
                return lead, rhs
        return None

    def reduce_atom(self, a: Jet) -> Expr | None:
        if a in self._memo:
            return self._memo[a]
        rule = self._rule_for(a)
        if rule is None:
            self._memo[a] = None
            return None
        if a in self._active or len(self._active) > self.max_depth:
            raise ExprError(f"on-shell reduction does not terminate at {a}")
        self._active.add(a)
        try:
            lead, rhs = rule
            value = self.reduce(total_derivative_multi(rhs, a.orders - lead.orders, self.vars))
        finally:
            self._active.discard(a)
        self._memo[a] = value
        return value

    def reduce(self, e) -> Expr:
        e = normalize(e)
        bindings = {}
        for a in e.all_atoms():
            if isinstance(a, Jet):
                r = self.reduce_atom(a)
                if r is not None:
                    bindings[a] = r
        return substitute_atom(e, bindings) if bindings else e


def lead_candidates(eq: Expr, families: Sequence[str]) -> list[Jet]:
    """Jets of ``families`` that ``eq`` can be solved for."""
    out = []
    for a in eq.atoms():
        if not isinstance(a, Jet) or a.name not in families:
            continue
        if any(isinstance(f, Func) and a in f.arg.all_atoms() for f in eq.atoms()):
            continue
        try:
            solve_for(eq, a)
        except ExprError:
            continue
        out.append(a)
    return out
