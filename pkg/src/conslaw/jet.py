"""Total derivatives, Euler operators and prolongation on the jet space."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial
from typing import Mapping, Sequence

from .core import (
    ZERO,
    Expr,
    ExprError,
    Func,
    Indep,
    Jet,
    MultiIndex,
    VarTable,
    multi_indices_upto,
    normalize,
    partial,
    substitute_atom,
)
from .core import _func_derivative

__all__ = [
    "total_derivative",
    "total_derivative_multi",
    "euler",
    "higher_euler",
    "multinomial",
    "ProlongedGenerator",
    "prolong",
    "apply_prolonged",
    "divergence",
    "family_substitute",
]


def total_derivative(e, i, vars: VarTable) -> Expr:
    """D_{x^i} e = de/dx^i + sum over jets u_J of u_{J+e_i} de/du_J."""
    i = vars.index(i)
    return _dtotal(normalize(e), vars.independent[i], i, vars.n)


@lru_cache(maxsize=65536)
def _dtotal(e: Expr, xname: str, i: int, n: int) -> Expr:
    step = MultiIndex.unit(n, i)
    x = Indep(xname)
    out: dict = {}

    def acc(expr: Expr):
        for m, c in expr._terms.items():
            s = out.get(m, 0) + c
            if s:
                out[m] = s
            else:
                out.pop(m, None)

    for mono, c in e._terms.items():
        for idx, (atom, p) in enumerate(mono):
            if isinstance(atom, Func):
                inner = _dtotal(atom.arg, xname, i, n)
                if inner.is_zero():
                    continue
                rest = mono[:idx] + (((atom, p - 1),) if p != 1 else ()) + mono[idx + 1:]
                acc(_func_derivative(atom) * inner * Expr._raw({rest: c * p}))
                continue
            if isinstance(atom, Jet):
                new = Expr.atom(atom.shifted(step))
            elif atom == x:
                new = None
            else:
                continue
            rest = mono[:idx] + (((atom, p - 1),) if p != 1 else ()) + mono[idx + 1:]
            term = Expr._raw({rest: c * p})
            acc(term if new is None else term * new)
    return Expr._raw(out)


def total_derivative_multi(e, J, vars: VarTable) -> Expr:
    """D_J e, applying D_{x^i} J[i] times for each i."""
    e = normalize(e)
    if len(J) != vars.n:
        raise ExprError("multi-index length does not match the number of independent variables")
    for i, k in enumerate(J):
        for _ in range(k):
            e = _dtotal(e, vars.independent[i], i, vars.n)
    return e


def _jets_of(e: Expr, dep: str) -> list[Jet]:
    return sorted((a for a in e.jets() if a.name == dep), key=lambda a: a.sort_key)


def euler(e, dep: str, vars: VarTable) -> Expr:
    """Variational derivative: sum over J of (-D)^J (de/du_J)."""
    e = normalize(e)
    if dep not in vars.dependents:
        raise ExprError(f"unknown dependent variable {dep!r}")
    out = ZERO
    for a in _jets_of(e, dep):
        term = total_derivative_multi(partial(e, a), a.orders, vars)
        out = out + (term if a.order % 2 == 0 else -term)
    return out


def multinomial(J: Sequence[int]) -> int:
    out = factorial(sum(J))
    for k in J:
        out //= factorial(k)
    return out


def higher_euler(e, dep: str, I, slot, vars: VarTable, weighted: bool = True) -> Expr:
    """Inner alternating sum of the Noether current for slot ``slot``.

    Returns the sum over K >= I + e_slot of (-D)^(K - I - e_slot) de/du_K.
    With ``weighted`` each term is scaled by
    ``multinomial(I) * multinomial(K - I - e_slot) / multinomial(K)``; the
    weights are all 1 unless ``e`` contains mixed partial derivatives of
    ``dep``, and they make the resulting current exact for mixed jets.
    """
    e = normalize(e)
    i = vars.index(slot)
    I = MultiIndex(I)
    base = I + MultiIndex.unit(vars.n, i)
    out = ZERO
    for a in _jets_of(e, dep):
        K = a.orders
        if not base.divides(K):
            continue
        L = K - base
        term = total_derivative_multi(partial(e, a), L, vars)
        if L.order % 2:
            term = -term
        if weighted:
            w = Fraction(multinomial(I) * multinomial(L), multinomial(K))
            if w != 1:
                term = term * w
        out = out + term
    return out


# ---------------------------------------------------------------------------
# prolongation


def characteristic(X, dep: str, vars: VarTable) -> Expr:
    """W = eta - sum_i xi^i u_{x^i} for one dependent family."""
    eta = X.etas.get(dep, ZERO)
    w = eta
    for i, xi in enumerate(X.xi):
        if xi:
            w = w - xi * Expr.atom(Jet(dep, MultiIndex.unit(vars.n, i)))
    return w


@dataclass(frozen=True)
class ProlongedGenerator:
    base: object
    order: int
    coefficients: Mapping

    def coefficient(self, dep: str, J) -> Expr:
        return self.coefficients[(dep, MultiIndex(J))]


def _phi(X, dep: str, J: MultiIndex, W: Expr, vars: VarTable) -> Expr:
    out = total_derivative_multi(W, J, vars)
    for i, xi in enumerate(X.xi):
        if xi:
            out = out + xi * Expr.atom(Jet(dep, J + MultiIndex.unit(vars.n, i)))
    return out


def prolong(X, s: int, vars: VarTable, families: Sequence[str] | None = None) -> ProlongedGenerator:
    """Coefficients phi^J_j = D_J(W^j) + sum_i xi^i u^j_{J+e_i} for |J| <= s.

    ``families`` defaults to the original dependents plus the nonlocal ones
    when the generator carries extended components.
    """
    if families is None:
        families = list(vars.original)
        if getattr(X, "extended", None) is not None:
            families += list(vars.nonlocal_)
    coeffs = {}
    for dep in families:
        W = characteristic(X, dep, vars)
        for J in multi_indices_upto(vars.n, s):
            coeffs[(dep, J)] = _phi(X, dep, J, W, vars)
    return ProlongedGenerator(X, s, coeffs)


def apply_prolonged(X, s: int, e, vars: VarTable) -> Expr:
    """Pr^(s) X applied to ``e``: sum xi^i de/dx^i + sum phi^J_j de/du^j_J."""
    e = normalize(e)
    jets = e.jets()
    top = max((a.order for a in jets), default=0)
    if s < top:
        raise ExprError(f"prolongation order {s} is below the order {top} of the expression")
    out = ZERO
    for i, xi in enumerate(X.xi):
        if xi:
            out = out + xi * partial(e, Indep(vars.independent[i]))
    chars: dict = {}
    for a in sorted(jets, key=lambda a: a.sort_key):
        d = partial(e, a)
        if d.is_zero():
            continue
        if a.name not in chars:
            chars[a.name] = characteristic(X, a.name, vars)
        out = out + _phi(X, a.name, a.orders, chars[a.name], vars) * d
    return out


def divergence(C: Sequence, vars: VarTable) -> Expr:
    if len(C) != vars.n:
        raise ExprError(f"divergence needs {vars.n} components, got {len(C)}")
    out = ZERO
    for i, c in enumerate(C):
        out = out + total_derivative(c, i, vars)
    return out


def family_substitute(e, family: str, target, vars: VarTable) -> Expr:
    """Replace every jet of ``family`` by the matching total derivative of ``target``."""
    e = normalize(e)
    target = normalize(target)
    if any(a.name == family for a in target.jets()):
        raise ExprError(f"substitution target refers to {family!r} itself")
    bindings = {a: total_derivative_multi(target, a.orders, vars)
                for a in e.jets() if a.name == family}
    return substitute_atom(e, bindings)
