"""Deterministic text rendering; the output parses back to the same expression."""

from __future__ import annotations

from fractions import Fraction

from .core import Expr, Func, Indep, Jet, Param, VarTable


def _atom_text(atom, vars: VarTable | None) -> str:
    if isinstance(atom, (Indep, Param)):
        return atom.name
    if isinstance(atom, Jet):
        if atom.order == 0:
            return atom.name
        if vars is None:
            return f"{atom.name}[{','.join(map(str, atom.orders))}]"
        wrt = [x for x, k in zip(vars.independent, atom.orders) for _ in range(k)]
        return f"D({atom.name},{','.join(wrt)})"
    if isinstance(atom, Func):
        return f"{atom.name}({render(atom.arg, vars)})"
    raise TypeError(f"not an atom: {atom!r}")


def _coeff_text(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def render(e: Expr, vars: VarTable | None = None) -> str:
    """Render in canonical term order, e.g. ``-1*v*D(u,x) + D(u,t)``."""
    e = Expr.coerce(e)
    if e.is_zero():
        return "0"
    parts = []
    for idx, (mono, c) in enumerate(e.items()):
        factors = []
        for atom, p in mono:
            text = _atom_text(atom, vars)
            if p != 1:
                text += f"^{p}" if p > 0 else f"^({p})"
            factors.append(text)
        mag = abs(c)
        if not factors:
            body = _coeff_text(mag)
        elif mag == 1:
            body = "*".join(factors)
        else:
            body = "*".join([_coeff_text(mag)] + factors)
        if idx == 0:
            if c < 0:
                body = "-" + (body if not factors or mag != 1 else "1*" + body)
            parts.append(body)
        else:
            parts.append(("- " if c < 0 else "+ ") + body)
    return " ".join(parts)
