"""Undetermined-coefficient solves over the rationals.

An unknown expression is written as ``sum_k c_k * b_k`` over a finite basis
of monomials ``b_k``; an identity that is linear in the ``c_k`` is matched
coefficient by coefficient and the resulting linear system is solved
exactly.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations_with_replacement
from typing import Sequence

from sympy import QQ
from sympy.polys.matrices import DomainMatrix

from .core import ONE, Expr, Indep, Jet, VarTable, multi_indices_upto


def polynomial_basis(atoms: Sequence, degree: int) -> list[Expr]:
    """All monomials of total degree <= ``degree`` in ``atoms``, canonical order."""
    atoms = sorted(atoms, key=lambda a: a.sort_key)
    out = [ONE]
    for d in range(1, degree + 1):
        for combo in combinations_with_replacement(atoms, d):
            term = ONE
            for a in combo:
                term = term * Expr.atom(a)
            out.append(term)
    return out


def jet_atoms(vars: VarTable, deps: Sequence[str], order: int, with_x: bool = True) -> list:
    atoms = [Indep(x) for x in vars.independent] if with_x else []
    for dep in deps:
        atoms += [Jet(dep, J) for J in multi_indices_upto(vars.n, order)]
    return atoms


def _to_qq(c: Fraction):
    return QQ(c.numerator, c.denominator)


def _from_qq(c) -> Fraction:
    return Fraction(int(c.numerator), int(c.denominator))


def _matrix(columns: Sequence[Expr], target: Expr | None):
    rows: dict = {}
    cols = list(columns) + ([target] if target is not None else [])
    for j, col in enumerate(cols):
        for mono, c in col._terms.items():
            rows.setdefault(mono, {})[j] = _to_qq(c)
    # row order is irrelevant to the solution set; keep it deterministic anyway
    keyed = sorted(rows.items(), key=lambda mr: Expr._raw({mr[0]: Fraction(1)}).sort_key)
    data = {i: r for i, (_, r) in enumerate(keyed)}
    return DomainMatrix(data, (max(len(keyed), 1), len(cols)), QQ)


def solve_combination(columns: Sequence[Expr], target: Expr) -> list[Fraction] | None:
    """Rational ``c`` with ``sum c_k columns[k] == target``, or None.

    Free parameters of the solution are set to zero, so the result is the
    particular solution read off the reduced row echelon form.
    """
    ncols = len(columns)
    if target.is_zero():
        return [Fraction(0)] * ncols
    if ncols == 0:
        return None
    M = _matrix(columns, target)
    R, pivots = M.rref()
    if ncols in pivots:
        return None
    sol = [Fraction(0)] * ncols
    rep = R.to_sparse().rep
    for row, p in enumerate(pivots):
        sol[p] = _from_qq(rep.get(row, {}).get(ncols, QQ(0)))
    return sol


def nullspace(columns: Sequence[Expr]) -> list[list[Fraction]]:
    """Basis of ``{c : sum c_k columns[k] == 0}``, in rref order."""
    if not columns:
        return []
    if all(c.is_zero() for c in columns):
        return [[Fraction(int(k == j)) for k in range(len(columns))] for j in range(len(columns))]
    M = _matrix(columns, None)
    N = M.nullspace().to_sparse().rep
    out = []
    for i in sorted(N):
        vec = [Fraction(0)] * len(columns)
        for j, c in N[i].items():
            vec[j] = _from_qq(c)
        out.append(vec)
    return out


def combine(coeffs: Sequence[Fraction], basis: Sequence[Expr]) -> Expr:
    out = Expr.coerce(0)
    for c, b in zip(coeffs, basis):
        if c:
            out = out + b * c
    return out
