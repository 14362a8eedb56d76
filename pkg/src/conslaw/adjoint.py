"""Formal Lagrangian, adjoint system and (quasi-)self-adjointness."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Mapping, Sequence

from .ansatz import combine, jet_atoms, nullspace, polynomial_basis, solve_combination
from .core import ZERO, Expr, ExprError, Func, Jet, Param, VarTable, normalize, substitute_atom
from .jet import euler, family_substitute
from .onshell import Reducer, lead_candidates, solve_for

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DiffSystem:
    """Equations ``F_a = 0`` in the primary and extra dependent variables.

    ``solved_form`` lists ``(leading jet, right side)`` pairs used for
    on-shell reduction, or is None when no leading derivatives were given.
    """

    vars: VarTable
    equations: tuple
    solved_form: tuple | None = None
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "equations", tuple(normalize(e) for e in self.equations))
        if len(self.equations) != len(self.vars.primary):
            raise ExprError(
                f"{len(self.equations)} equation(s) but {len(self.vars.primary)} primary dependent variable(s)"
            )
        for k, eq in enumerate(self.equations):
            for a in eq.all_atoms():
                if not self.vars.knows(a) or isinstance(a, Param):
                    raise ExprError(f"equation {k + 1} uses unknown variable {a}")
                if isinstance(a, Jet) and a.name in self.vars.nonlocal_:
                    raise ExprError(f"equation {k + 1} uses nonlocal variable {a.name!r}")
        if self.solved_form is not None:
            rules = tuple((lead, normalize(rhs)) for lead, rhs in self.solved_form)
            for lead, rhs in rules:
                if lead.name not in self.vars.original:
                    raise ExprError(f"solved-form lead {lead} is not an original dependent variable")
                for a in rhs.jets():
                    if a.name == lead.name and lead.orders.divides(a.orders):
                        raise ExprError(f"solved form for {lead} refers to its own derivative {a}")
            object.__setattr__(self, "solved_form", rules)

    @classmethod
    def from_leads(cls, vars: VarTable, equations: Sequence, leads: Sequence | None = None,
                   name: str = "") -> "DiffSystem":
        """Build a system, solving equation k for ``leads[k]`` when given."""
        equations = [normalize(e) for e in equations]
        solved = None
        if leads is not None:
            if len(leads) != len(equations):
                raise ExprError("one leading derivative per equation is required")
            solved = tuple((lead, solve_for(eq, lead)) for eq, lead in zip(equations, leads))
        return cls(vars, tuple(equations), solved, name)

    @property
    def m(self) -> int:
        return len(self.vars.primary)

    @property
    def m_tilde(self) -> int:
        return len(self.vars.extra)

    @property
    def order(self) -> int:
        return max((a.order for eq in self.equations for a in eq.jets()), default=0)

    @cached_property
    def adjoint(self) -> "AdjointSystem":
        return adjoint_system(self)

    @cached_property
    def joint_rules(self) -> tuple:
        return joint_solved_form(self)

    def reducer(self) -> Reducer:
        if self.solved_form is None:
            raise ExprError(
                "system has no solved form; declare leading derivatives or use numeric verification"
            )
        return Reducer(self.joint_rules, self.vars)


@dataclass(frozen=True)
class AdjointSystem:
    vars: VarTable
    f_star: tuple
    f_tilde_star: tuple
    lagrangian: Expr

    @property
    def equations(self) -> tuple:
        return self.f_star + self.f_tilde_star


def formal_lagrangian(sys: DiffSystem) -> Expr:
    """L = sum_b v^b F_b + (sum of extra nonlocals) * (sum of all F)."""
    vars = sys.vars
    L = ZERO
    for v, F in zip(vars.nonlocal_primary, sys.equations):
        L = L + vars.d(v) * F
    if vars.nonlocal_extra:
        vt_sum = ZERO
        for vt in vars.nonlocal_extra:
            vt_sum = vt_sum + vars.d(vt)
        F_sum = ZERO
        for F in sys.equations:
            F_sum = F_sum + F
        L = L + vt_sum * F_sum
    return L


def adjoint_system(sys: DiffSystem) -> AdjointSystem:
    vars = sys.vars
    L = formal_lagrangian(sys)
    f_star = tuple(euler(L, u, vars) for u in vars.primary)
    f_tilde = tuple(euler(L, w, vars) for w in vars.extra)
    adj = AdjointSystem(vars, f_star, f_tilde, L)
    check_recovery(sys, adj)
    return adj


def check_recovery(sys: DiffSystem, adj: AdjointSystem) -> None:
    """Euler derivatives of L in the nonlocal variables give back the system."""
    vars = sys.vars
    for v, F in zip(vars.nonlocal_primary, sys.equations):
        if euler(adj.lagrangian, v, vars) != F:
            raise ExprError(f"formal Lagrangian does not recover the equation for {v}")
    total = ZERO
    for F in sys.equations:
        total = total + F
    for vt in vars.nonlocal_extra:
        if euler(adj.lagrangian, vt, vars) != total:
            raise ExprError(f"formal Lagrangian does not recover the summed equation for {vt}")


def joint_solved_form(sys: DiffSystem) -> tuple:
    """Leading derivatives for the original system plus its adjoint.

    The adjoint leads are chosen greedily: lowest order first, preferring the
    nonlocal jet paired with an original lead, then the nonlocal variable
    order.  Adjoint equations that reduce to zero are consequences and get
    no rule.
    """
    if sys.solved_form is None:
        raise ExprError("system has no solved form")
    vars = sys.vars
    rules = list(sys.solved_form)
    paired = {(vars.partner(lead.name), lead.orders) for lead, _ in rules}
    family_rank = {name: k for k, name in enumerate(vars.nonlocal_)}

    def key(a: Jet):
        return (a.order, 0 if (a.name, a.orders) in paired else 1, family_rank[a.name], a.sort_key)

    pending = list(sys.adjoint.equations)
    while pending:
        reducer = Reducer(rules, vars)
        reduced = [reducer.reduce(e) for e in pending]
        best = None
        for k, eq in enumerate(reduced):
            if eq.is_zero():
                continue
            cands = lead_candidates(eq, vars.nonlocal_)
            if not cands:
                raise ExprError(
                    f"cannot choose a leading derivative for adjoint equation {eq!r}"
                )
            a = min(cands, key=key)
            if best is None or key(a) < key(best[1]):
                best = (k, a)
        if best is None:
            break
        k, a = best
        rules.append((a, solve_for(reduced[k], a)))
        log.debug("adjoint lead %s", a)
        pending = [e for j, e in enumerate(reduced) if j != k and not e.is_zero()]
    return tuple(rules)


# ---------------------------------------------------------------------------
# self-adjointness


class Verdict(str, Enum):
    SELF_ADJOINT = "self_adjoint"
    QUASI_SELF_ADJOINT = "quasi_self_adjoint"
    NOT_DETERMINED = "not_determined"
    REFUTED = "refuted"


@dataclass(frozen=True)
class SelfAdjointReport:
    verdict: Verdict
    gamma: tuple | None = None
    gamma_tilde: tuple | None = None
    h: tuple | None = None
    h_tilde: tuple | None = None
    detail: str = ""
    bounds: Mapping = field(default_factory=dict)


def gamma_ansatz(sys: DiffSystem, order: int, degree: int) -> list[Expr]:
    return polynomial_basis(jet_atoms(sys.vars, sys.vars.original, order), degree)


def _substitute_families(exprs, mapping: Mapping[str, Expr], vars: VarTable) -> list[Expr]:
    out = []
    for e in exprs:
        for fam, target in mapping.items():
            e = family_substitute(e, fam, target, vars)
        out.append(e)
    return out


def _refutes(target: Expr, sys: DiffSystem, degree: int) -> bool:
    """No monomial g*f with deg g <= degree can produce some monomial of ``target``."""
    f_monos = [mono for F in sys.equations for mono in F.terms]
    for mono, _ in target.items():
        powers = dict(mono)
        producible = False
        for f in f_monos:
            rest = dict(powers)
            for a, p in f:
                rest[a] = rest.get(a, 0) - p
            if any(p < 0 for p in rest.values()):
                continue
            if any(isinstance(a, Func) and p for a, p in rest.items()):
                continue
            if sum(rest.values()) <= degree:
                producible = True
                break
        if not producible:
            return True
    return False


def check_self_adjoint(sys: DiffSystem, max_gamma_order: int | None = None,
                       max_gamma_degree: int = 2) -> SelfAdjointReport:
    """Substitute (v, vt) := (u, w) and solve for Gamma in the polynomial ansatz."""
    vars = sys.vars
    order = sys.order if max_gamma_order is None else max_gamma_order
    if order < 0 or max_gamma_degree < 0:
        raise ExprError("ansatz bounds must be non-negative")
    bounds = {"gamma_order": order, "gamma_degree": max_gamma_degree}
    mapping = {nl: vars.d(vars.partner(nl)) for nl in vars.nonlocal_}
    targets = _substitute_families(sys.adjoint.equations, mapping, vars)
    basis = gamma_ansatz(sys, order, max_gamma_degree)
    rows = []
    for k, T in enumerate(targets):
        row = _solve_gamma_row(T, sys, basis)
        if row is None:
            if _refutes(T, sys, max_gamma_degree):
                return SelfAdjointReport(
                    Verdict.REFUTED,
                    detail=f"adjoint equation {k + 1} has a monomial outside every Gamma*F product",
                    bounds=bounds,
                )
            return SelfAdjointReport(
                Verdict.NOT_DETERMINED,
                detail=f"no Gamma within the ansatz for adjoint equation {k + 1}",
                bounds=bounds,
            )
        rows.append(row)
    return SelfAdjointReport(
        Verdict.SELF_ADJOINT,
        gamma=tuple(rows[: sys.m]),
        gamma_tilde=tuple(rows[sys.m:]),
        bounds=bounds,
    )


def _solve_gamma_row(T: Expr, sys: DiffSystem, basis: list[Expr]) -> tuple | None:
    columns = [b * F for F in sys.equations for b in basis]
    sol = solve_combination(columns, T)
    if sol is None:
        return None
    nb = len(basis)
    return tuple(combine(sol[k * nb:(k + 1) * nb], basis) for k in range(sys.m))


def split_params(e: Expr) -> dict:
    """Write ``e`` as ``sum_p p * e_p + e_0``; keys are Param atoms and None."""
    out: dict = {}
    for mono, c in e.terms.items():
        params = [(a, p) for a, p in mono if isinstance(a, Param)]
        if len(params) > 1 or (params and params[0][1] != 1):
            raise ExprError("ansatz must be linear in its undetermined constants")
        key = params[0][0] if params else None
        rest = tuple((a, p) for a, p in mono if not isinstance(a, Param))
        out[key] = out.get(key, ZERO) + Expr._raw({rest: c})
    return out


def _check_candidate(candidate: Mapping[str, Expr], vars: VarTable) -> None:
    for name, h in candidate.items():
        if name not in vars.nonlocal_:
            raise ExprError(f"{name!r} is not a nonlocal variable")
        for a in h.all_atoms():
            if isinstance(a, Jet) and (a.order > 0 or a.name not in vars.original):
                raise ExprError(f"ansatz for {name!r} may only use the original dependent variables")
            if isinstance(a, Func) and any(isinstance(b, Param) for b in a.arg.all_atoms()):
                raise ExprError("undetermined constants may not appear inside functions")
            if not isinstance(a, (Jet, Param, Func)):
                raise ExprError(f"ansatz for {name!r} may not depend on {a}")


def check_quasi_self_adjoint(sys: DiffSystem, candidates: Sequence[Mapping[str, Expr]],
                             max_gamma_order: int | None = None,
                             max_gamma_degree: int = 2) -> SelfAdjointReport:
    """Try each candidate substitution (v, vt) := (h, ht) in order.

    A candidate maps nonlocal names to expressions that are linear in
    :class:`Param` constants; missing nonlocals are set to zero.  The
    constants and the Gamma coefficients are solved for together, and a
    solution must leave the substitution nonzero.
    """
    if not candidates:
        raise ExprError("empty ansatz family")
    vars = sys.vars
    order = sys.order if max_gamma_order is None else max_gamma_order
    bounds = {"gamma_order": order, "gamma_degree": max_gamma_degree}
    basis = gamma_ansatz(sys, order, max_gamma_degree)
    for idx, cand in enumerate(candidates):
        cand = {k: normalize(v) for k, v in cand.items()}
        _check_candidate(cand, vars)
        found = _solve_quasi(sys, cand, basis)
        if found is not None:
            h, rows = found
            return SelfAdjointReport(
                Verdict.QUASI_SELF_ADJOINT,
                gamma=tuple(rows[: sys.m]),
                gamma_tilde=tuple(rows[sys.m:]),
                h=tuple((nl, h.get(nl, ZERO)) for nl in vars.nonlocal_primary),
                h_tilde=tuple((nl, h.get(nl, ZERO)) for nl in vars.nonlocal_extra),
                detail=f"candidate {idx + 1}",
                bounds=bounds,
            )
    return SelfAdjointReport(Verdict.NOT_DETERMINED, detail="no candidate succeeded", bounds=bounds)


def _solve_quasi(sys: DiffSystem, cand: Mapping[str, Expr], basis: list[Expr]):
    vars = sys.vars
    adj_eqs = sys.adjoint.equations
    nrows = len(adj_eqs)
    parts = {nl: split_params(cand.get(nl, ZERO)) for nl in vars.nonlocal_}
    params = sorted({p for d in parts.values() for p in d if p is not None}, key=lambda a: a.sort_key)

    def image(key):
        mapping = {nl: parts[nl].get(key, ZERO) for nl in vars.nonlocal_}
        return _substitute_families(adj_eqs, mapping, vars)

    # unknown order: constants first, then Gamma rows (row-major)
    columns: list[tuple] = [tuple(-e for e in image(p)) for p in params]
    for r in range(nrows):
        for F in sys.equations:
            for b in basis:
                col = [ZERO] * nrows
                col[r] = b * F
                columns.append(tuple(col))
    rhs = tuple(image(None))
    blocks = _stack(columns, rhs, nrows)
    if any(not e.is_zero() for e in rhs):
        sol = solve_combination(blocks[0], blocks[1])
    else:
        sol = None
        for vec in nullspace(blocks[0]):
            if any(vec[: len(params)]):
                pivot = next(c for c in vec[: len(params)] if c)
                sol = [c / pivot for c in vec]
                break
    if sol is None:
        return None
    values = dict(zip(params, sol[: len(params)]))
    h = {nl: substitute_atom(cand.get(nl, ZERO), values) for nl in vars.nonlocal_}
    if all(e.is_zero() for e in h.values()):
        return None
    rest = sol[len(params):]
    nb = len(basis)
    rows = []
    for r in range(nrows):
        off = r * nb * sys.m
        rows.append(tuple(combine(rest[off + k * nb: off + (k + 1) * nb], basis) for k in range(sys.m)))
    return h, rows


_TAG = "__row"


def _stack(columns: Sequence[tuple], rhs: tuple, nrows: int):
    """Flatten per-row blocks into single expressions by tagging each row."""
    if nrows == 1:
        return [c[0] for c in columns], rhs[0]
    tags = [Expr.atom(Param(f"{_TAG}{r}")) for r in range(nrows)]

    def flat(block):
        out = ZERO
        for t, e in zip(tags, block):
            out = out + t * e
        return out

    return [flat(c) for c in columns], flat(rhs)
