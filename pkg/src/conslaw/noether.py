"""Conserved vectors from generators of the joint original + adjoint system."""

from __future__ import annotations

import itertools
import logging
import random
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Mapping, Sequence

from .adjoint import DiffSystem, SelfAdjointReport, Verdict
from .core import ZERO, Expr, ExprError, Func, Indep, Jet, MultiIndex, VarTable, eval_numeric, normalize
from .jet import (
    apply_prolonged,
    characteristic,
    divergence,
    euler,
    family_substitute,
    higher_euler,
    multinomial,
    total_derivative_multi,
)

log = logging.getLogger(__name__)


class Status(str, Enum):
    UNVERIFIED = "unverified"
    VERIFIED_SYMBOLIC = "verified_symbolic"
    VERIFIED_NUMERIC = "verified_numeric"
    FAILED = "failed"


class NotADivergence(ExprError):
    """The invariance residual could not be written as a total divergence."""

    def __init__(self, message: str, remainder: Expr):
        super().__init__(message)
        self.remainder = remainder


@dataclass(frozen=True)
class ConservedVector:
    components: tuple
    lagrangian: Expr
    b_vector: tuple
    generator_id: str = ""
    status: Status = Status.UNVERIFIED
    residual: Mapping = field(default_factory=dict)
    trivial: bool = False


def characteristics(X) -> dict:
    """W^j = eta_j - sum_i xi^i u^j_{x^i}, one per dependent family of X."""
    vars = X.vars
    families = list(vars.original)
    if X.extended is not None:
        families += list(vars.nonlocal_)
    return {dep: characteristic(X, dep, vars) for dep in families}


# ---------------------------------------------------------------------------
# total divergences


def _jet_degree(mono) -> int:
    d = 0
    for a, p in mono:
        if isinstance(a, Jet):
            if p < 0:
                raise ExprError("negative powers of jet variables are not supported")
            d += p
        elif isinstance(a, Func) and a.arg.jets():
            raise ExprError("functions of jet variables are not supported")
    return d


def _integrate_x(term: Expr, vars: VarTable) -> tuple[int, Expr] | None:
    """Antiderivative of a single jet-free monomial in some x^r."""
    (mono, c), = term.items()
    for r, name in enumerate(vars.independent):
        x = Indep(name)
        if any(isinstance(a, Func) and x in a.arg.all_atoms() for a, _ in mono):
            continue
        p = dict(mono).get(x, 0)
        if p == -1:
            continue
        rest = tuple((a, q) for a, q in mono if a != x)
        new = rest + (((x, p + 1),))
        new = tuple(sorted(new, key=lambda ap: ap[0].sort_key))
        return r, Expr._raw({new: c / (p + 1)})
    return None


def divergence_potential(R, vars: VarTable) -> tuple:
    """B with div B = R, by the homotopy operator for total divergences.

    Raises :class:`NotADivergence` when the Euler operator does not
    annihilate ``R`` or when the result does not reproduce ``R``.
    """
    R = normalize(R)
    n = vars.n
    for dep in sorted({a.name for a in R.jets()}):
        E = euler(R, dep, vars)
        if not E.is_zero():
            raise NotADivergence(f"Euler derivative in {dep!r} does not vanish", R)
    B = [ZERO] * n
    by_degree: dict = {}
    for mono, c in R.terms.items():
        term = Expr._raw({mono: c})
        d = _jet_degree(mono)
        if d == 0:
            found = _integrate_x(term, vars)
            if found is None:
                raise NotADivergence("cannot integrate a jet-free term", term)
            r, anti = found
            B[r] = B[r] + anti
        else:
            by_degree[d] = by_degree.get(d, ZERO) + term
    for d, Rd in sorted(by_degree.items()):
        deps = sorted({a.name for a in Rd.jets()})
        for r in range(n):
            acc = ZERO
            for dep in deps:
                acc = acc + _homotopy_integrand(Rd, dep, r, vars)
            B[r] = B[r] + acc * Fraction(1, d)
    if divergence(B, vars) != R:
        raise NotADivergence("homotopy formula did not reproduce the residual", R - divergence(B, vars))
    return tuple(B)


def _homotopy_integrand(f: Expr, dep: str, r: int, vars: VarTable) -> Expr:
    out = ZERO
    step = MultiIndex.unit(vars.n, r)
    for a in sorted((a for a in f.jets() if a.name == dep), key=lambda a: a.sort_key):
        K = a.orders
        if K[r] == 0:
            continue
        top = K - step
        dfdK = f.diff(a)
        for I in _box(top):
            L = top - I
            coef = Fraction(multinomial(I) * multinomial(L), multinomial(K))
            inner = total_derivative_multi(dfdK, L, vars)
            if L.order % 2:
                inner = -inner
            out = out + Expr.atom(Jet(dep, I)) * inner * coef
    return out


def _box(top) -> list[MultiIndex]:
    return [MultiIndex(I) for I in itertools.product(*(range(k + 1) for k in top))]


# ---------------------------------------------------------------------------
# the conserved vector


def invariance_residual(L, Y, vars: VarTable) -> Expr:
    """Pr Y(L) + L div(xi)."""
    L = normalize(L)
    s = max((a.order for a in L.jets()), default=0)
    return apply_prolonged(Y, s, L, vars) + L * Y.div_xi()


def compute_b(L, Y, sys: DiffSystem) -> tuple:
    """B with Pr Y(L) + L div(xi) = div B, up to terms vanishing on solutions."""
    vars = sys.vars
    R = invariance_residual(L, Y, vars)
    zero = (ZERO,) * vars.n
    if R.is_zero():
        return zero
    reduced = None
    if sys.solved_form is not None:
        reduced = reduce_on_shell(R, sys)
        if reduced.is_zero():
            return zero
    try:
        return divergence_potential(R, vars)
    except (NotADivergence, ExprError) as exc:
        log.debug("off-shell extraction failed: %s", exc)
    if reduced is not None:
        try:
            return divergence_potential(reduced, vars)
        except NotADivergence as exc:
            raise NotADivergence("invariance residual is not a total divergence", exc.remainder) from None
    raise NotADivergence("invariance residual is not a total divergence", R)


def _index_box(L: Expr, dep: str, slot: int, n: int) -> list[MultiIndex]:
    bounds = [0] * n
    for a in L.jets():
        if a.name == dep:
            bounds = [max(b, k) for b, k in zip(bounds, a.orders)]
    if bounds[slot] == 0:
        return []
    bounds[slot] -= 1
    return _box(bounds)


def conserved_vector(L, Y, B: Sequence, vars: VarTable, weighted: bool = True,
                     generator_id: str = "") -> ConservedVector:
    """C^i = -B^i + xi^i L + sum_j sum_I D_I(W^j) * higher_euler(L, j, I, i).

    ``I`` runs over the box of derivative counts of ``L`` (one less in slot
    ``i``).  ``weighted=False`` drops the multinomial weights of
    :func:`higher_euler`; the two agree unless ``L`` has mixed partials.
    """
    L = normalize(L)
    if len(B) != vars.n:
        raise ExprError(f"B needs {vars.n} components")
    W = characteristics(Y)
    deps = sorted({a.name for a in L.jets()}, key=vars.dependents.index)
    comps = []
    for i in range(vars.n):
        c = -normalize(B[i]) + Y.xi[i] * L
        for dep in deps:
            w = W.get(dep, ZERO)
            if w.is_zero():
                continue
            for I in _index_box(L, dep, i, vars.n):
                he = higher_euler(L, dep, I, i, vars, weighted=weighted)
                if he.is_zero():
                    continue
                c = c + total_derivative_multi(w, I, vars) * he
        comps.append(c)
    return ConservedVector(tuple(comps), L, tuple(normalize(b) for b in B), generator_id)


# ---------------------------------------------------------------------------
# verification


def reduce_on_shell(e, sys: DiffSystem) -> Expr:
    """Normal form modulo the joint system and its differential consequences."""
    return sys.reducer().reduce(e)


def is_trivial(C: ConservedVector, sys: DiffSystem) -> bool:
    """Components vanish on solutions, or their on-shell form is a null divergence."""
    vars = sys.vars
    if divergence(C.components, vars).is_zero():
        return True
    if sys.solved_form is None:
        return False
    red = [reduce_on_shell(c, sys) for c in C.components]
    if all(c.is_zero() for c in red):
        return True
    return divergence(red, vars).is_zero()


def numeric_residuals(C: ConservedVector, sys: DiffSystem, samples: int = 100,
                      seed: int | None = 0, box: float = 1.0) -> tuple[float, float]:
    """Largest |div C| and largest scaled residual over random on-shell points.

    Free jet coordinates are drawn uniformly from ``[-box, box]``; leading
    derivatives are computed from the solved equations.  Returns
    ``(max |residual|, max |residual| / (1 + max_i |C^i|))``.
    """
    vars = sys.vars
    reducer = sys.reducer()
    d = divergence(C.components, vars)
    exprs = [d, *C.components]
    atoms = set()
    for e in exprs:
        atoms |= {a for a in e.all_atoms() if isinstance(a, (Jet, Indep))}
    leads = {}
    free = set()
    for a in atoms:
        r = reducer.reduce_atom(a) if isinstance(a, Jet) else None
        if r is None:
            free.add(a)
        else:
            leads[a] = r
            free |= {b for b in r.all_atoms() if isinstance(b, (Jet, Indep))}
    free = sorted(free, key=lambda a: a.sort_key)
    lead_items = sorted(leads.items(), key=lambda kv: kv[0].sort_key)
    rng = random.Random(seed)
    worst = worst_scaled = 0.0
    done = attempts = 0
    while done < samples:
        attempts += 1
        if attempts > 20 * samples + 100:
            raise ExprError("could not find enough admissible sample points")
        point = {a: rng.uniform(-box, box) for a in free}
        try:
            for a, r in lead_items:
                point[a] = eval_numeric(r, point)
            res = abs(eval_numeric(d, point))
            scale = max((abs(eval_numeric(c, point)) for c in C.components), default=0.0)
        except (ExprError, ZeroDivisionError, OverflowError):
            continue
        worst = max(worst, res)
        worst_scaled = max(worst_scaled, res / (1.0 + scale))
        done += 1
    return worst, worst_scaled


def verify_conservation(C: ConservedVector, sys: DiffSystem, mode: str = "both",
                        samples: int = 100, tol: float = 1e-9, seed: int | None = 0) -> ConservedVector:
    """Check div C = 0 on solutions; returns C with status and residuals filled in."""
    if mode not in ("symbolic", "numeric", "both"):
        raise ExprError(f"unknown verification mode {mode!r}")
    vars = sys.vars
    residual: dict = {}
    ok = True
    status = Status.FAILED
    if mode in ("symbolic", "both"):
        rem = reduce_on_shell(divergence(C.components, vars), sys)
        residual["symbolic_remainder"] = rem
        ok = rem.is_zero()
        if ok:
            status = Status.VERIFIED_SYMBOLIC
    if ok and mode in ("numeric", "both"):
        worst, scaled = numeric_residuals(C, sys, samples, seed)
        residual.update(numeric_max=worst, numeric_max_scaled=scaled, samples=samples, tol=tol)
        num_ok = scaled <= tol
        if mode == "numeric":
            status = Status.VERIFIED_NUMERIC if num_ok else Status.FAILED
        elif not num_ok:
            status = Status.FAILED
    if not ok:
        status = Status.FAILED
    return replace(C, status=status, residual=residual, trivial=is_trivial(C, sys))


def strip_nonlocal(C: ConservedVector, report: SelfAdjointReport, sys: DiffSystem,
                   **verify_kw) -> ConservedVector:
    """Substitute the (quasi-)self-adjoint witness for the nonlocal variables."""
    vars = sys.vars
    if report.verdict is Verdict.SELF_ADJOINT:
        mapping = {nl: vars.d(vars.partner(nl)) for nl in vars.nonlocal_}
    elif report.verdict is Verdict.QUASI_SELF_ADJOINT:
        mapping = dict(report.h) | dict(report.h_tilde)
    else:
        raise ExprError("stripping nonlocal variables needs a self-adjoint or quasi-self-adjoint verdict")
    present = {a.name for e in C.components for a in e.jets()}
    if not present & set(vars.nonlocal_):
        return C

    def sub(e):
        for nl, target in mapping.items():
            e = family_substitute(e, nl, target, vars)
        return e

    stripped = replace(
        C,
        components=tuple(sub(c) for c in C.components),
        lagrangian=sub(C.lagrangian),
        b_vector=tuple(sub(b) for b in C.b_vector),
        status=Status.UNVERIFIED,
        residual={},
    )
    return verify_conservation(stripped, sys, **verify_kw)
