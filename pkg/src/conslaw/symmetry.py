"""Symmetry verification and extension of generators to the adjoint variables."""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Mapping, Sequence

from .adjoint import DiffSystem, _refutes
from .ansatz import combine, jet_atoms, polynomial_basis, solve_combination
from .core import ZERO, Expr, ExprError, Jet, MultiIndex, Param, VarTable, multi_indices_upto, normalize
from .jet import apply_prolonged, characteristic, total_derivative, total_derivative_multi


class Kind(str, Enum):
    POINT = "point"
    LIE_BACKLUND = "lie_backlund"


class NotASymmetry(ExprError):
    """Raised when no multiplier matrix exists within the ansatz.

    ``certified`` is True when the failure holds for every ansatz of the
    given degree regardless of derivative order.
    """

    def __init__(self, message: str, certified: bool = False):
        super().__init__(message)
        self.certified = certified


@dataclass(frozen=True)
class Generator:
    """X = sum xi^i d/dx^i + sum eta_b d/du^b + sum eta~ d/dw, optionally extended.

    ``extended`` holds ``(eta_star, eta_tilde_star)`` once the generator has
    been carried over to the nonlocal variables.
    """

    vars: VarTable
    kind: Kind
    xi: tuple
    eta: tuple
    eta_tilde: tuple = ()
    extended: tuple | None = None
    name: str = ""

    def __post_init__(self):
        vars = self.vars
        object.__setattr__(self, "kind", Kind(self.kind))
        for fld, size in (("xi", vars.n), ("eta", len(vars.primary)), ("eta_tilde", len(vars.extra))):
            vals = tuple(normalize(e) for e in getattr(self, fld))
            if len(vals) != size:
                raise ExprError(f"{fld} needs {size} component(s), got {len(vals)}")
            object.__setattr__(self, fld, vals)
        for e in self.xi + self.eta + self.eta_tilde:
            for a in e.all_atoms():
                if isinstance(a, Param) or not vars.knows(a):
                    raise ExprError(f"generator coefficient uses unknown variable {a}")
                if isinstance(a, Jet):
                    if a.name in vars.nonlocal_:
                        raise ExprError("generator coefficients may not use nonlocal variables")
                    if self.kind is Kind.POINT and a.order > 0:
                        raise ExprError(f"point generator coefficient depends on derivative {a}")
        if self.extended is not None:
            star, tstar = self.extended
            star = tuple(normalize(e) for e in star)
            tstar = tuple(normalize(e) for e in tstar)
            if len(star) != len(vars.primary) or len(tstar) != len(vars.extra):
                raise ExprError("extended components have the wrong length")
            object.__setattr__(self, "extended", (star, tstar))

    @classmethod
    def from_map(cls, vars: VarTable, kind, coefficients: Mapping[str, object], name: str = ""):
        """Build from ``{variable name: coefficient}``; missing entries are 0."""
        unknown = set(coefficients) - set(vars.independent) - set(vars.original)
        if unknown:
            raise ExprError(f"generator names unknown variables {sorted(unknown)}")
        get = lambda k: normalize(coefficients.get(k, ZERO))  # noqa: E731
        return cls(
            vars,
            Kind(kind),
            tuple(get(x) for x in vars.independent),
            tuple(get(u) for u in vars.primary),
            tuple(get(w) for w in vars.extra),
            name=name,
        )

    @property
    def etas(self) -> dict:
        out = dict(zip(self.vars.primary, self.eta))
        out.update(zip(self.vars.extra, self.eta_tilde))
        if self.extended is not None:
            out.update(zip(self.vars.nonlocal_primary, self.extended[0]))
            out.update(zip(self.vars.nonlocal_extra, self.extended[1]))
        return out

    @property
    def eta_star(self) -> tuple | None:
        return None if self.extended is None else self.extended[0]

    @property
    def eta_tilde_star(self) -> tuple | None:
        return None if self.extended is None else self.extended[1]

    def div_xi(self) -> Expr:
        out = ZERO
        for i, xi in enumerate(self.xi):
            out = out + total_derivative(xi, i, self.vars)
        return out

    def characteristic_form(self) -> "Generator":
        """The evolutionary generator with xi = 0 and eta = W."""
        eta = tuple(characteristic(self, u, self.vars) for u in self.vars.primary)
        eta_t = tuple(characteristic(self, w, self.vars) for w in self.vars.extra)
        return Generator(self.vars, Kind.LIE_BACKLUND, (ZERO,) * self.vars.n, eta, eta_t,
                         name=f"{self.name}:characteristic" if self.name else "")

    def order(self) -> int:
        return max((a.order for e in self.xi + self.eta + self.eta_tilde for a in e.jets()), default=0)


@dataclass(frozen=True)
class LambdaMatrix:
    entries: tuple  # m x m Expressions


@dataclass(frozen=True)
class LBOperatorMatrix:
    """``entries[(nu, mu)]`` is a tuple of ``(MultiIndex J, coefficient)``."""

    entries: Mapping

    def apply(self, nu: int, mu: int, F: Expr, vars: VarTable) -> Expr:
        out = ZERO
        for J, coef in self.entries.get((nu, mu), ()):
            out = out + normalize(coef) * total_derivative_multi(F, J, vars)
        return out

    def max_order(self) -> int:
        return max((MultiIndex(J).order for terms in self.entries.values() for J, _ in terms), default=0)


def _pr_order(sys: DiffSystem, X: Generator, extra: int = 0) -> int:
    return 2 * max(sys.order, X.order()) + extra


def prolonged_equations(sys: DiffSystem, X: Generator) -> list[Expr]:
    return [apply_prolonged(X, _pr_order(sys, X), F, sys.vars) for F in sys.equations]


def coefficient_basis(sys: DiffSystem, degree: int, order: int | None) -> list[Expr]:
    order = sys.order if order is None else order
    return polynomial_basis(jet_atoms(sys.vars, sys.vars.original, order), degree)


def lambda_extract(sys: DiffSystem, X: Generator, degree: int = 2, order: int | None = None) -> LambdaMatrix:
    """Solve Pr X(F_a) = sum_b lambda_ab F_b in a polynomial ansatz for lambda."""
    if X.kind is not Kind.POINT:
        raise ExprError("lambda extraction needs a point generator")
    basis = coefficient_basis(sys, degree, order)
    columns = [b * F for F in sys.equations for b in basis]
    nb = len(basis)
    rows = []
    for a, PF in enumerate(prolonged_equations(sys, X)):
        sol = solve_combination(columns, PF)
        if sol is None:
            raise NotASymmetry(
                f"no multiplier for equation {a + 1} within the ansatz",
                certified=_refutes(PF, sys, degree),
            )
        rows.append(tuple(combine(sol[k * nb:(k + 1) * nb], basis) for k in range(sys.m)))
    return LambdaMatrix(tuple(rows))


def lambda_verify(sys: DiffSystem, X: Generator, lam: LambdaMatrix) -> bool:
    if len(lam.entries) != sys.m or any(len(r) != sys.m for r in lam.entries):
        raise ExprError("lambda matrix has the wrong shape")
    for PF, row in zip(prolonged_equations(sys, X), lam.entries):
        rhs = ZERO
        for coef, F in zip(row, sys.equations):
            rhs = rhs + normalize(coef) * F
        if PF != rhs:
            return False
    return True


def _nonlocal_sum(vars: VarTable) -> Expr:
    out = ZERO
    for vt in vars.nonlocal_extra:
        out = out + vars.d(vt)
    return out


def combined_point_constraint(sys: DiffSystem, X: Generator, lam: LambdaMatrix) -> list[Expr]:
    """Right sides of eta*_b + sum eta~* = -[...] for each b."""
    vars = sys.vars
    div = X.div_xi()
    S = _nonlocal_sum(vars)
    out = []
    for b, vb in enumerate(vars.nonlocal_primary):
        col = ZERO
        lam_sum = ZERO
        for a, va in enumerate(vars.nonlocal_primary):
            col = col + vars.d(va) * lam.entries[a][b]
            lam_sum = lam_sum + lam.entries[a][b]
        out.append(-(col + vars.d(vb) * div + S * lam_sum + S * div))
    return out


def _check_sum(eta_star, eta_tilde_star, combined, what: str) -> None:
    tsum = ZERO
    for e in eta_tilde_star:
        tsum = tsum + e
    for b, (es, rhs) in enumerate(zip(eta_star, combined)):
        if es + tsum != rhs:
            raise ExprError(f"{what}: inherited components violate the combined constraint for index {b + 1}")


def inherit_point(sys: DiffSystem, X: Generator, lam: LambdaMatrix) -> Generator:
    """Extend a point symmetry to the nonlocal variables."""
    if X.kind is not Kind.POINT:
        raise ExprError("inherit_point needs a point generator")
    if not lambda_verify(sys, X, lam):
        raise ExprError("lambda matrix does not satisfy Pr X(F) = lambda F")
    vars = sys.vars
    div = X.div_xi()
    S = _nonlocal_sum(vars)
    eta_star = []
    for b, vb in enumerate(vars.nonlocal_primary):
        acc = ZERO
        for a, va in enumerate(vars.nonlocal_primary):
            acc = acc + (vars.d(va) + S) * lam.entries[a][b]
        eta_star.append(-(acc + vars.d(vb) * div))
    eta_tilde_star = [-(vars.d(vt) * div) for vt in vars.nonlocal_extra]
    _check_sum(eta_star, eta_tilde_star, combined_point_constraint(sys, X, lam), "point inheritance")
    return replace(X, extended=(tuple(eta_star), tuple(eta_tilde_star)))


# ---------------------------------------------------------------------------
# Lie-Backlund operators


def lb_verify(sys: DiffSystem, X: Generator, D: LBOperatorMatrix) -> bool:
    vars = sys.vars
    for nu, PF in enumerate(prolonged_equations(sys, X)):
        rhs = ZERO
        for mu, F in enumerate(sys.equations):
            rhs = rhs + D.apply(nu, mu, F, vars)
        if PF != rhs:
            return False
    return True


def lb_extract(sys: DiffSystem, X: Generator, op_order: int = 1, degree: int = 2,
               order: int | None = None) -> LBOperatorMatrix:
    """Find D_num = sum_J lambda^J D_J with |J| <= op_order in a polynomial ansatz."""
    vars = sys.vars
    if order is None:
        order = max(sys.order, X.order())
    basis = coefficient_basis(sys, degree, order)
    Js = multi_indices_upto(vars.n, op_order)
    slots = [(mu, J) for mu in range(sys.m) for J in Js]
    columns = [b * total_derivative_multi(sys.equations[mu], J, vars) for mu, J in slots for b in basis]
    nb = len(basis)
    entries = {}
    for nu, PF in enumerate(prolonged_equations(sys, X)):
        sol = solve_combination(columns, PF)
        if sol is None:
            raise NotASymmetry(f"no operator for equation {nu + 1} within the ansatz")
        for k, (mu, J) in enumerate(slots):
            coef = combine(sol[k * nb:(k + 1) * nb], basis)
            if not coef.is_zero():
                entries.setdefault((nu, mu), []).append((J, coef))
    return LBOperatorMatrix({k: tuple(v) for k, v in entries.items()})


def combined_lb_constraint(sys: DiffSystem, X: Generator, D: LBOperatorMatrix) -> list[Expr]:
    vars = sys.vars
    div = X.div_xi()
    S = _nonlocal_sum(vars)
    w = [vars.d(v) + S for v in vars.nonlocal_primary]
    out = []
    for b in range(sys.m):
        acc = w[b] * div
        for mu in range(sys.m):
            for J, coef in D.entries.get((mu, b), ()):
                term = total_derivative_multi(w[mu] * normalize(coef), J, vars)
                acc = acc + (term if MultiIndex(J).order % 2 == 0 else -term)
        out.append(-acc)
    return out


SplitPolicy = Callable[[DiffSystem, Generator, Sequence[Expr]], tuple]


def default_split(sys: DiffSystem, X: Generator, combined: Sequence[Expr]) -> tuple:
    """eta~*_a = -vt^a div(xi); eta*_b takes the rest of the combined constraint."""
    vars = sys.vars
    div = X.div_xi()
    eta_tilde_star = [-(vars.d(vt) * div) for vt in vars.nonlocal_extra]
    tsum = ZERO
    for e in eta_tilde_star:
        tsum = tsum + e
    eta_star = [c - tsum for c in combined]
    return eta_star, eta_tilde_star


def inherit_lb(sys: DiffSystem, X: Generator, D: LBOperatorMatrix,
               split: SplitPolicy = default_split) -> Generator:
    """Extend a Lie-Backlund operator to the nonlocal variables."""
    if not lb_verify(sys, X, D):
        raise ExprError("operator matrix does not satisfy Pr X(F) = D(F)")
    combined = combined_lb_constraint(sys, X, D)
    eta_star, eta_tilde_star = split(sys, X, combined)
    _check_sum(eta_star, eta_tilde_star, combined, "Lie-Backlund inheritance")
    return replace(X, extended=(tuple(normalize(e) for e in eta_star),
                                tuple(normalize(e) for e in eta_tilde_star)))


def lambda_as_operator(lam: LambdaMatrix, n: int) -> LBOperatorMatrix:
    """A multiplier matrix viewed as zeroth-order operators."""
    zero = MultiIndex.zero(n)
    return LBOperatorMatrix({
        (a, b): ((zero, c),)
        for a, row in enumerate(lam.entries)
        for b, c in enumerate(row)
        if not normalize(c).is_zero()
    })
