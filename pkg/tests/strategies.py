"""Random differential polynomials for property tests."""

from fractions import Fraction

from hypothesis import strategies as st

from conslaw import ONE, Expr, Indep, VarTable, const
from conslaw.core import Add, Call, Mul, Num, Pow, Sym, func, multi_indices_upto

VARS = VarTable.create(("t", "x"), ("u",), ("w",))
VARS_U = VarTable.create(("t", "x"), ("u",))


def jet_pool(vars=VARS, deps=None, order=2):
    deps = deps or vars.original
    return [vars.jet_atom(d, *[x for x, k in zip(vars.independent, J) for _ in range(k)])
            for d in deps for J in multi_indices_upto(vars.n, order)]


def atom_pool(vars=VARS, deps=None, order=2):
    return [Expr.atom(a) for a in jet_pool(vars, deps, order)] + [Expr.atom(Indep(x)) for x in vars.independent]


coeffs = st.fractions(min_value=-5, max_value=5, max_denominator=3).filter(lambda c: c != 0)


@st.composite
def monomials(draw, pool, max_factors=3):
    k = draw(st.integers(0, max_factors))
    out = const(draw(coeffs))
    for _ in range(k):
        out = out * draw(st.sampled_from(pool))
    return out


@st.composite
def polys(draw, vars=VARS, deps=None, order=2, max_terms=4, max_factors=3):
    pool = atom_pool(vars, deps, order)
    out = const(0)
    for _ in range(draw(st.integers(1, max_terms))):
        out = out + draw(monomials(pool, max_factors))
    return out


@st.composite
def smooth(draw, vars=VARS, deps=None, order=2):
    """Polynomial, possibly times one of exp/sin/cos of a jet-free linear form."""
    p = draw(polys(vars, deps, order, max_terms=3, max_factors=2))
    if draw(st.booleans()):
        arg = const(draw(coeffs)) * Expr.atom(Indep(draw(st.sampled_from(vars.independent))))
        p = p * func(draw(st.sampled_from(("exp", "sin", "cos"))), arg) + ONE
    return p


@st.composite
def trees(draw, vars=VARS, depth=3):
    """Unnormalized expression trees built from parser node types."""
    pool = jet_pool(vars, order=1) + [Indep(x) for x in vars.independent]
    if depth == 0 or draw(st.integers(0, 3)) == 0:
        if draw(st.booleans()):
            return Num(Fraction(draw(st.integers(-4, 4)), draw(st.integers(1, 3))))
        return Sym(draw(st.sampled_from(pool)))
    kind = draw(st.sampled_from(("add", "mul", "pow", "call")))
    if kind == "add":
        return Add(tuple(draw(trees(vars, depth - 1)) for _ in range(draw(st.integers(2, 3)))))
    if kind == "mul":
        return Mul(tuple(draw(trees(vars, depth - 1)) for _ in range(2)))
    if kind == "pow":
        return Pow(draw(trees(vars, depth - 1)), draw(st.integers(0, 3)))
    return Call(draw(st.sampled_from(("exp", "sin", "cos"))), draw(trees(vars, depth - 1)))
