import pytest
from hypothesis import given, settings

from conslaw import (
    DiffSystem,
    ExprError,
    Verdict,
    VarTable,
    check_quasi_self_adjoint,
    check_self_adjoint,
    euler,
    formal_lagrangian,
    parse_expression,
)
from conslaw.core import Expr, Param
from oracles import euler_oracle, same, to_sympy
from strategies import VARS, polys

from conftest import CORPUS_NAMES


def system(eqs, deps=("u",), extra=(), leads=None):
    V = VarTable.create(("t", "x"), deps, extra)
    leads = None if leads is None else [V.jet_atom(*l) for l in leads]
    return DiffSystem.from_leads(V, [parse_expression(e, V) for e in eqs], leads)


def rendered(prob):
    from conslaw import render

    return [render(e, prob.vars) for e in prob.system.adjoint.equations]


def test_heat_adjoint(heat):
    assert rendered(heat) == ["-1*D(v,t) - D(v,x,x)"]
    assert heat.system.m == 1 and heat.system.m_tilde == 0


def test_kdv_adjoint(corpus):
    prob = corpus["kdv"]
    V = prob.vars
    assert prob.system.adjoint.f_star[0] == -parse_expression("D(v,t) + u*D(v,x) + D(v,x,x,x)", V)


def test_u1_adjoint(corpus):
    prob = corpus["u1"]
    V = prob.vars
    adj = prob.system.adjoint
    assert adj.f_star == (-parse_expression("D(v,t) + D(vt,t)", V),)
    assert adj.f_tilde_star == (parse_expression("D(v,x) + D(vt,x)", V),)
    assert prob.system.m == 1 and prob.system.m_tilde == 1


@pytest.mark.parametrize("name", CORPUS_NAMES)
def test_lagrangian_recovers_system(corpus, name):
    sys_ = corpus[name].system
    V = sys_.vars
    L = sys_.adjoint.lagrangian
    for v, F in zip(V.nonlocal_primary, sys_.equations):
        assert (euler(L, v, V) - F).is_zero()
    total = sum(sys_.equations, Expr.coerce(0))
    for vt in V.nonlocal_extra:
        assert (euler(L, vt, V) - total).is_zero()


@pytest.mark.parametrize("name", CORPUS_NAMES)
def test_adjoint_matches_sympy_oracle(corpus, name):
    sys_ = corpus[name].system
    V = sys_.vars
    L = formal_lagrangian(sys_)
    for dep, mine in zip(V.primary + V.extra, sys_.adjoint.equations):
        assert same(euler_oracle(L, dep, V), to_sympy(mine, V))


@settings(max_examples=30, deadline=None, derandomize=True)
@given(polys(VARS, order=2, max_terms=3))
def test_random_adjoints_match_oracle(F):
    sys_ = DiffSystem(VARS, (F,))
    for dep, mine in zip(VARS.primary + VARS.extra, sys_.adjoint.equations):
        assert same(euler_oracle(sys_.adjoint.lagrangian, dep, VARS), to_sympy(mine, VARS))


def test_two_component_system():
    sys_ = system(["D(u,t) - D(q,x)", "D(q,t) - D(u,x)"], deps=("u", "q"), leads=[("u", "t"), ("q", "t")])
    V = sys_.vars
    assert V.nonlocal_primary == ("v1", "v2")
    assert sys_.adjoint.f_star == (
        parse_expression("-1*D(v1,t) + D(v2,x)", V),
        parse_expression("D(v1,x) - D(v2,t)", V),
    )
    r = check_self_adjoint(sys_)
    assert r.verdict is Verdict.SELF_ADJOINT
    minus = Expr.coerce(-1)
    assert r.gamma == ((minus, Expr.coerce(0)), (Expr.coerce(0), minus))


def test_joint_rules_u2(corpus):
    from conslaw import render

    prob = corpus["u2"]
    rules = [(render(Expr.atom(a), prob.vars), render(r, prob.vars)) for a, r in prob.system.joint_rules]
    assert rules[0] == ("D(u,t)", "w*D(u,x,x)")
    assert ("v", "-1*vt") in rules


def test_system_validation():
    V = VarTable.create(("t", "x"), ("u",))
    with pytest.raises(ExprError):
        DiffSystem(V, (parse_expression("u", V), parse_expression("D(u,x)", V)))
    with pytest.raises(ExprError):
        DiffSystem(V, (parse_expression("v*u", V),))
    with pytest.raises(ExprError):
        DiffSystem(V, (parse_expression("c*u", V, params=("c",)),))
    with pytest.raises(ExprError):
        system(["D(u,t) - u"], leads=[("u", "x")])


def test_reducer_needs_solved_form():
    with pytest.raises(ExprError):
        system(["D(u,t) - D(u,x,x)"]).reducer()


# -- classification -------------------------------------------------------


def test_kdv_self_adjoint(corpus):
    r = check_self_adjoint(corpus["kdv"].system)
    assert r.verdict is Verdict.SELF_ADJOINT
    assert r.gamma == ((Expr.coerce(-1),),)


def test_heat_not_self_adjoint_but_quasi(heat):
    r = check_self_adjoint(heat.system, 2, 2)
    assert r.verdict is Verdict.NOT_DETERMINED
    assert r.bounds == {"gamma_order": 2, "gamma_degree": 2}
    q = check_quasi_self_adjoint(heat.system, [heat.ansatz["const"]])
    assert q.verdict is Verdict.QUASI_SELF_ADJOINT
    assert q.h == (("v", Expr.coerce(1)),)
    assert q.gamma == ((Expr.coerce(0),),)


def test_heat_linear_ansatz_fails_then_constant_succeeds(heat):
    r = check_quasi_self_adjoint(heat.system, [heat.ansatz["linear"]])
    assert r.verdict is Verdict.NOT_DETERMINED
    r = check_quasi_self_adjoint(heat.system, [heat.ansatz["linear"], heat.ansatz["const"]])
    assert r.verdict is Verdict.QUASI_SELF_ADJOINT and r.detail == "candidate 2"


def test_kdv_quasi_with_linear_ansatz(corpus):
    prob = corpus["kdv"]
    r = check_quasi_self_adjoint(prob.system, [prob.ansatz["linear"]])
    assert r.verdict is Verdict.QUASI_SELF_ADJOINT
    assert r.h == (("v", prob.vars.d("u")),)
    assert r.gamma == ((Expr.coerce(-1),),)


@pytest.mark.parametrize("eqs, extra", [
    (["D(u,t) - x*D(u,x)"], ()),
    (["D(u,t) - D(w,x)"], ("w",)),
])
def test_refuted_with_certificate(eqs, extra):
    r = check_self_adjoint(system(eqs, extra=extra))
    assert r.verdict is Verdict.REFUTED
    assert "monomial" in r.detail


def test_burgers_self_adjointness_not_determined(corpus):
    assert check_self_adjoint(corpus["burgers"].system).verdict is not Verdict.SELF_ADJOINT


def test_wave_self_adjoint(corpus):
    r = check_self_adjoint(corpus["wave"].system)
    assert r.verdict is Verdict.SELF_ADJOINT
    assert r.gamma == ((Expr.coerce(1),),)


def test_quasi_ansatz_validation(heat):
    V = heat.vars
    c = Expr.atom(Param("c"))
    with pytest.raises(ExprError):
        check_quasi_self_adjoint(heat.system, [])
    with pytest.raises(ExprError):
        check_quasi_self_adjoint(heat.system, [{"v": c * V.d("u", "x")}])
    with pytest.raises(ExprError):
        check_quasi_self_adjoint(heat.system, [{"u": c}])
    with pytest.raises(ExprError):
        check_quasi_self_adjoint(heat.system, [{"v": c * c}])
    with pytest.raises(ExprError):
        check_self_adjoint(heat.system, -1)
