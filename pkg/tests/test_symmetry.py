import pytest

from conslaw import (
    ExprError,
    Generator,
    Kind,
    LambdaMatrix,
    NotASymmetry,
    inherit_lb,
    inherit_point,
    lambda_extract,
    lambda_verify,
    lb_extract,
    lb_verify,
    parse_expression,
    reduce_on_shell,
)
from conslaw.core import ZERO, MultiIndex, const
from conslaw.noether import invariance_residual
from conslaw.pipeline import inherit
from conslaw.symmetry import (
    LBOperatorMatrix,
    combined_lb_constraint,
    combined_point_constraint,
    lambda_as_operator,
)

from conftest import CORPUS_NAMES, load

HEAT_LAMBDAS = {"dx": 0, "dt": 0, "u": 1, "scale": -2, "galilean": "-1*x"}
HEAT_ETA_STAR = {"dx": "0", "dt": "0", "u": "-1*v", "scale": "-1*v"}


def lam_of(prob, name):
    return lambda_extract(prob.system, prob.generators[name]).entries[0][0]


@pytest.mark.parametrize("name, expected", HEAT_LAMBDAS.items())
def test_heat_lambda(heat, name, expected):
    assert lam_of(heat, name) == parse_expression(str(expected), heat.vars)


@pytest.mark.parametrize("name, expected", HEAT_ETA_STAR.items())
def test_heat_inherited_eta(heat, name, expected):
    X = heat.generators[name]
    lam = lambda_extract(heat.system, X)
    Y = inherit_point(heat.system, X, lam)
    assert Y.eta_star == (parse_expression(expected, heat.vars),)
    assert Y.eta_tilde_star == ()
    assert Y.eta_star[0] == combined_point_constraint(heat.system, X, lam)[0]


def test_lambda_from_file_matches_extraction(heat):
    X = heat.generators["scale"]
    assert heat.lambdas["scale"] == lambda_extract(heat.system, X)
    assert lambda_verify(heat.system, X, heat.lambdas["scale"])
    assert not lambda_verify(heat.system, X, LambdaMatrix(((const(5),),)))
    with pytest.raises(ExprError):
        inherit_point(heat.system, X, LambdaMatrix(((const(5),),)))
    with pytest.raises(ExprError):
        lambda_verify(heat.system, X, LambdaMatrix(()))


def test_other_lambdas(corpus):
    assert lam_of(corpus["burgers"], "scale") == const(-3)
    assert lam_of(corpus["kdv"], "scale") == const(-5)
    assert lam_of(corpus["wave"], "scale") == const(-2)
    assert lam_of(corpus["u1"], "scale") == const(1)


def test_underdetermined_inheritance(corpus):
    prob = corpus["u1"]
    V = prob.vars
    X = prob.generators["scale"]
    Y = inherit_point(prob.system, X, lambda_extract(prob.system, X))
    assert Y.eta_star == (parse_expression("-1*v - vt", V),)
    assert Y.eta_tilde_star == (ZERO,)
    Y = inherit(prob.system, prob.generators["dt"])
    assert Y.eta_star == (ZERO,) and Y.eta_tilde_star == (ZERO,)


def test_non_symmetry_is_certified(heat):
    V = heat.vars
    X = Generator.from_map(V, "point", {"u": V.d("u") ** 2})
    with pytest.raises(NotASymmetry) as info:
        lambda_extract(heat.system, X)
    assert info.value.certified


def test_generator_validation(heat):
    V = heat.vars
    with pytest.raises(ExprError):
        Generator.from_map(V, "point", {"u": V.d("u", "x")})
    with pytest.raises(ExprError):
        Generator.from_map(V, "point", {"q": V.d("u")})
    with pytest.raises(ExprError):
        Generator.from_map(V, "lie_backlund", {"u": V.d("v")})
    with pytest.raises(ExprError):
        Generator(V, Kind.POINT, (ZERO,), (ZERO,))
    with pytest.raises(ExprError):
        lambda_extract(heat.system, heat.generators["ux"])
    with pytest.raises(ExprError):
        inherit_point(heat.system, heat.generators["ux"], LambdaMatrix(((ZERO,),)))


def test_lie_backlund_heat(heat):
    X = heat.generators["ux"]
    D = heat.operators["ux"]
    assert D.entries == {(0, 0): ((MultiIndex((0, 1)), const(1)),)}
    assert lb_verify(heat.system, X, D)
    assert lb_extract(heat.system, X) == D
    Y = inherit_lb(heat.system, X, D)
    assert Y.eta_star == (heat.vars.d("v", "x"),)
    assert Y.eta_star[0] == combined_lb_constraint(heat.system, X, D)[0]
    wrong = LBOperatorMatrix({(0, 0): ((MultiIndex((1, 0)), const(1)),)})
    assert not lb_verify(heat.system, X, wrong)
    with pytest.raises(ExprError):
        inherit_lb(heat.system, X, wrong)


def test_lambda_as_operator_agrees(heat):
    for name in ("u", "scale", "galilean"):
        X = heat.generators[name]
        lam = lambda_extract(heat.system, X)
        D = lambda_as_operator(lam, 2)
        assert lb_verify(heat.system, X, D)
        assert inherit_lb(heat.system, X, D).extended == inherit_point(heat.system, X, lam).extended


def test_custom_split_policy(corpus):
    prob = corpus["u1"]
    X = prob.generators["scale"]
    D = lambda_as_operator(lambda_extract(prob.system, X), 2)
    V = prob.vars

    def all_on_tilde(sys_, X_, combined):
        return [ZERO], [combined[0]]

    Y = inherit_lb(prob.system, X, D, split=all_on_tilde)
    assert Y.eta_star == (ZERO,)
    assert Y.eta_tilde_star == (parse_expression("-1*v - vt", V),)

    def broken(sys_, X_, combined):
        return [ZERO], [ZERO]

    with pytest.raises(ExprError):
        inherit_lb(prob.system, X, D, split=broken)


@pytest.mark.parametrize("name", CORPUS_NAMES)
def test_inherited_generators_leave_lagrangian_invariant_on_shell(name):
    prob = load(name)
    L = prob.system.adjoint.lagrangian
    for gname, X in prob.generators.items():
        Y = inherit(prob.system, X, prob.lambdas.get(gname), prob.operators.get(gname))
        R = invariance_residual(L, Y, prob.vars)
        if X.kind is Kind.POINT:
            assert R.is_zero(), gname
        assert reduce_on_shell(R, prob.system).is_zero(), gname
