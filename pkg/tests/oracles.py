"""Reference computations that share no code with the engine's calculus.

``to_sympy`` turns an expression into a sympy expression in genuine
functions of the independent variables; the Euler operator then comes from
``sympy.calculus.euler.euler_equations``.  ``literal_conserved_vector``
transcribes the nested k/l sums of the conserved-vector formula directly
for two independent variables.
"""

import sympy
from sympy.calculus.euler import euler_equations

from conslaw.core import Func, Indep, Jet, Param, partial
from conslaw.jet import total_derivative


def _symbols(vars):
    xs = [sympy.Symbol(x) for x in vars.independent]
    fs = {d: sympy.Function(d)(*xs) for d in vars.dependents}
    return xs, fs


def to_sympy(e, vars):
    xs, fs = _symbols(vars)
    out = sympy.Integer(0)
    for mono, c in e.items():
        term = sympy.Rational(c.numerator, c.denominator)
        for a, p in mono:
            term *= _atom(a, vars, xs, fs) ** p
        out += term
    return out


def _atom(a, vars, xs, fs):
    if isinstance(a, Indep):
        return xs[vars.independent.index(a.name)]
    if isinstance(a, Param):
        return sympy.Symbol(a.name)
    if isinstance(a, Jet):
        f = fs[a.name]
        orders = [(x, k) for x, k in zip(xs, a.orders) if k]
        return sympy.diff(f, *orders) if orders else f
    if isinstance(a, Func):
        return getattr(sympy, a.name)(to_sympy(a.arg, vars))
    raise TypeError(a)


def euler_oracle(L, dep, vars):
    """Variational derivative of L with respect to ``dep``, as a sympy expression."""
    xs, fs = _symbols(vars)
    eqs = euler_equations(to_sympy(L, vars), [fs[dep]], xs)
    return eqs[0].lhs if eqs else sympy.Integer(0)


def same(a, b) -> bool:
    return sympy.expand(a - b) == 0


def _dpow(e, counts, vars):
    for i, k in enumerate(counts):
        for _ in range(k):
            e = total_derivative(e, i, vars)
    return e


def _top(L, dep):
    s = [0, 0]
    for a in L.jets():
        if a.name == dep:
            s = [max(s[0], a.orders[0]), max(s[1], a.orders[1])]
    return s


def literal_conserved_vector(L, W, B, vars, xi=(0, 0)):
    """C^i = -B^i + xi^i L + nested sums over k and l.

    ``W`` maps each dependent name to its characteristic.
    """
    assert vars.n == 2
    out = []
    for i in range(2):
        c = -B[i] + xi[i] * L
        for dep, w in W.items():
            s1, s2 = _top(L, dep)
            lim = [s1, s2]
            lim[i] -= 1
            for k1 in range(lim[0] + 1):
                for k2 in range(lim[1] + 1):
                    dw = _dpow(w, (k1, k2), vars)
                    inner = 0
                    for l1 in range(s1 - k1 + 1):
                        for l2 in range(s2 - k2 + 1):
                            idx = [k1 + l1, k2 + l2]
                            idx[i] += 1
                            t, x = vars.independent
                            jet = vars.jet_atom(dep, *([t] * idx[0] + [x] * idx[1]))
                            d = partial(L, jet)
                            term = _dpow(d, (l1, l2), vars) * (-1) ** (l1 + l2)
                            inner = term + inner
                    c = c + dw * inner
        out.append(c)
    return out
