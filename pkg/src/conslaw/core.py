"""Exact expressions over jet variables.

Every :class:`Expr` is held in a canonical expanded form: a mapping from
monomials to :class:`~fractions.Fraction` coefficients.  A monomial is a
sorted tuple of ``(atom, exponent)`` pairs.  Two expressions are equal as
differential polynomials (with elementary-function atoms compared on their
normalized arguments) exactly when their term mappings are equal.

Unnormalized trees (:class:`Num`, :class:`Sym`, :class:`Add`, ...) are what
the parser produces; :func:`normalize` turns them into an :class:`Expr`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations_with_replacement
from typing import Iterable, Iterator, Mapping, Union

__all__ = [
    "ExprError",
    "ZeroDivisionExprError",
    "UnboundAtomError",
    "MultiIndex",
    "multi_indices",
    "VarTable",
    "Indep",
    "Jet",
    "Param",
    "Func",
    "Expr",
    "ZERO",
    "ONE",
    "const",
    "func",
    "Node",
    "Num",
    "Sym",
    "Add",
    "Mul",
    "Pow",
    "Div",
    "Call",
    "normalize",
    "substitute_atom",
    "eval_numeric",
    "partial",
    "OrderProfile",
    "order_profile",
]

FUNCTIONS = ("exp", "log", "sin", "cos")
RESERVED = frozenset(FUNCTIONS) | {"D"}


class ExprError(ValueError):
    pass


class ZeroDivisionExprError(ExprError, ZeroDivisionError):
    pass


class UnboundAtomError(ExprError, KeyError):
    def __str__(self) -> str:
        return self.args[0] if self.args else "unbound atom"


# ---------------------------------------------------------------------------
# multi-indices


class MultiIndex(tuple):
    """Derivative counts, one entry per independent variable.

    ``+`` and ``-`` act componentwise (not as tuple concatenation).
    """

    __slots__ = ()

    def __new__(cls, orders: Iterable[int] = ()):
        orders = tuple(int(k) for k in orders)
        if any(k < 0 for k in orders):
            raise ExprError(f"negative derivative count in {orders}")
        return super().__new__(cls, orders)

    @classmethod
    def zero(cls, n: int) -> "MultiIndex":
        return cls((0,) * n)

    @classmethod
    def unit(cls, n: int, i: int) -> "MultiIndex":
        return cls(1 if k == i else 0 for k in range(n))

    @property
    def order(self) -> int:
        return sum(self)

    def __add__(self, other):
        if len(other) != len(self):
            raise ExprError("multi-index length mismatch")
        return MultiIndex(a + b for a, b in zip(self, other))

    def __sub__(self, other):
        if len(other) != len(self):
            raise ExprError("multi-index length mismatch")
        return MultiIndex(a - b for a, b in zip(self, other))

    def divides(self, other) -> bool:
        """True when ``self <= other`` componentwise."""
        return all(a <= b for a, b in zip(self, other))

    def __repr__(self) -> str:
        return f"MultiIndex({tuple(self)})"


def multi_indices(n: int, order: int) -> list[MultiIndex]:
    """All multi-indices of exactly ``order`` in ``n`` variables.

    There are ``binomial(n + order - 1, order)`` of them.
    """
    if n == 0:
        return [MultiIndex()] if order == 0 else []
    out = []
    for combo in combinations_with_replacement(range(n), order):
        counts = [0] * n
        for i in combo:
            counts[i] += 1
        out.append(MultiIndex(counts))
    return out


def multi_indices_upto(n: int, order: int) -> list[MultiIndex]:
    return [J for k in range(order + 1) for J in multi_indices(n, k)]


# ---------------------------------------------------------------------------
# atoms


@dataclass(frozen=True)
class Indep:
    name: str
    sort_key: tuple = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "sort_key", (1, self.name))


@dataclass(frozen=True)
class Jet:
    """The derivative of dependent variable ``name`` given by ``orders``."""

    name: str
    orders: MultiIndex
    sort_key: tuple = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if not isinstance(self.orders, MultiIndex):
            object.__setattr__(self, "orders", MultiIndex(self.orders))
        key = (2, self.orders.order, self.name, tuple(-k for k in self.orders))
        object.__setattr__(self, "sort_key", key)

    @property
    def order(self) -> int:
        return self.orders.order

    def shifted(self, J) -> "Jet":
        return Jet(self.name, self.orders + J)


@dataclass(frozen=True)
class Param:
    """An undetermined constant (used by ansatz searches)."""

    name: str
    sort_key: tuple = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "sort_key", (0, self.name))


@dataclass(frozen=True)
class Func:
    name: str
    arg: "Expr"
    sort_key: tuple = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if self.name not in FUNCTIONS:
            raise ExprError(f"unknown function {self.name!r}")
        object.__setattr__(self, "sort_key", (3, self.name, self.arg.sort_key))


Atom = Union[Indep, Jet, Param, Func]
Monomial = tuple  # tuple[tuple[Atom, int], ...] sorted by atom sort_key


def _mono_key(mono: Monomial) -> tuple:
    # nonconstant monomials first; then lexicographic in the expanded atom list
    flat = []
    for atom, p in mono:
        flat.extend([atom.sort_key] * p if p > 0 else [(9, atom.sort_key, p)])
    return (0 if mono else 1, tuple(flat))


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    powers = dict(a)
    for atom, p in b:
        q = powers.get(atom, 0) + p
        if q:
            powers[atom] = q
        else:
            del powers[atom]
    return tuple(sorted(powers.items(), key=lambda ap: ap[0].sort_key))


def _mono_pow(a: Monomial, k: int) -> Monomial:
    return tuple((atom, p * k) for atom, p in a)


def _mono_degree(mono: Monomial) -> int:
    return sum(p for _, p in mono)


# ---------------------------------------------------------------------------
# normal form


Scalar = Union[int, Fraction]


class Expr:
    """Canonical sum of monomials with exact rational coefficients.

    Instances are immutable and hashable.  Arithmetic operators return new
    normalized instances.  Division is supported by nonzero constants and by
    single monomials (giving negative exponents); dividing by a multi-term
    expression raises :class:`ExprError`.
    """

    __slots__ = ("_terms", "_hash", "_key")

    def __init__(self, terms: Mapping[Monomial, Fraction] | None = None):
        clean = {}
        if terms:
            for mono, c in terms.items():
                if c:
                    clean[mono] = Fraction(c)
        self._terms = clean
        self._hash = None
        self._key = None

    @classmethod
    def _raw(cls, terms: dict) -> "Expr":
        e = cls.__new__(cls)
        e._terms = terms
        e._hash = None
        e._key = None
        return e

    @classmethod
    def atom(cls, a: Atom) -> "Expr":
        return cls._raw({((a, 1),): Fraction(1)})

    @classmethod
    def coerce(cls, x) -> "Expr":
        if isinstance(x, Expr):
            return x
        if isinstance(x, (int, Fraction)):
            return cls._raw({(): Fraction(x)} if x else {})
        if isinstance(x, (Indep, Jet, Param, Func)):
            return cls.atom(x)
        raise TypeError(f"cannot convert {type(x).__name__} to Expr")

    # -- inspection ---------------------------------------------------------

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def items(self) -> list[tuple[Monomial, Fraction]]:
        """Terms in canonical order."""
        return sorted(self._terms.items(), key=lambda mc: _mono_key(mc[0]))

    def __iter__(self) -> Iterator["Expr"]:
        for mono, c in self.items():
            yield Expr._raw({mono: c})

    def __len__(self) -> int:
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def is_constant(self) -> bool:
        return all(mono == () for mono in self._terms)

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ExprError("expression is not constant")
        return self._terms.get((), Fraction(0))

    def as_atom(self) -> Atom | None:
        if len(self._terms) == 1:
            (mono, c), = self._terms.items()
            if c == 1 and len(mono) == 1 and mono[0][1] == 1:
                return mono[0][0]
        return None

    @property
    def sort_key(self) -> tuple:
        if self._key is None:
            self._key = tuple((_mono_key(m), c) for m, c in self.items())
        return self._key

    def atoms(self) -> set:
        """Top-level atoms (function applications count as one atom)."""
        return {a for mono in self._terms for a, _ in mono}

    def all_atoms(self) -> set:
        """Atoms including those nested inside function arguments."""
        out = set()
        for mono in self._terms:
            for a, _ in mono:
                out.add(a)
                if isinstance(a, Func):
                    out |= a.arg.all_atoms()
        return out

    def jets(self) -> set:
        return {a for a in self.all_atoms() if isinstance(a, Jet)}

    def degree(self) -> int:
        return max((_mono_degree(m) for m in self._terms), default=0)

    def coefficient(self, mono: Monomial) -> Fraction:
        return self._terms.get(mono, Fraction(0))

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other):
        try:
            other = Expr.coerce(other)
        except TypeError:
            return NotImplemented
        if not other._terms:
            return self
        if not self._terms:
            return other
        out = dict(self._terms)
        for mono, c in other._terms.items():
            s = out.get(mono, 0) + c
            if s:
                out[mono] = s
            else:
                out.pop(mono, None)
        return Expr._raw(out)

    __radd__ = __add__

    def __neg__(self):
        return Expr._raw({m: -c for m, c in self._terms.items()})

    def __pos__(self):
        return self

    def __sub__(self, other):
        try:
            other = Expr.coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return Expr.coerce(other) - self

    def __mul__(self, other):
        try:
            other = Expr.coerce(other)
        except TypeError:
            return NotImplemented
        if not self._terms or not other._terms:
            return ZERO
        out: dict = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m = _mono_mul(m1, m2)
                s = out.get(m, 0) + c1 * c2
                if s:
                    out[m] = s
                else:
                    out.pop(m, None)
        return Expr._raw(out)

    __rmul__ = __mul__

    def __pow__(self, k):
        if isinstance(k, Fraction) and k.denominator == 1:
            k = int(k)
        if not isinstance(k, int):
            raise ExprError("only integer powers are supported")
        if k < 0:
            return ONE / (self ** (-k))
        result = ONE
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __truediv__(self, other):
        try:
            other = Expr.coerce(other)
        except TypeError:
            return NotImplemented
        if not other._terms:
            raise ZeroDivisionExprError("division by zero expression")
        if len(other._terms) > 1:
            raise ExprError("division by a multi-term expression is not supported")
        (mono, c), = other._terms.items()
        inv = Expr._raw({_mono_pow(mono, -1): 1 / c})
        return self * inv

    def __rtruediv__(self, other):
        return Expr.coerce(other) / self

    # -- comparison ---------------------------------------------------------

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Expr.coerce(other)
        if not isinstance(other, Expr):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __repr__(self) -> str:
        from .render import render

        return f"Expr({render(self)!r})"

    # -- calculus helpers ---------------------------------------------------

    def diff(self, a: Atom) -> "Expr":
        return partial(self, a)

    def subs(self, bindings: Mapping) -> "Expr":
        return substitute_atom(self, bindings)


ZERO = Expr._raw({})
ONE = Expr._raw({(): Fraction(1)})


def const(c) -> Expr:
    return Expr.coerce(Fraction(c))


def func(name: str, arg) -> Expr:
    """Apply an elementary function, folding only exact identities at 0."""
    arg = Expr.coerce(arg)
    if arg.is_zero():
        if name in ("exp", "cos"):
            return ONE
        if name == "sin":
            return ZERO
        if name == "log":
            raise ExprError("domain error: log(0)")
    if name == "log" and arg == ONE:
        return ZERO
    return Expr.atom(Func(name, arg))


# ---------------------------------------------------------------------------
# unnormalized trees


class Node:
    """Base of unnormalized expression trees."""

    __slots__ = ()


@dataclass(frozen=True)
class Num(Node):
    value: Fraction


@dataclass(frozen=True)
class Sym(Node):
    atom: object


@dataclass(frozen=True)
class Add(Node):
    args: tuple


@dataclass(frozen=True)
class Mul(Node):
    args: tuple


@dataclass(frozen=True)
class Pow(Node):
    base: Node
    exp: int


@dataclass(frozen=True)
class Div(Node):
    num: Node
    den: Node


@dataclass(frozen=True)
class Call(Node):
    name: str
    arg: Node


def normalize(e) -> Expr:
    """Canonical form of a tree (or of an already-normal expression)."""
    if isinstance(e, Expr):
        return e
    if isinstance(e, (int, Fraction)):
        return const(e)
    if isinstance(e, Num):
        return const(e.value)
    if isinstance(e, Sym):
        return Expr.atom(e.atom)
    if isinstance(e, Add):
        out = ZERO
        for a in e.args:
            out = out + normalize(a)
        return out
    if isinstance(e, Mul):
        out = ONE
        for a in e.args:
            out = out * normalize(a)
        return out
    if isinstance(e, Pow):
        return normalize(e.base) ** e.exp
    if isinstance(e, Div):
        return normalize(e.num) / normalize(e.den)
    if isinstance(e, Call):
        return func(e.name, normalize(e.arg))
    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------------------------------
# substitution, evaluation, partial derivatives


def substitute_atom(e, bindings: Mapping, vars: "VarTable | None" = None) -> Expr:
    """Simultaneously replace atoms (also inside function arguments).

    When ``vars`` is given, every atom introduced by the bindings must
    belong to it.
    """
    e = normalize(e)
    bound = {k if not isinstance(k, Expr) else k.as_atom(): Expr.coerce(v)
             for k, v in bindings.items()}
    if None in bound:
        raise ExprError("substitution keys must be atoms")
    if vars is not None:
        for v in bound.values():
            for a in v.all_atoms():
                if not vars.knows(a):
                    raise ExprError(f"substitution introduces unknown variable {a}")
    return _subs(e, bound)


def _subs(e: Expr, bound: dict) -> Expr:
    if not bound:
        return e
    out = ZERO
    for mono, c in e._terms.items():
        term = Expr._raw({(): c})
        rest = []
        changed = False
        for atom, p in mono:
            if atom in bound:
                term = term * bound[atom] ** p
                changed = True
            elif isinstance(atom, Func):
                new = func(atom.name, _subs(atom.arg, bound))
                term = term * new ** p
                changed = True
            else:
                rest.append((atom, p))
        if not changed:
            out = out + Expr._raw({mono: c})
        else:
            out = out + term * Expr._raw({tuple(rest): Fraction(1)})
    return out


_FLOAT_FUNCS = {"exp": math.exp, "log": math.log, "sin": math.sin, "cos": math.cos}


def _call_float(name: str, x: float) -> float:
    if name == "log" and x <= 0:
        raise ExprError(f"domain error: log of non-positive value {x!r}")
    try:
        return _FLOAT_FUNCS[name](x)
    except OverflowError as exc:
        raise ExprError(f"domain error: {name}({x!r}) overflows") from exc


def eval_numeric(e, point: Mapping) -> float:
    """Evaluate a tree or normal form at a point mapping atoms to floats."""
    if isinstance(e, Expr):
        total = 0.0
        for mono, c in e._terms.items():
            t = float(c)
            for atom, p in mono:
                t *= _atom_value(atom, point) ** p
            total += t
        return total
    if isinstance(e, Num):
        return float(e.value)
    if isinstance(e, Sym):
        return _atom_value(e.atom, point)
    if isinstance(e, Add):
        return sum(eval_numeric(a, point) for a in e.args)
    if isinstance(e, Mul):
        return math.prod(eval_numeric(a, point) for a in e.args)
    if isinstance(e, Pow):
        return eval_numeric(e.base, point) ** e.exp
    if isinstance(e, Div):
        den = eval_numeric(e.den, point)
        if den == 0:
            raise ZeroDivisionExprError("division by zero during evaluation")
        return eval_numeric(e.num, point) / den
    if isinstance(e, Call):
        return _call_float(e.name, eval_numeric(e.arg, point))
    if isinstance(e, (int, Fraction)):
        return float(e)
    raise TypeError(f"not an expression: {e!r}")


def _atom_value(atom, point: Mapping) -> float:
    if isinstance(atom, Func):
        return _call_float(atom.name, eval_numeric(atom.arg, point))
    try:
        return float(point[atom])
    except KeyError:
        raise UnboundAtomError(f"unbound atom {atom}") from None


def partial(e, a) -> Expr:
    """Partial derivative treating every jet coordinate as independent."""
    e = normalize(e)
    if isinstance(a, Expr):
        a = a.as_atom()
    if a is None or isinstance(a, Func):
        raise ExprError("partial derivative must be taken with respect to a variable atom")
    out: dict = {}

    def acc(mono, c):
        s = out.get(mono, 0) + c
        if s:
            out[mono] = s
        else:
            out.pop(mono, None)

    for mono, c in e._terms.items():
        for idx, (atom, p) in enumerate(mono):
            if atom == a:
                if p == 1:
                    rest = mono[:idx] + mono[idx + 1:]
                else:
                    rest = mono[:idx] + ((atom, p - 1),) + mono[idx + 1:]
                acc(rest, c * p)
            elif isinstance(atom, Func) and a in atom.arg.all_atoms():
                inner = partial(atom.arg, a)
                if inner.is_zero():
                    continue
                rest = mono[:idx] + (((atom, p - 1),) if p != 1 else ()) + mono[idx + 1:]
                outer = _func_derivative(atom) * inner * Expr._raw({rest: c * p})
                for m2, c2 in outer._terms.items():
                    acc(m2, c2)
    return Expr._raw(out)


def _func_derivative(f: Func) -> Expr:
    if f.name == "exp":
        return Expr.atom(f)
    if f.name == "sin":
        return func("cos", f.arg)
    if f.name == "cos":
        return -func("sin", f.arg)
    if f.name == "log":
        return ONE / f.arg
    raise ExprError(f"unknown function {f.name!r}")


# ---------------------------------------------------------------------------
# variable tables


@dataclass(frozen=True)
class VarTable:
    """Names of independent, dependent and nonlocal (adjoint) variables.

    Nonlocal names are generated here, one per primary dependent variable
    (``v``, or ``v1 .. vm``) and one per extra dependent variable (``vt``
    or ``vt1 ..``), with a trailing underscore appended on clashes.
    """

    independent: tuple
    primary: tuple
    extra: tuple = ()
    nonlocal_primary: tuple = ()
    nonlocal_extra: tuple = ()

    @classmethod
    def create(cls, independent, primary, extra=()) -> "VarTable":
        independent, primary, extra = tuple(independent), tuple(primary), tuple(extra)
        taken = set(independent) | set(primary) | set(extra)

        def fresh(base):
            name = base
            while name in taken:
                name += "_"
            taken.add(name)
            return name

        if len(primary) == 1:
            nl = (fresh("v"),)
        else:
            nl = tuple(fresh(f"v{k + 1}") for k in range(len(primary)))
        if len(extra) == 1:
            nlt = (fresh("vt"),)
        else:
            nlt = tuple(fresh(f"vt{k + 1}") for k in range(len(extra)))
        table = cls(independent, primary, extra, nl, nlt)
        table.validate()
        return table

    def validate(self) -> None:
        names = self.independent + self.dependents
        if len(set(names)) != len(names):
            raise ExprError(f"variable names must be distinct: {names}")
        for name in names:
            if not name.isidentifier() or name in RESERVED:
                raise ExprError(f"invalid variable name {name!r}")
        if not self.independent:
            raise ExprError("at least one independent variable is required")
        if not self.primary:
            raise ExprError("at least one dependent variable is required")

    @property
    def n(self) -> int:
        return len(self.independent)

    @property
    def original(self) -> tuple:
        return self.primary + self.extra

    @property
    def nonlocal_(self) -> tuple:
        return self.nonlocal_primary + self.nonlocal_extra

    @property
    def dependents(self) -> tuple:
        return self.primary + self.extra + self.nonlocal_primary + self.nonlocal_extra

    def partner(self, name: str) -> str:
        """The nonlocal variable paired with an original dependent (and back)."""
        pairs = dict(zip(self.original, self.nonlocal_))
        pairs.update({v: k for k, v in pairs.items()})
        return pairs[name]

    def index(self, x) -> int:
        if isinstance(x, int):
            if not 0 <= x < self.n:
                raise ExprError(f"independent-variable index {x} out of range")
            return x
        if isinstance(x, Indep):
            x = x.name
        try:
            return self.independent.index(x)
        except ValueError:
            raise ExprError(f"unknown independent variable {x!r}") from None

    def knows(self, a) -> bool:
        if isinstance(a, Indep):
            return a.name in self.independent
        if isinstance(a, Jet):
            return a.name in self.dependents and len(a.orders) == self.n
        if isinstance(a, Func):
            return all(self.knows(b) for b in a.arg.all_atoms())
        return isinstance(a, Param)

    # -- constructors -------------------------------------------------------

    def x(self, name) -> Expr:
        return Expr.atom(Indep(self.independent[self.index(name)]))

    def jet_atom(self, dep: str, *wrt) -> Jet:
        if dep not in self.dependents:
            raise ExprError(f"unknown dependent variable {dep!r}")
        counts = [0] * self.n
        for w in wrt:
            counts[self.index(w)] += 1
        return Jet(dep, MultiIndex(counts))

    def d(self, dep: str, *wrt) -> Expr:
        """``d('u', 't', 'x')`` is the jet u_tx as an expression."""
        return Expr.atom(self.jet_atom(dep, *wrt))

    def zero_index(self) -> MultiIndex:
        return MultiIndex.zero(self.n)

    def unit(self, i) -> MultiIndex:
        return MultiIndex.unit(self.n, self.index(i))


# ---------------------------------------------------------------------------
# order profiles


@dataclass(frozen=True)
class OrderProfile:
    """Largest derivative count per (dependent variable, independent index)."""

    per_variable: Mapping[str, tuple]
    order: int

    def bound(self, dep: str, i: int) -> int:
        counts = self.per_variable.get(dep)
        return counts[i] if counts else 0


def order_profile(e, n: int) -> OrderProfile:
    e = normalize(e)
    per: dict = {}
    top = 0
    for a in e.jets():
        cur = per.get(a.name, (0,) * n)
        per[a.name] = tuple(max(c, k) for c, k in zip(cur, a.orders))
        top = max(top, a.order)
    return OrderProfile(per, top)
