"""Sectioned key-value system files.

Example::

    [system]
    independent = t, x
    dependent = u
    extra = w
    equation = D(u,t) - D(w,x)
    solve = D(u,t)

    [generator.dt]
    kind = point
    t = 1

    [generator.lb]
    kind = lie_backlund
    u = D(u,x)
    op.1.1 = x => 1

    [ansatz.const]
    constants = c
    u = c

``equation`` and ``solve`` may repeat; equation k is solved for the k-th
``solve`` entry.  ``lambda.A.B`` gives multiplier entries and ``op.NU.MU``
operator terms ``J => coefficient`` separated by ``;``, where ``J`` lists
independent variables (``1`` for the identity).  Comments start with ``#``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .adjoint import DiffSystem
from .core import ZERO, ExprError, Jet, MultiIndex, Param, VarTable
from .onshell import solve_for
from .parser import ParseError, parse_expression
from .symmetry import Generator, Kind, LambdaMatrix, LBOperatorMatrix


@dataclass
class _Entry:
    key: str
    value: str
    line: int
    col: int


@dataclass
class _Section:
    name: str
    line: int
    entries: list = field(default_factory=list)

    def get(self, key):
        return [e for e in self.entries if e.key == key]

    def one(self, key, required=True):
        found = self.get(key)
        if len(found) > 1:
            raise ParseError(f"duplicate key {key!r}", found[1].line, 1)
        if not found:
            if required:
                raise ParseError(f"section [{self.name}] needs {key!r}", self.line, 1)
            return None
        return found[0]


@dataclass
class Problem:
    """Everything declared in a system file."""

    system: DiffSystem
    generators: dict
    lambdas: dict
    operators: dict
    ansatz: dict
    source: str = ""

    @property
    def vars(self) -> VarTable:
        return self.system.vars

    def candidate(self, name: str) -> dict:
        try:
            return self.ansatz[name]
        except KeyError:
            raise ExprError(f"no ansatz named {name!r}") from None


_SECTION = re.compile(r"^\[\s*([A-Za-z0-9_.\-]+)\s*\]$")
_KEY = re.compile(r"^([A-Za-z_][A-Za-z0-9_.]*)\s*=")


def _read_sections(text: str) -> list[_Section]:
    sections: list[_Section] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        stripped = line.strip()
        m = _SECTION.match(stripped)
        if m:
            name = m.group(1)
            if any(s.name == name for s in sections):
                raise ParseError(f"duplicate section [{name}]", lineno, 1)
            sections.append(_Section(name, lineno))
            continue
        indent = len(line) - len(line.lstrip())
        m = _KEY.match(stripped)
        if not m:
            raise ParseError("expected 'key = value' or '[section]'", lineno, indent + 1)
        if not sections:
            raise ParseError("key outside of any section", lineno, indent + 1)
        value = stripped[m.end():]
        lead = len(value) - len(value.lstrip())
        sections[-1].entries.append(
            _Entry(m.group(1), value.strip(), lineno, indent + m.end() + lead + 1)
        )
    return sections


def _names(entry: _Entry | None) -> tuple:
    if entry is None or not entry.value:
        return ()
    names = tuple(s.strip() for s in entry.value.split(","))
    for s in names:
        if not s.isidentifier():
            raise ParseError(f"invalid name {s!r}", entry.line, entry.col)
    return names


def _expr(entry: _Entry, vars: VarTable, params=(), text: str | None = None, col: int | None = None):
    return parse_expression(entry.value if text is None else text, vars, params,
                            line=entry.line, col=entry.col if col is None else col)


def parse_system(text: str) -> Problem:
    sections = _read_sections(text)
    by_name = {s.name: s for s in sections}
    if "system" not in by_name:
        raise ParseError("missing [system] section", 1, 1)
    sec = by_name["system"]
    known = {"independent", "dependent", "extra", "equation", "solve", "name"}
    for e in sec.entries:
        if e.key not in known:
            raise ParseError(f"unknown key {e.key!r} in [system]", e.line, 1)
    indep = _names(sec.one("independent"))
    deps = _names(sec.one("dependent"))
    extra = _names(sec.one("extra", required=False))
    try:
        vars = VarTable.create(indep, deps, extra)
    except ExprError as exc:
        raise ParseError(str(exc), sec.line, 1) from None
    eq_entries = sec.get("equation")
    if len(eq_entries) != len(deps):
        where = eq_entries[-1] if eq_entries else sec
        raise ParseError(
            f"{len(eq_entries)} equation(s) but {len(deps)} dependent variable(s)", where.line, 1
        )
    equations = [_expr(e, vars) for e in eq_entries]
    solve_entries = sec.get("solve")
    solved = None
    if solve_entries:
        if len(solve_entries) != len(equations):
            raise ParseError("give one 'solve' entry per equation", solve_entries[0].line, 1)
        solved = []
        for eq, e in zip(equations, solve_entries):
            lead = _expr(e, vars).as_atom()
            if not isinstance(lead, Jet) or lead.name not in vars.original:
                raise ParseError("'solve' must name a single derivative of a dependent variable", e.line, e.col)
            try:
                solved.append((lead, solve_for(eq, lead)))
            except ExprError as exc:
                raise ParseError(str(exc), e.line, e.col) from None
        solved = tuple(solved)
    name_entry = sec.one("name", required=False)
    try:
        system = DiffSystem(vars, tuple(equations), solved, name_entry.value if name_entry else "")
    except ExprError as exc:
        raise ParseError(str(exc), sec.line, 1) from None

    generators, lambdas, operators, ansatz = {}, {}, {}, {}
    for s in sections:
        if s.name == "system":
            continue
        kind, _, label = s.name.partition(".")
        if not label:
            raise ParseError(f"section [{s.name}] needs a name, e.g. [{kind}.NAME]", s.line, 1)
        if kind == "generator":
            generators[label], lambdas[label], operators[label] = _generator(s, label, vars)
        elif kind == "ansatz":
            ansatz[label] = _ansatz(s, vars)
        else:
            raise ParseError(f"unknown section kind {kind!r}", s.line, 2)
    return Problem(system, generators, lambdas, operators, ansatz, text)


def _index_pair(entry: _Entry, prefix: str, m: int) -> tuple[int, int]:
    parts = entry.key.split(".")
    if len(parts) != 3 or not parts[1].isdigit() or not parts[2].isdigit():
        raise ParseError(f"expected {prefix}.ROW.COL", entry.line, 1)
    a, b = int(parts[1]), int(parts[2])
    if not (1 <= a <= m and 1 <= b <= m):
        raise ParseError(f"{prefix} indices must lie in 1..{m}", entry.line, 1)
    return a - 1, b - 1


def _generator(sec: _Section, label: str, vars: VarTable):
    kind_entry = sec.one("kind", required=False)
    kind = kind_entry.value if kind_entry else "point"
    if kind not in ("point", "lie_backlund"):
        raise ParseError(f"unknown generator kind {kind!r}", kind_entry.line, kind_entry.col)
    coeffs = {}
    lam_entries = {}
    op_terms: dict = {}
    m = len(vars.primary)
    for e in sec.entries:
        if e.key == "kind":
            continue
        if e.key.startswith("lambda."):
            lam_entries[_index_pair(e, "lambda", m)] = _expr(e, vars)
        elif e.key.startswith("op."):
            op_terms[_index_pair(e, "op", m)] = _operator_terms(e, vars)
        elif e.key in vars.independent or e.key in vars.original:
            if e.key in coeffs:
                raise ParseError(f"duplicate coefficient {e.key!r}", e.line, 1)
            coeffs[e.key] = _expr(e, vars)
        else:
            raise ParseError(f"{e.key!r} is not a variable of the system", e.line, 1)
    try:
        X = Generator.from_map(vars, Kind(kind), coeffs, name=label)
    except ExprError as exc:
        raise ParseError(str(exc), sec.line, 1) from None
    lam = None
    if lam_entries:
        lam = LambdaMatrix(tuple(tuple(lam_entries.get((a, b), ZERO) for b in range(m)) for a in range(m)))
    ops = LBOperatorMatrix(op_terms) if op_terms else None
    return X, lam, ops


def _operator_terms(entry: _Entry, vars: VarTable) -> tuple:
    terms = []
    offset = 0
    for chunk in entry.value.split(";"):
        col = entry.col + offset
        offset += len(chunk) + 1
        if "=>" not in chunk:
            raise ParseError("operator terms look like 'x x => coefficient'", entry.line, col)
        lhs, rhs = chunk.split("=>", 1)
        counts = [0] * vars.n
        for tok in lhs.split():
            if tok == "1":
                continue
            if tok not in vars.independent:
                raise ParseError(f"{tok!r} is not an independent variable", entry.line, col)
            counts[vars.independent.index(tok)] += 1
        rhs_col = col + len(chunk) - len(chunk.split("=>", 1)[1]) + (len(rhs) - len(rhs.lstrip()))
        terms.append((MultiIndex(counts), _expr(entry, vars, text=rhs.strip(), col=rhs_col)))
    return tuple(terms)


def _ansatz(sec: _Section, vars: VarTable) -> dict:
    params = _names(sec.one("constants", required=False))
    clash = set(params) & (set(vars.independent) | set(vars.dependents))
    if clash:
        raise ParseError(f"constants clash with variable names: {sorted(clash)}", sec.line, 1)
    out = {}
    for e in sec.entries:
        if e.key == "constants":
            continue
        if e.key in vars.original:
            target = vars.partner(e.key)
        elif e.key in vars.nonlocal_:
            target = e.key
        else:
            raise ParseError(f"{e.key!r} is not a dependent variable", e.line, 1)
        out[target] = _expr(e, vars, params)
    if not out:
        raise ParseError("ansatz section assigns no variable", sec.line, 1)
    for h in out.values():
        for a in h.all_atoms():
            if isinstance(a, Param) and a.name not in params:
                raise ParseError(f"undeclared constant {a.name!r}", sec.line, 1)
    return out
