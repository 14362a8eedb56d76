"""JSON export and import of engine results.

Expressions are stored as rendered text together with the variable table
needed to parse them back, so ``import_json(export_json(x, vars)) == x``.
Keys are sorted and floats use ``repr``, which makes the output byte-stable.
"""

from __future__ import annotations

import hashlib
import json

from .adjoint import AdjointSystem, SelfAdjointReport, Verdict
from .core import ExprError, VarTable
from .noether import ConservedVector, Status
from .parser import parse_expression
from .render import render

FORMAT_VERSION = 1


def _vars_json(vars: VarTable) -> dict:
    return {"independent": list(vars.independent), "dependent": list(vars.primary),
            "extra": list(vars.extra)}


def _vars_from(data) -> VarTable:
    try:
        return VarTable.create(tuple(data["independent"]), tuple(data["dependent"]), tuple(data["extra"]))
    except (KeyError, TypeError) as exc:
        raise ExprError(f"malformed variable table: {exc}") from None


def _dump(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def digest(text: str) -> str:
    return "sha256:" + hashlib.sha256(text.encode("utf-8")).hexdigest()


def _body(result, vars: VarTable) -> dict:
    r = lambda e: render(e, vars)  # noqa: E731
    if isinstance(result, AdjointSystem):
        return {
            "kind": "adjoint_system",
            "lagrangian": r(result.lagrangian),
            "f_star": [r(e) for e in result.f_star],
            "f_tilde_star": [r(e) for e in result.f_tilde_star],
            "status": "ok",
        }
    if isinstance(result, SelfAdjointReport):
        rows = lambda g: None if g is None else [[r(e) for e in row] for row in g]  # noqa: E731
        pairs = lambda h: None if h is None else [[k, r(e)] for k, e in h]  # noqa: E731
        return {
            "kind": "self_adjoint_report",
            "status": result.verdict.value,
            "gamma": rows(result.gamma),
            "gamma_tilde": rows(result.gamma_tilde),
            "h": pairs(result.h),
            "h_tilde": pairs(result.h_tilde),
            "detail": result.detail,
            "bounds": dict(result.bounds),
        }
    if isinstance(result, ConservedVector):
        residuals = {}
        for k, v in result.residual.items():
            residuals[k] = r(v) if k == "symbolic_remainder" else v
        return {
            "kind": "conserved_vector",
            "generator": result.generator_id,
            "components": [r(e) for e in result.components],
            "lagrangian": r(result.lagrangian),
            "b_vector": [r(e) for e in result.b_vector],
            "status": result.status.value,
            "residuals": residuals,
            "trivial": result.trivial,
        }
    raise TypeError(f"cannot export {type(result).__name__}")


def export_json(result, vars: VarTable | None = None, inputs: str | None = None) -> str:
    """Serialize an adjoint system, self-adjointness report or conserved vector.

    ``inputs`` is the text the result was computed from (for example the
    system file); its digest is recorded.  Without it the digest covers the
    result body itself.
    """
    if vars is None:
        vars = getattr(result, "vars", None)
        if vars is None:
            raise ExprError(f"exporting a {type(result).__name__} needs the variable table")
    payload = _body(result, vars)
    payload["variables"] = _vars_json(vars)
    payload["format"] = FORMAT_VERSION
    payload["inputs_digest"] = digest(inputs if inputs is not None else _dump(payload))
    return _dump(payload)


def read_json(text: str) -> tuple:
    """Parse exported JSON into ``(result, vars, inputs_digest)``."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ExprError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict) or "kind" not in data:
        raise ExprError("JSON document has no 'kind'")
    vars = _vars_from(data.get("variables", {}))
    p = lambda s: parse_expression(s, vars)  # noqa: E731
    kind = data["kind"]
    try:
        if kind == "adjoint_system":
            result = AdjointSystem(vars, tuple(map(p, data["f_star"])), tuple(map(p, data["f_tilde_star"])),
                                   p(data["lagrangian"]))
        elif kind == "self_adjoint_report":
            rows = lambda g: None if g is None else tuple(tuple(map(p, row)) for row in g)  # noqa: E731
            pairs = lambda h: None if h is None else tuple((k, p(e)) for k, e in h)  # noqa: E731
            result = SelfAdjointReport(
                Verdict(data["status"]), rows(data["gamma"]), rows(data["gamma_tilde"]),
                pairs(data["h"]), pairs(data["h_tilde"]), data["detail"], dict(data["bounds"]),
            )
        elif kind == "conserved_vector":
            residual = dict(data["residuals"])
            if "symbolic_remainder" in residual:
                residual["symbolic_remainder"] = p(residual["symbolic_remainder"])
            result = ConservedVector(
                tuple(map(p, data["components"])), p(data["lagrangian"]), tuple(map(p, data["b_vector"])),
                data["generator"], Status(data["status"]), residual, bool(data["trivial"]),
            )
        else:
            raise ExprError(f"unknown result kind {kind!r}")
    except (KeyError, TypeError) as exc:
        raise ExprError(f"malformed {kind} document: missing or bad field {exc}") from None
    return result, vars, data.get("inputs_digest", "")


def import_json(text: str):
    return read_json(text)[0]
