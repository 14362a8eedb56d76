"""Command line interface.

Exit codes: 0 success or verified, 1 refuted or failed verification,
2 not determined within the ansatz bounds, 3 usage, parse or input error.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .adjoint import Verdict, check_quasi_self_adjoint, check_self_adjoint
from .core import ExprError
from .noether import NotADivergence, Status, compute_b, conserved_vector, verify_conservation
from .noether import strip_nonlocal as strip_nonlocal_vars
from .parser import ParseError, parse_expression
from .render import render
from .serialize import export_json, read_json
from .symmetry import (
    Kind,
    LambdaMatrix,
    NotASymmetry,
    inherit_lb,
    inherit_point,
    lambda_extract,
    lambda_verify,
    lb_extract,
    lb_verify,
)
from .sysfile import Problem, parse_system

EXIT_OK, EXIT_FAILED, EXIT_UNDETERMINED, EXIT_USAGE = 0, 1, 2, 3


class _Group(click.Group):
    """Maps click's own usage errors and engine input errors to exit code 3."""

    def main(self, args=None, prog_name=None, complete_var=None, standalone_mode=True, **extra):
        try:
            rv = super().main(args, prog_name, complete_var, standalone_mode=False, **extra)
            code = rv if isinstance(rv, int) else EXIT_OK
        except click.exceptions.Exit as exc:
            code = exc.exit_code
        except (click.ClickException, click.exceptions.Abort) as exc:
            if isinstance(exc, click.ClickException):
                exc.show()
            code = EXIT_USAGE
        except NotASymmetry as exc:
            click.echo(f"error: {exc}", err=True)
            code = EXIT_FAILED if exc.certified else EXIT_UNDETERMINED
        except NotADivergence as exc:
            click.echo(f"error: {exc}", err=True)
            code = EXIT_FAILED
        except ExprError as exc:
            click.echo(f"error: {exc}", err=True)
            code = EXIT_USAGE
        if standalone_mode:
            sys.exit(code)
        return code


def _load(path: str) -> Problem:
    text = Path(path).read_text(encoding="utf-8")
    try:
        return parse_system(text)
    except ParseError as exc:
        raise ExprError(f"{path}:{exc}") from None


def _write_json(target: str | None, text: str) -> None:
    if target == "-":
        click.echo(text, nl=False)
    elif target:
        Path(target).write_text(text, encoding="utf-8")


def _generator(prob: Problem, name: str):
    if name not in prob.generators:
        known = ", ".join(sorted(prob.generators)) or "none"
        raise click.UsageError(f"no generator named {name!r} (known: {known})")
    return prob.generators[name]


def _parse_table(text: str, prob: Problem) -> LambdaMatrix:
    rows = [r for r in text.split(";")]
    m = prob.system.m
    if len(rows) != m:
        raise click.UsageError(f"--lambda needs {m} row(s) separated by ';'")
    entries = []
    for row in rows:
        cells = row.split(",")
        if len(cells) != m:
            raise click.UsageError(f"--lambda rows need {m} entries separated by ','")
        entries.append(tuple(parse_expression(c.strip(), prob.vars) for c in cells))
    return LambdaMatrix(tuple(entries))


def _show(label: str, exprs, vars) -> None:
    for k, e in enumerate(exprs, start=1):
        click.echo(f"{label}[{k}] = {render(e, vars)}")


@click.group(cls=_Group)
@click.option("--seed", type=int, default=0, show_default=True, help="Seed for the numeric sampler.")
@click.version_option(package_name="artifact")
@click.pass_context
def cli(ctx, seed):
    """Adjoint systems, symmetries and conservation laws of PDE systems."""
    ctx.obj = {"seed": seed}


@cli.command()
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option("--json", "json_out", metavar="OUT", help="Write the adjoint system as JSON ('-' for stdout).")
def adjoint(file, json_out):
    """Print the formal Lagrangian and the adjoint system."""
    prob = _load(file)
    adj = prob.system.adjoint
    vars = prob.vars
    click.echo(f"L = {render(adj.lagrangian, vars)}")
    _show("F*", adj.f_star, vars)
    _show("F~*", adj.f_tilde_star, vars)
    _write_json(json_out, export_json(adj, vars, inputs=prob.source))
    return EXIT_OK


@cli.command()
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option("--gamma-order", type=click.IntRange(min=0), default=None, help="Jet order of Gamma (default: system order).")
@click.option("--gamma-degree", type=click.IntRange(min=0), default=2, show_default=True)
@click.option("--quasi", "quasi", multiple=True, metavar="ANSATZ", help="Ansatz block(s) for the quasi search.")
@click.option("--json", "json_out", metavar="OUT")
def selfadjoint(file, gamma_order, gamma_degree, quasi, json_out):
    """Classify the system as self-adjoint or quasi-self-adjoint."""
    prob = _load(file)
    report = check_self_adjoint(prob.system, gamma_order, gamma_degree)
    click.echo(f"self-adjoint: {report.verdict.value}")
    if report.verdict is not Verdict.SELF_ADJOINT and quasi:
        cands = [_ansatz(prob, q) for q in quasi]
        report = check_quasi_self_adjoint(prob.system, cands, gamma_order, gamma_degree)
        click.echo(f"quasi-self-adjoint: {report.verdict.value}")
    _print_report(report, prob)
    _write_json(json_out, export_json(report, prob.vars, inputs=prob.source))
    return {
        Verdict.SELF_ADJOINT: EXIT_OK,
        Verdict.QUASI_SELF_ADJOINT: EXIT_OK,
        Verdict.REFUTED: EXIT_FAILED,
        Verdict.NOT_DETERMINED: EXIT_UNDETERMINED,
    }[report.verdict]


def _ansatz(prob: Problem, name: str) -> dict:
    if name not in prob.ansatz:
        known = ", ".join(sorted(prob.ansatz)) or "none"
        raise click.UsageError(f"no ansatz named {name!r} (known: {known})")
    return prob.ansatz[name]


def _print_report(report, prob: Problem) -> None:
    vars = prob.vars
    click.echo(f"verdict: {report.verdict.value}")
    if report.detail:
        click.echo(f"detail: {report.detail}")
    for label, pairs in (("h", report.h), ("h~", report.h_tilde)):
        for name, e in pairs or ():
            click.echo(f"{label}: {name} = {render(e, vars)}")
    for label, rows in (("Gamma", report.gamma), ("Gamma~", report.gamma_tilde)):
        for k, row in enumerate(rows or (), start=1):
            click.echo(f"{label}[{k}] = [{', '.join(render(e, vars) for e in row)}]")


def _inherit(prob: Problem, X, extract: bool, lam_text: str | None, degree: int, op_order: int):
    sys_ = prob.system
    if X.kind is Kind.POINT:
        if lam_text is not None:
            lam = _parse_table(lam_text, prob)
        elif extract or prob.lambdas.get(X.name) is None:
            lam = lambda_extract(sys_, X, degree)
        else:
            lam = prob.lambdas[X.name]
        if not lambda_verify(sys_, X, lam):
            raise NotASymmetry("the multiplier matrix does not satisfy Pr X(F) = lambda F", certified=True)
        return inherit_point(sys_, X, lam), lam
    if lam_text is not None:
        raise click.UsageError("--lambda applies to point generators; give op.NU.MU entries instead")
    D = prob.operators.get(X.name)
    if extract or D is None:
        D = lb_extract(sys_, X, op_order, degree)
    if not lb_verify(sys_, X, D):
        raise NotASymmetry("the operator matrix does not satisfy Pr X(F) = D(F)", certified=True)
    return inherit_lb(sys_, X, D), D


def _show_table(table, prob: Problem) -> None:
    vars = prob.vars
    if isinstance(table, LambdaMatrix):
        for a, row in enumerate(table.entries, start=1):
            click.echo(f"lambda[{a}] = [{', '.join(render(e, vars) for e in row)}]")
        return
    for (nu, mu), terms in sorted(table.entries.items()):
        parts = []
        for J, c in terms:
            dx = "".join(f"D{x}" * k for x, k in zip(vars.independent, J)) or "1"
            parts.append(f"({render(c, vars)})*{dx}")
        click.echo(f"D[{nu + 1},{mu + 1}] = {' + '.join(parts)}")


@cli.command()
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option("--generator", "gen", required=True, metavar="NAME")
@click.option("--extract", is_flag=True, help="Extract lambda or D even if the file gives one.")
@click.option("--lambda", "lam_text", metavar="TABLE", help="Multiplier matrix: rows ';', entries ','.")
@click.option("--degree", type=click.IntRange(min=0), default=2, show_default=True)
@click.option("--op-order", type=click.IntRange(min=0), default=1, show_default=True)
def symmetry(file, gen, extract, lam_text, degree, op_order):
    """Verify or extract lambda / D and print the inherited generator."""
    if extract and lam_text is not None:
        raise click.UsageError("--extract and --lambda are mutually exclusive")
    prob = _load(file)
    X = _generator(prob, gen)
    Y, table = _inherit(prob, X, extract, lam_text, degree, op_order)
    _show_table(table, prob)
    vars = prob.vars
    eta_star, eta_tilde_star = Y.extended
    for name, e in zip(vars.nonlocal_primary, eta_star):
        click.echo(f"eta*[{name}] = {render(e, vars)}")
    for name, e in zip(vars.nonlocal_extra, eta_tilde_star):
        click.echo(f"eta~*[{name}] = {render(e, vars)}")
    click.echo("recheck: passed")
    return EXIT_OK


def _verify_kw(ctx, samples, tol, seed):
    return {"samples": samples, "tol": tol, "seed": ctx.obj["seed"] if seed is None else seed}


def _show_vector(C, prob: Problem) -> None:
    vars = prob.vars
    for x, e in zip(vars.independent, C.components):
        click.echo(f"C[{x}] = {render(e, vars)}")
    click.echo(f"status: {C.status.value}")
    if C.trivial:
        click.echo("trivial: yes")
    for k in ("numeric_max", "numeric_max_scaled"):
        if k in C.residual:
            click.echo(f"{k}: {C.residual[k]:.3e}")
    rem = C.residual.get("symbolic_remainder")
    if rem is not None and not rem.is_zero():
        click.echo(f"symbolic_remainder: {render(rem, vars)}")


@cli.command()
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option("--generator", "gen", required=True, metavar="NAME")
@click.option("--strip-nonlocal", is_flag=True, help="Replace v, vt by a self-adjointness witness.")
@click.option("--quasi", multiple=True, metavar="ANSATZ", help="Ansatz block(s) used by --strip-nonlocal.")
@click.option("--extract", is_flag=True)
@click.option("--degree", type=click.IntRange(min=0), default=2, show_default=True)
@click.option("--op-order", type=click.IntRange(min=0), default=1, show_default=True)
@click.option("--samples", type=click.IntRange(min=1), default=100, show_default=True)
@click.option("--tol", type=float, default=1e-9, show_default=True)
@click.option("--seed", type=int, default=None, help="Overrides the global --seed.")
@click.option("--json", "json_out", metavar="OUT")
@click.pass_context
def conserve(ctx, file, gen, strip_nonlocal, quasi, extract, degree, op_order, samples, tol, seed, json_out):
    """Run the full pipeline to a verified conserved vector."""
    prob = _load(file)
    X = _generator(prob, gen)
    Y, _ = _inherit(prob, X, extract, None, degree, op_order)
    sys_ = prob.system
    L = sys_.adjoint.lagrangian
    B = compute_b(L, Y, sys_)
    C = conserved_vector(L, Y, B, prob.vars, generator_id=X.name)
    kw = _verify_kw(ctx, samples, tol, seed)
    C = verify_conservation(C, sys_, **kw)
    if strip_nonlocal:
        report = check_self_adjoint(sys_)
        if report.verdict is not Verdict.SELF_ADJOINT and quasi:
            report = check_quasi_self_adjoint(sys_, [_ansatz(prob, q) for q in quasi])
        if report.verdict not in (Verdict.SELF_ADJOINT, Verdict.QUASI_SELF_ADJOINT):
            click.echo(f"cannot strip nonlocal variables: self-adjointness {report.verdict.value}", err=True)
            _show_vector(C, prob)
            return EXIT_UNDETERMINED
        C = strip_nonlocal_vars(C, report, sys_, **kw)
    _show_vector(C, prob)
    _write_json(json_out, export_json(C, prob.vars, inputs=prob.source))
    return EXIT_FAILED if C.status is Status.FAILED else EXIT_OK


@cli.command()
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option("--conserved", required=True, type=click.Path(exists=True, dir_okay=False), metavar="JSON")
@click.option("--numeric", is_flag=True, help="Also sample on-shell points.")
@click.option("--samples", type=click.IntRange(min=1), default=100, show_default=True)
@click.option("--tol", type=float, default=1e-9, show_default=True)
@click.option("--seed", type=int, default=None, help="Overrides the global --seed.")
@click.pass_context
def verify(ctx, file, conserved, numeric, samples, tol, seed):
    """Re-verify an exported conserved vector against a system file."""
    prob = _load(file)
    C, vars, _ = read_json(Path(conserved).read_text(encoding="utf-8"))
    if not hasattr(C, "components"):
        raise click.UsageError("the JSON document is not a conserved vector")
    if vars != prob.vars:
        raise click.UsageError("the conserved vector was computed for different variables")
    C = verify_conservation(C, prob.system, mode="both" if numeric else "symbolic",
                            **_verify_kw(ctx, samples, tol, seed))
    _show_vector(C, prob)
    return EXIT_FAILED if C.status is Status.FAILED else EXIT_OK


def main() -> None:
    cli(prog_name="conslaw")


if __name__ == "__main__":
    main()
