"""End-to-end: generator -> inherited generator -> verified conserved vector."""

from __future__ import annotations

from .adjoint import DiffSystem
from .noether import ConservedVector, compute_b, conserved_vector, verify_conservation
from .symmetry import (
    Generator,
    Kind,
    LambdaMatrix,
    LBOperatorMatrix,
    inherit_lb,
    inherit_point,
    lambda_extract,
    lb_extract,
)


def inherit(sys: DiffSystem, X: Generator, lam: LambdaMatrix | None = None,
            D: LBOperatorMatrix | None = None, degree: int = 2, op_order: int = 1) -> Generator:
    """Extend ``X`` to the nonlocal variables, extracting lambda or D when absent."""
    if X.kind is Kind.POINT and D is None:
        if lam is None:
            lam = lambda_extract(sys, X, degree)
        return inherit_point(sys, X, lam)
    if D is None:
        D = lb_extract(sys, X, op_order, degree)
    return inherit_lb(sys, X, D)


def conservation_law(sys: DiffSystem, X: Generator, lam: LambdaMatrix | None = None,
                     D: LBOperatorMatrix | None = None, degree: int = 2, op_order: int = 1,
                     weighted: bool = True, mode: str = "both", samples: int = 100,
                     tol: float = 1e-9, seed: int | None = 0) -> ConservedVector:
    Y = inherit(sys, X, lam, D, degree, op_order)
    L = sys.adjoint.lagrangian
    B = compute_b(L, Y, sys)
    C = conserved_vector(L, Y, B, sys.vars, weighted=weighted, generator_id=X.name)
    return verify_conservation(C, sys, mode=mode, samples=samples, tol=tol, seed=seed)
