"""Conservation laws of (possibly underdetermined) PDE systems.

Build a :class:`DiffSystem`, form its adjoint, classify self-adjointness,
carry symmetry generators over to the adjoint variables and turn them into
verified conserved vectors.
"""

from .adjoint import (
    AdjointSystem,
    DiffSystem,
    SelfAdjointReport,
    Verdict,
    adjoint_system,
    check_quasi_self_adjoint,
    check_self_adjoint,
    formal_lagrangian,
)
from .core import (
    ONE,
    ZERO,
    Expr,
    ExprError,
    Indep,
    Jet,
    MultiIndex,
    Param,
    VarTable,
    const,
    eval_numeric,
    normalize,
)
from .jet import divergence, euler, higher_euler, prolong, total_derivative, total_derivative_multi
from .noether import (
    ConservedVector,
    NotADivergence,
    Status,
    compute_b,
    conserved_vector,
    is_trivial,
    reduce_on_shell,
    strip_nonlocal,
    verify_conservation,
)
from .parser import ParseError, parse_expression
from .pipeline import conservation_law, inherit
from .render import render
from .serialize import export_json, import_json, read_json
from .symmetry import (
    Generator,
    Kind,
    LambdaMatrix,
    LBOperatorMatrix,
    NotASymmetry,
    inherit_lb,
    inherit_point,
    lambda_extract,
    lambda_verify,
    lb_extract,
    lb_verify,
)
from .sysfile import Problem, parse_system

__version__ = "0.1.0"

__all__ = [
    "adjoint_system",
    "AdjointSystem",
    "check_quasi_self_adjoint",
    "check_self_adjoint",
    "compute_b",
    "conservation_law",
    "conserved_vector",
    "ConservedVector",
    "const",
    "DiffSystem",
    "divergence",
    "euler",
    "eval_numeric",
    "export_json",
    "Expr",
    "ExprError",
    "formal_lagrangian",
    "Generator",
    "higher_euler",
    "import_json",
    "Indep",
    "inherit",
    "inherit_lb",
    "inherit_point",
    "is_trivial",
    "Jet",
    "Kind",
    "lambda_extract",
    "lambda_verify",
    "LambdaMatrix",
    "lb_extract",
    "lb_verify",
    "LBOperatorMatrix",
    "MultiIndex",
    "normalize",
    "NotADivergence",
    "NotASymmetry",
    "ONE",
    "Param",
    "parse_expression",
    "parse_system",
    "ParseError",
    "Problem",
    "prolong",
    "read_json",
    "reduce_on_shell",
    "render",
    "SelfAdjointReport",
    "Status",
    "strip_nonlocal",
    "total_derivative",
    "total_derivative_multi",
    "VarTable",
    "Verdict",
    "verify_conservation",
    "ZERO",
]
