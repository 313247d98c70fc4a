"""Symbolic expressions over independent variables and jet coordinates."""

from .calculus import diff, diff_jet, diff_x, total_derivative, total_derivative_multi
from .expr import (
    FUNCTIONS,
    ONE,
    ZERO,
    Add,
    Bump,
    Const,
    EvaluationError,
    Expr,
    Func,
    Indicator,
    Jet,
    Mul,
    Pow,
    Var,
    add,
    as_expr,
    cos,
    cosh,
    div,
    evaluate,
    exp,
    free_jets,
    free_vars,
    func,
    log,
    max_jet_order,
    mul,
    neg,
    power,
    sin,
    sinh,
    sqrt,
    tanh,
    walk,
)
from .parser import ParseError, parse, parse_x
from .printer import to_text
from .sampling import (
    PointAssignment,
    eval_at,
    max_discrepancy,
    numerically_equal,
    sample_points,
)
from .simplify import simplify

__all__ = [
    "FUNCTIONS",
    "ONE",
    "ZERO",
    "Add",
    "Bump",
    "Const",
    "EvaluationError",
    "Expr",
    "Func",
    "Indicator",
    "Jet",
    "Mul",
    "ParseError",
    "PointAssignment",
    "Pow",
    "Var",
    "add",
    "as_expr",
    "cos",
    "cosh",
    "diff",
    "diff_jet",
    "diff_x",
    "div",
    "eval_at",
    "evaluate",
    "exp",
    "free_jets",
    "free_vars",
    "func",
    "log",
    "max_discrepancy",
    "max_jet_order",
    "mul",
    "neg",
    "numerically_equal",
    "parse",
    "parse_x",
    "power",
    "sample_points",
    "simplify",
    "sin",
    "sinh",
    "sqrt",
    "tanh",
    "to_text",
    "total_derivative",
    "total_derivative_multi",
    "walk",
]
