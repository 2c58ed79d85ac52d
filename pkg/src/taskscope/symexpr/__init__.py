"""Canonical symbolic expressions: the shared vocabulary of slices, rules,
envelope keys, and concretization."""

from .nodes import (
    ARITH_OPS,
    COMPARE_OPS,
    HELPERS,
    Arith,
    BoolOp,
    Call,
    Compare,
    Expr,
    Field,
    Helper,
    IsNone,
    Lambda,
    ListExpr,
    Lit,
    Membership,
    Name,
    Pred,
    RecordExpr,
    TRUE,
    conjoin,
    conjuncts,
    free_names,
    outer_tool_calls,
    substitute,
    tool_calls,
    value_to_expr,
    walk,
)
from .parse import KeyParseError, parse_key, parse_key_expr
from .render import canonical_key, pretty, render, render_text
from .evaluate import evaluate, evaluate_predicate

canonicalize = canonical_key

__all__ = [
    "ARITH_OPS",
    "COMPARE_OPS",
    "HELPERS",
    "Arith",
    "BoolOp",
    "Call",
    "Compare",
    "Expr",
    "Field",
    "Helper",
    "IsNone",
    "KeyParseError",
    "Lambda",
    "ListExpr",
    "Lit",
    "Membership",
    "Name",
    "Pred",
    "RecordExpr",
    "TRUE",
    "canonical_key",
    "canonicalize",
    "conjoin",
    "conjuncts",
    "evaluate",
    "evaluate_predicate",
    "free_names",
    "outer_tool_calls",
    "parse_key",
    "parse_key_expr",
    "pretty",
    "render",
    "render_text",
    "substitute",
    "tool_calls",
    "value_to_expr",
    "walk",
]
