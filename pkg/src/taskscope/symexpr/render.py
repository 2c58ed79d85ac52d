"""Rendering for expressions and predicates.

Two styles share one walker:

* ``canonical`` — the symbolic-key form: every composite (arithmetic,
  comparison, boolean, membership, is-None) is fully parenthesized, strings
  are double-quoted, decimals render minimally.  Byte equality of canonical
  text is structural equality of expressions; keys re-parse to identical
  nodes.
* ``pretty`` — precedence-minimal parentheses, used for program and slice
  listings.
"""

from __future__ import annotations

from decimal import Decimal

from ..values import render_number
from .nodes import (
    Arith,
    BoolOp,
    Call,
    Compare,
    Field,
    Helper,
    IsNone,
    ListExpr,
    Lit,
    Membership,
    Name,
    Pred,
    RecordExpr,
)

# Precedence levels for pretty mode (higher binds tighter).
_PREC_OR = 1
_PREC_AND = 2
_PREC_CMP = 4
_PREC_ADD = 5
_PREC_MUL = 6
_PREC_ATOM = 9

_ARITH_PREC = {"+": _PREC_ADD, "-": _PREC_ADD, "*": _PREC_MUL, "/": _PREC_MUL, "//": _PREC_MUL, "%": _PREC_MUL}


def render_text(s: str) -> str:
    out = ['"']
    for ch in s:
        if ch == '"':
            out.append('\\"')
        elif ch == "\\":
            out.append("\\\\")
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\t":
            out.append("\\t")
        elif ch == "\r":
            out.append("\\r")
        else:
            out.append(ch)
    out.append('"')
    return "".join(out)


def _render_lit(node: Lit) -> str:
    v = node.value
    if v is None:
        return "None"
    if isinstance(v, bool):
        return "True" if v else "False"
    if isinstance(v, (int, Decimal)):
        return render_number(v)
    return render_text(v)


def render(node: Pred, style: str = "canonical") -> str:
    canonical = style == "canonical"

    def emit(n: Pred, prec: int) -> str:
        if isinstance(n, Lit):
            return _render_lit(n)
        if isinstance(n, Name):
            return n.ident
        if isinstance(n, Field):
            base = emit(n.base, _PREC_ATOM)
            parts = [base]
            for seg in n.path:
                parts.append(f"[{seg}]" if isinstance(seg, int) else f".{seg}")
            return "".join(parts)
        if isinstance(n, ListExpr):
            return "[" + ", ".join(emit(x, 0) for x in n.items) + "]"
        if isinstance(n, RecordExpr):
            return "{" + ", ".join(f"{render_text(k)}: {emit(v, 0)}" for k, v in n.fields) + "}"
        if isinstance(n, Call):
            return n.tool + "(" + ", ".join(emit(a, 0) for a in n.args) + ")"
        if isinstance(n, Helper):
            if n.func is None:
                return f"{n.fn}({emit(n.coll, 0)})"
            lam = f"lambda {n.func.var}: {emit(n.func.body, 0)}"
            return f"{n.fn}({emit(n.coll, 0)}, {n.kwarg}={lam})"
        if isinstance(n, Arith):
            p = _ARITH_PREC[n.op]
            body = f"{emit(n.lhs, p)} {n.op} {emit(n.rhs, p + 1)}"
            return f"({body})" if canonical or p < prec else body
        if isinstance(n, Compare):
            body = f"{emit(n.lhs, _PREC_CMP + 1)} {n.op} {emit(n.rhs, _PREC_CMP + 1)}"
            return f"({body})" if canonical or _PREC_CMP < prec else body
        if isinstance(n, BoolOp):
            p = _PREC_AND if n.op == "and" else _PREC_OR
            body = f" {n.op} ".join(emit(t, p + (0 if i == 0 else 1)) for i, t in enumerate(n.terms))
            return f"({body})" if canonical or p < prec else body
        if isinstance(n, Membership):
            body = f"{emit(n.item, _PREC_CMP + 1)} in {emit(n.coll, _PREC_CMP + 1)}"
            return f"({body})" if canonical or _PREC_CMP < prec else body
        if isinstance(n, IsNone):
            word = "is not None" if n.negated else "is None"
            body = f"{emit(n.expr, _PREC_CMP + 1)} {word}"
            return f"({body})" if canonical or _PREC_CMP < prec else body
        raise TypeError(f"cannot render {type(n).__name__}")

    return emit(node, 0)


def canonical_key(node: Pred) -> str:
    """The symbolic key of an expression: its canonical text rendering."""
    return render(node, "canonical")


def pretty(node: Pred) -> str:
    return render(node, "pretty")
