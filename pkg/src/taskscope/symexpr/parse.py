"""Expression parsing shared by symbolic keys, slice text, and the task DSL.

The accepted surface syntax is a strict subset of Python expressions, so
parsing goes through :mod:`ast` and converts to our node types.  Numeric
literals with a decimal point are recovered from the *source text* (never
through float) to keep them exact.

Two strictness levels:

* symbolic mode (``parse_key``) — the key grammar: calls may nest anywhere,
  field paths may hang off call results.  Errors raise :class:`KeyParseError`.
* DSL mode — used by the task-program parser, which layers placement rules
  (where tool calls may appear) on top via the ``pos`` argument and collects
  violations instead of raising.
"""

from __future__ import annotations

import ast
from dataclasses import dataclass
from decimal import Decimal
from typing import Callable

from ..values import dec
from .nodes import (
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
)

_ARITH_OPS = {ast.Add: "+", ast.Sub: "-", ast.Mult: "*", ast.Div: "/", ast.FloorDiv: "//", ast.Mod: "%"}
_CMP_OPS = {ast.Lt: "<", ast.LtE: "<=", ast.Gt: ">", ast.GtE: ">=", ast.Eq: "==", ast.NotEq: "!="}

# Syntactic positions, used by DSL placement rules.
POS_RHS = "rhs"          # assignment right-hand side / bare statement
POS_ARG = "arg"          # argument of a tool or helper call
POS_CONDITION = "cond"   # if condition or assert
POS_LAMBDA = "lambda"    # inside a lambda body


class KeyParseError(ValueError):
    pass


@dataclass
class ExprReader:
    """ast -> node converter with a pluggable error sink."""

    source: str
    is_tool: Callable[[str], bool] = lambda name: True
    strict_dsl: bool = False
    on_error: Callable[[ast.AST, str, str], None] | None = None  # (node, code, message)

    def _fail(self, node: ast.AST, code: str, message: str) -> Pred:
        if self.on_error is None:
            raise KeyParseError(f"{code}: {message}")
        self.on_error(node, code, message)
        return Lit(None)  # placeholder; the caller discards trees with errors

    # -- entry points ------------------------------------------------------

    def expr(self, node: ast.expr, pos: str = POS_RHS) -> Expr:
        out = self._expr(node, pos)
        return out  # type: ignore[return-value]

    def pred(self, node: ast.expr, pos: str = POS_CONDITION) -> Pred:
        if isinstance(node, ast.BoolOp):
            op = "and" if isinstance(node.op, ast.And) else "or"
            return BoolOp(op, tuple(self.pred(v, pos) for v in node.values))
        if isinstance(node, ast.Compare):
            if len(node.ops) != 1:
                return self._fail(node, "unsupported-syntax", "chained comparisons are not allowed")
            op, rhs = node.ops[0], node.comparators[0]
            if isinstance(op, (ast.Is, ast.IsNot)):
                if not (isinstance(rhs, ast.Constant) and rhs.value is None):
                    return self._fail(node, "unsupported-syntax", "'is' only supports None")
                return IsNone(self.expr(node.left, pos), negated=isinstance(op, ast.IsNot))
            if isinstance(op, ast.In):
                return Membership(self.expr(node.left, pos), self.expr(rhs, pos))
            if type(op) in _CMP_OPS:
                return Compare(_CMP_OPS[type(op)], self.expr(node.left, pos), self.expr(rhs, pos))
            return self._fail(node, "unsupported-syntax", f"comparison {type(op).__name__} not allowed")
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.Not):
            return self._fail(node, "unsupported-syntax", "'not' is not in the grammar; use 'is None' / '!='")
        return self.expr(node, pos)

    # -- internals ---------------------------------------------------------

    def _expr(self, node: ast.expr, pos: str) -> Pred:
        if isinstance(node, ast.Constant):
            return self._constant(node)
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
            inner = self._expr(node.operand, pos)
            if isinstance(inner, Lit) and isinstance(inner.value, (int, Decimal)) and not isinstance(inner.value, bool):
                return Lit(-inner.value)
            return self._fail(node, "unsupported-syntax", "unary minus only on number literals")
        if isinstance(node, ast.Name):
            return Name(node.id)
        if isinstance(node, (ast.Attribute, ast.Subscript)):
            return self._field_or_name(node, pos)
        if isinstance(node, ast.List):
            return ListExpr(tuple(self.expr(e, pos) for e in node.elts))
        if isinstance(node, ast.Dict):
            if self.strict_dsl:
                return self._fail(node, "unsupported-syntax", "record displays are not in the grammar")
            fields = []
            for k, v in zip(node.keys, node.values):
                if not (isinstance(k, ast.Constant) and isinstance(k.value, str)):
                    return self._fail(node, "unsupported-syntax", "record keys must be string literals")
                fields.append((k.value, self.expr(v, pos)))
            return RecordExpr(tuple(fields))
        if isinstance(node, ast.Call):
            return self._call(node, pos)
        if isinstance(node, ast.BinOp):
            if type(node.op) not in _ARITH_OPS:
                return self._fail(node, "unsupported-syntax", f"operator {type(node.op).__name__} not allowed")
            return Arith(_ARITH_OPS[type(node.op)], self.expr(node.left, pos), self.expr(node.right, pos))
        if isinstance(node, ast.JoinedStr):
            return self._fail(node, "f-string", "f-strings are not allowed")
        if isinstance(node, (ast.GeneratorExp, ast.ListComp, ast.SetComp, ast.DictComp)):
            return self._fail(node, "loop-found", "comprehensions contain implicit loops")
        if isinstance(node, ast.Lambda):
            return self._fail(node, "lambda-misplaced", "lambda only as key=/predicate= of a helper")
        if isinstance(node, (ast.BoolOp, ast.Compare)):
            return self._fail(node, "unsupported-syntax", "conditions are only allowed in if/assert/predicates")
        return self._fail(node, "unsupported-syntax", f"{type(node).__name__} is not in the grammar")

    def _constant(self, node: ast.Constant) -> Pred:
        v = node.value
        if v is None or isinstance(v, bool) or isinstance(v, str):
            return Lit(v)
        if isinstance(v, int):
            return Lit(v)
        if isinstance(v, float):
            text = ast.get_source_segment(self.source, node)
            if text is None:
                return self._fail(node, "bad-literal", "cannot recover exact decimal text")
            return Lit(dec(text.replace("_", "")))
        return self._fail(node, "bad-literal", f"{type(v).__name__} literals are not allowed")

    def _dotted(self, node: ast.expr) -> str | None:
        parts: list[str] = []
        cur = node
        while isinstance(cur, ast.Attribute):
            parts.append(cur.attr)
            cur = cur.value
        if isinstance(cur, ast.Name):
            parts.append(cur.id)
            return ".".join(reversed(parts))
        return None

    def _field_or_name(self, node: ast.expr, pos: str) -> Pred:
        # Unwind trailing .field / [index] segments down to the base atom.
        path: list[str | int] = []
        cur: ast.expr = node
        while True:
            if isinstance(cur, ast.Attribute):
                path.append(cur.attr)
                cur = cur.value
            elif isinstance(cur, ast.Subscript):
                idx = cur.slice
                if not (isinstance(idx, ast.Constant) and isinstance(idx.value, int)
                        and not isinstance(idx.value, bool) and idx.value >= 0):
                    return self._fail(cur, "unsupported-syntax", "index must be a non-negative integer literal")
                path.append(idx.value)
                cur = cur.value
            else:
                break
        path.reverse()
        if isinstance(cur, ast.Name):
            return Field(Name(cur.id), tuple(path))
        if isinstance(cur, ast.Call):
            if self.strict_dsl:
                return self._fail(cur, "chained-call", "store the call result in a variable before accessing fields")
            base = self._call(cur, pos)
            return Field(base, tuple(path))  # type: ignore[arg-type]
        return self._fail(cur, "unsupported-syntax", f"cannot access fields of {type(cur).__name__}")

    def _call(self, node: ast.Call, pos: str) -> Pred:
        if isinstance(node.func, ast.Name):
            name = node.func.id
            if name in HELPERS:
                return self._helper(node, name, pos)
            if self.is_tool(name):
                return self._tool_call(node, name, pos)
            return self._fail(node, "unknown-tool", f"'{name}' is not a registered tool or helper")
        dotted = self._dotted(node.func)
        if dotted is not None and "." in dotted:
            if self.strict_dsl and not self.is_tool(dotted):
                return self._fail(node, "unknown-tool", f"'{dotted}' is not a registered tool")
            return self._tool_call(node, dotted, pos)
        return self._fail(node, "unsupported-syntax", "call target must be a tool or helper name")

    def _tool_call(self, node: ast.Call, tool: str, pos: str) -> Pred:
        if self.strict_dsl and pos != POS_RHS:
            where = {POS_ARG: "as a call argument", POS_CONDITION: "inside a condition",
                     POS_LAMBDA: "inside a lambda"}.get(pos, "here")
            return self._fail(node, "embedded-call", f"tool call {where}; assign it to a variable first")
        if node.keywords:
            return self._fail(node, "keyword-arg", "tool calls take positional arguments only")
        args = tuple(self.expr(a, POS_ARG) for a in node.args)
        return Call(tool, args)

    def _helper(self, node: ast.Call, fn: str, pos: str) -> Pred:
        if fn == "len":
            if len(node.args) != 1 or node.keywords:
                return self._fail(node, "arity-mismatch", "len takes exactly one argument")
            return Helper("len", self.expr(node.args[0], POS_ARG))
        kwarg = "key" if fn in ("min", "max") else "predicate"
        if len(node.args) != 1 or len(node.keywords) != 1 or node.keywords[0].arg != kwarg:
            return self._fail(node, "helper-kwarg", f"{fn} takes ({fn}(values, {kwarg}=lambda ...))")
        coll = self.expr(node.args[0], POS_ARG)
        if self.strict_dsl and not isinstance(coll, (Name, Field)):
            return self._fail(node, "embedded-call", f"{fn} must receive a variable, not an inline computation")
        lam_node = node.keywords[0].value
        if not isinstance(lam_node, ast.Lambda):
            return self._fail(node, "helper-kwarg", f"{kwarg}= must be a lambda")
        a = lam_node.args
        if len(a.args) != 1 or a.vararg or a.kwarg or a.kwonlyargs or a.defaults or a.posonlyargs:
            return self._fail(node, "helper-kwarg", "helper lambdas take exactly one plain argument")
        var = a.args[0].arg
        if kwarg == "key":
            body: Pred = self.expr(lam_node.body, POS_LAMBDA)
        else:
            body = self.pred(lam_node.body, POS_LAMBDA)
        return Helper(fn, coll, Lambda(var, body))


def parse_key(text: str) -> Pred:
    """Parse a symbolic key (or any rendered expression) back into nodes."""
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise KeyParseError(f"syntax-error: {exc.msg} at {exc.lineno}:{exc.offset}") from exc
    reader = ExprReader(source=text)
    return reader.pred(tree.body, POS_CONDITION)


def parse_key_expr(text: str) -> Expr:
    """Like parse_key but rejects predicate forms."""
    out = parse_key(text)
    if isinstance(out, (Compare, BoolOp, Membership, IsNone)):
        raise KeyParseError("expected an expression, found a predicate")
    return out
