"""Expression and predicate nodes shared by the task DSL, slices, and rules.

The same node types describe three layers:

* expressions inside a parsed task program (names refer to assignments),
* slice clauses (names refer to earlier let bindings),
* fully inlined symbolic values, where every name has been substituted and
  the only remaining identifiers are lambda-bound variables.

Nodes are immutable; structural equality is the equality that matters for
authorization, and it is deliberately strict: an int literal never equals a
decimal literal even when numerically equal, because their canonical key
renderings differ.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal
from typing import Iterator, Union

from ..values import Value

HELPERS = ("min", "max", "len", "first", "last")
ARITH_OPS = ("+", "-", "*", "/", "//", "%")
COMPARE_OPS = ("<", "<=", ">", ">=", "==", "!=")

Expr = Union["Lit", "Name", "Field", "ListExpr", "RecordExpr", "Call", "Helper", "Arith"]
Pred = Union["Compare", "BoolOp", "Membership", "IsNone", Expr]  # bare Expr = truthiness


def _lit_kind(v: Value) -> str:
    if isinstance(v, bool):
        return "bool"
    if v is None:
        return "none"
    if isinstance(v, int):
        return "int"
    if isinstance(v, Decimal):
        return "dec"
    if isinstance(v, str):
        return "text"
    raise TypeError(f"literal cannot hold {type(v).__name__}")


@dataclass(frozen=True)
class Lit:
    """Scalar literal (None, bool, int, Decimal, text)."""

    value: Value

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Lit):
            return NotImplemented
        return _lit_kind(self.value) == _lit_kind(other.value) and self.value == other.value

    def __hash__(self) -> int:
        return hash((_lit_kind(self.value), str(self.value)))


@dataclass(frozen=True)
class Name:
    ident: str


@dataclass(frozen=True)
class Field:
    """Field/index path off a base expression: base.f, base[0], base[0].g ..."""

    base: Expr
    path: tuple[Union[str, int], ...]


@dataclass(frozen=True)
class ListExpr:
    items: tuple[Expr, ...]


@dataclass(frozen=True)
class RecordExpr:
    """Record display, used when concrete record arguments become literal keys."""

    fields: tuple[tuple[str, Expr], ...]  # sorted by field name


@dataclass(frozen=True)
class Call:
    """Tool invocation; tool is the full dotted id ("shop.add_to_cart")."""

    tool: str
    args: tuple[Expr, ...]

    @property
    def service(self) -> str:
        return self.tool.split(".", 1)[0]


@dataclass(frozen=True)
class Lambda:
    var: str
    body: Pred


@dataclass(frozen=True)
class Helper:
    """min/max(coll, key=λ) | first/last(coll, predicate=λ) | len(x)."""

    fn: str
    coll: Expr
    func: Lambda | None = None

    @property
    def kwarg(self) -> str | None:
        if self.fn in ("min", "max"):
            return "key"
        if self.fn in ("first", "last"):
            return "predicate"
        return None


@dataclass(frozen=True)
class Arith:
    op: str
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True)
class Compare:
    op: str
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True)
class BoolOp:
    op: str  # "and" | "or"
    terms: tuple[Pred, ...]


@dataclass(frozen=True)
class Membership:
    item: Expr
    coll: Expr


@dataclass(frozen=True)
class IsNone:
    expr: Expr
    negated: bool = False


EXPR_TYPES = (Lit, Name, Field, ListExpr, RecordExpr, Call, Helper, Arith)
PRED_ONLY_TYPES = (Compare, BoolOp, Membership, IsNone)
NODE_TYPES = EXPR_TYPES + PRED_ONLY_TYPES + (Lambda,)


def children(node: Pred) -> Iterator[Pred]:
    if isinstance(node, (Lit, Name)):
        return
    elif isinstance(node, Field):
        yield node.base
    elif isinstance(node, ListExpr):
        yield from node.items
    elif isinstance(node, RecordExpr):
        for _, v in node.fields:
            yield v
    elif isinstance(node, Call):
        yield from node.args
    elif isinstance(node, Helper):
        yield node.coll
        if node.func is not None:
            yield node.func.body
    elif isinstance(node, (Arith, Compare)):
        yield node.lhs
        yield node.rhs
    elif isinstance(node, BoolOp):
        yield from node.terms
    elif isinstance(node, Membership):
        yield node.item
        yield node.coll
    elif isinstance(node, IsNone):
        yield node.expr
    else:
        raise TypeError(f"unknown node {type(node).__name__}")


def walk(node: Pred) -> Iterator[Pred]:
    yield node
    for child in children(node):
        yield from walk(child)


def tool_calls(node: Pred) -> list[Call]:
    """All tool-call subterms, outermost first, in source order."""
    found: list[Call] = []

    def visit(n: Pred) -> None:
        if isinstance(n, Call):
            found.append(n)
        for child in children(n):
            visit(child)

    visit(node)
    return found


def outer_tool_calls(node: Pred) -> list[Call]:
    """Maximal tool-call subterms: calls not nested inside another call.

    These are exactly the subterms an enforcer resolves through envelope
    keys (a nested call is part of the enclosing call's key, not a separate
    lookup), and the envelopes an agent must attach.
    """
    found: list[Call] = []

    def visit(n: Pred) -> None:
        if isinstance(n, Call):
            found.append(n)
            return
        for child in children(n):
            visit(child)

    visit(node)
    return found


def free_names(node: Pred, bound: frozenset[str] = frozenset()) -> list[str]:
    """Free identifiers in source order (lambda binders excluded)."""
    out: list[str] = []

    def visit(n: Pred, bound_here: frozenset[str]) -> None:
        if isinstance(n, Name):
            if n.ident not in bound_here and n.ident not in out:
                out.append(n.ident)
            return
        if isinstance(n, Helper):
            visit(n.coll, bound_here)
            if n.func is not None:
                visit(n.func.body, bound_here | {n.func.var})
            return
        for child in children(n):
            visit(child, bound_here)

    visit(node, bound)
    return out


def substitute(node: Pred, env: dict[str, Expr]) -> Pred:
    """Replace free names by expressions; lambda binders shadow the env."""
    if isinstance(node, Name):
        return env.get(node.ident, node)
    if isinstance(node, Lit):
        return node
    if isinstance(node, Field):
        return Field(substitute(node.base, env), node.path)
    if isinstance(node, ListExpr):
        return ListExpr(tuple(substitute(x, env) for x in node.items))
    if isinstance(node, RecordExpr):
        return RecordExpr(tuple((k, substitute(v, env)) for k, v in node.fields))
    if isinstance(node, Call):
        return Call(node.tool, tuple(substitute(a, env) for a in node.args))
    if isinstance(node, Helper):
        func = node.func
        if func is not None:
            inner = {k: v for k, v in env.items() if k != func.var}
            func = Lambda(func.var, substitute(func.body, inner))
        return Helper(node.fn, substitute(node.coll, env), func)
    if isinstance(node, Arith):
        return Arith(node.op, substitute(node.lhs, env), substitute(node.rhs, env))
    if isinstance(node, Compare):
        return Compare(node.op, substitute(node.lhs, env), substitute(node.rhs, env))
    if isinstance(node, BoolOp):
        return BoolOp(node.op, tuple(substitute(t, env) for t in node.terms))
    if isinstance(node, Membership):
        return Membership(substitute(node.item, env), substitute(node.coll, env))
    if isinstance(node, IsNone):
        return IsNone(substitute(node.expr, env), node.negated)
    raise TypeError(f"unknown node {type(node).__name__}")


def value_to_expr(v: Value) -> Expr:
    """Literal expression denoting a concrete value (for literal call keys)."""
    if isinstance(v, list):
        return ListExpr(tuple(value_to_expr(x) for x in v))
    if isinstance(v, dict):
        return RecordExpr(tuple((k, value_to_expr(v[k])) for k in sorted(v)))
    return Lit(v)


TRUE = Lit(True)


def conjoin(preds: list[Pred]) -> Pred:
    if not preds:
        return TRUE
    if len(preds) == 1:
        return preds[0]
    return BoolOp("and", tuple(preds))


def conjuncts(pred: Pred) -> list[Pred]:
    """Split a predicate at top-level 'and' into its conjuncts."""
    if isinstance(pred, BoolOp) and pred.op == "and":
        out: list[Pred] = []
        for t in pred.terms:
            out.extend(conjuncts(t))
        return out
    return [pred]
