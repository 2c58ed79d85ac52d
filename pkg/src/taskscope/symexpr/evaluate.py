"""Pure evaluation of symbolic expressions over concrete bindings.

Tool-call subterms are never executed here: a call node resolves by looking
up its canonical key in ``calls`` (the enforcer fills that map from verified
envelopes, the agent from its own result cache).  Arguments of a resolved
call are part of its key and are not evaluated separately.

Null discipline: field access on Null yields Null, ordered comparisons with
Null are false, Null equals only Null — so predicates over Null-bearing
elements never abort.
"""

from __future__ import annotations

from typing import Mapping

from ..values import (
    EvalError,
    Value,
    arith,
    contains,
    truthy,
    type_mismatch,
    values_equal,
    values_ordered,
)
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
from .render import canonical_key


def unbound_symbol(key: str) -> EvalError:
    err = EvalError("unbound-symbol", key)
    err.key = key  # type: ignore[attr-defined]
    return err


def evaluate(node: Pred, calls: Mapping[str, Value], names: Mapping[str, Value] | None = None) -> Value:
    env: dict[str, Value] = dict(names or {})

    def ev(n: Pred, local: Mapping[str, Value]) -> Value:
        if isinstance(n, Lit):
            return n.value
        if isinstance(n, Name):
            if n.ident in local:
                return local[n.ident]
            raise EvalError("unbound-name", n.ident)
        if isinstance(n, Field):
            v = ev(n.base, local)
            for seg in n.path:
                if v is None:
                    return None
                if isinstance(seg, int):
                    if not isinstance(v, list):
                        raise type_mismatch(f"index [{seg}] on {type(v).__name__}")
                    if seg >= len(v):
                        return None
                    v = v[seg]
                else:
                    if not isinstance(v, dict):
                        raise type_mismatch(f"field .{seg} on {type(v).__name__}")
                    if seg not in v:
                        raise type_mismatch(f"no field .{seg}")
                    v = v[seg]
            return v
        if isinstance(n, ListExpr):
            return [ev(x, local) for x in n.items]
        if isinstance(n, RecordExpr):
            return {k: ev(v, local) for k, v in n.fields}
        if isinstance(n, Call):
            key = canonical_key(n)
            if key in calls:
                return calls[key]
            raise unbound_symbol(key)
        if isinstance(n, Helper):
            return ev_helper(n, local)
        if isinstance(n, Arith):
            return arith(n.op, ev(n.lhs, local), ev(n.rhs, local))
        if isinstance(n, Compare):
            a, b = ev(n.lhs, local), ev(n.rhs, local)
            if n.op == "==":
                return values_equal(a, b)
            if n.op == "!=":
                return not values_equal(a, b)
            return values_ordered(n.op, a, b)
        if isinstance(n, BoolOp):
            if n.op == "and":
                return all(truthy(ev(t, local)) for t in n.terms)
            return any(truthy(ev(t, local)) for t in n.terms)
        if isinstance(n, Membership):
            return contains(ev(n.item, local), ev(n.coll, local))
        if isinstance(n, IsNone):
            is_none = ev(n.expr, local) is None
            return not is_none if n.negated else is_none
        raise type_mismatch(f"cannot evaluate {type(n).__name__}")

    def ev_helper(n: Helper, local: Mapping[str, Value]) -> Value:
        coll = ev(n.coll, local)
        if n.fn == "len":
            if isinstance(coll, (str, list)):
                return len(coll)
            raise type_mismatch(f"len of {type(coll).__name__}")
        if not isinstance(coll, list):
            if coll is None:
                return None
            raise type_mismatch(f"{n.fn} needs a list, got {type(coll).__name__}")
        assert n.func is not None
        var, body = n.func.var, n.func.body

        def apply(elem: Value) -> Value:
            inner = dict(local)
            inner[var] = elem
            return ev(body, inner)

        if n.fn in ("min", "max"):
            best: Value = None
            best_key: Value = None
            op = "<" if n.fn == "min" else ">"
            for elem in coll:
                k = apply(elem)
                if k is None:
                    continue  # Null sort keys never win
                if best_key is None or values_ordered(op, k, best_key):
                    best, best_key = elem, k
            return best
        if n.fn == "first":
            for elem in coll:
                if truthy(apply(elem)):
                    return elem
            return None
        if n.fn == "last":
            found: Value = None
            for elem in coll:
                if truthy(apply(elem)):
                    found = elem
            return found
        raise type_mismatch(f"unknown helper {n.fn}")

    return ev(node, env)


def evaluate_predicate(node: Pred, calls: Mapping[str, Value], names: Mapping[str, Value] | None = None) -> bool:
    return truthy(evaluate(node, calls, names))
