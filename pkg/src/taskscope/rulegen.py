"""Compile slices into the runtime enforcement rule structure.

Each slice becomes one call key ``(tool, ordinal)`` holding:

* one operand expression per argument position (a literal ``None`` position
  is still enforced — the concrete argument must be Null),
* the guard: conjunction of the slice's assert clauses (``True`` if none),
* the let definitions backing those expressions, kept for display,
* the services whose tool outputs the expressions reference.

The reported rule count per key is the number of non-Null operand positions
plus one for a non-trivial guard — the figure run reports aggregate.

Rule sets serialize to a stable per-(task, service) artifact so enforcement
never re-derives anything at call time.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Iterable, Mapping

from .interchange import dumps_canonical
from .slicer import LetClause, Slice
from .symexpr import (
    Call,
    Expr,
    Lit,
    Pred,
    TRUE,
    canonical_key,
    conjoin,
    parse_key,
    parse_key_expr,
    tool_calls,
)


class DuplicateKey(RuntimeError):
    """Two slices claimed the same (tool, ordinal): internal bug."""


@dataclass(frozen=True, order=True)
class CallKey:
    tool: str
    ordinal: int

    def __str__(self) -> str:
        return f"{self.tool}#{self.ordinal}"


def _is_null(expr: Expr) -> bool:
    return isinstance(expr, Lit) and expr.value is None


@dataclass(frozen=True)
class CompiledCall:
    key: CallKey
    args: tuple[Expr, ...]          # fully inlined operand expressions
    guard: Pred                     # fully inlined conjunction
    lets: tuple[LetClause, ...]     # display form (names intact)
    named_args: tuple[Expr, ...]    # display form
    named_guard: Pred
    deps: frozenset[str]            # services referenced by args/guard

    @property
    def rule_count(self) -> int:
        count = sum(1 for a in self.args if not _is_null(a))
        if self.guard != TRUE:
            count += 1
        return count

    def call_key_text(self) -> str:
        """Canonical envelope key for this call's result."""
        return canonical_key(Call(self.key.tool, self.args))


@dataclass(frozen=True)
class RuleSet:
    calls: tuple[CompiledCall, ...]

    @property
    def allowed_calls(self) -> frozenset[str]:
        return frozenset(c.key.tool for c in self.calls)

    def candidates(self, tool: str) -> list[CompiledCall]:
        return sorted((c for c in self.calls if c.key.tool == tool), key=lambda c: c.key.ordinal)

    def by_key(self, key: CallKey) -> CompiledCall | None:
        for c in self.calls:
            if c.key == key:
                return c
        return None

    @property
    def arg_exprs(self) -> Mapping[CallKey, tuple[Expr, ...]]:
        return {c.key: c.args for c in self.calls}

    @property
    def guards(self) -> Mapping[CallKey, Pred]:
        return {c.key: c.guard for c in self.calls}

    @property
    def cross_service_deps(self) -> Mapping[CallKey, frozenset[str]]:
        return {c.key: c.deps for c in self.calls}

    @property
    def rule_count(self) -> int:
        return sum(c.rule_count for c in self.calls)

    def rule_counts(self) -> dict[CallKey, int]:
        return {c.key: c.rule_count for c in self.calls}


def compile_rules(slices: Iterable[Slice]) -> RuleSet:
    calls: list[CompiledCall] = []
    seen: set[CallKey] = set()
    for s in slices:
        key = CallKey(s.tool, s.ordinal)
        if key in seen:
            raise DuplicateKey(str(key))
        seen.add(key)
        inline_args = s.inline_args()
        guard = conjoin(list(s.inline_guard_conjuncts()))
        deps = frozenset(
            call.service
            for expr in (*inline_args, guard)
            for call in tool_calls(expr)
        )
        calls.append(CompiledCall(
            key=key,
            args=inline_args,
            guard=guard,
            lets=s.lets,
            named_args=s.args,
            named_guard=conjoin([a.pred for a in s.asserts]),
            deps=deps,
        ))
    return RuleSet(tuple(calls))


# -- artifact serialization -------------------------------------------------

def ruleset_to_artifact(rules: RuleSet, task_id: str, service: str, program_hash: str) -> dict:
    keys = []
    for c in rules.calls:
        keys.append({
            "tool": c.key.tool,
            "ordinal": c.key.ordinal,
            "args": [None if _is_null(a) else canonical_key(a) for a in c.args],
            "guard": canonical_key(c.guard),
            "lets": {lc.name: canonical_key(lc.expr) for lc in c.lets},
            "deps": sorted(c.deps),
            "rule_count": c.rule_count,
        })
    return {"task_id": task_id, "service": service, "program_hash": program_hash, "keys": keys}


def ruleset_from_artifact(doc: dict) -> RuleSet:
    calls = []
    for entry in doc["keys"]:
        args = tuple(Lit(None) if a is None else parse_key_expr(a) for a in entry["args"])
        guard = parse_key(entry["guard"])
        lets = tuple(LetClause(name, parse_key_expr(text)) for name, text in entry["lets"].items())
        deps = frozenset(entry["deps"])
        calls.append(CompiledCall(
            key=CallKey(entry["tool"], entry["ordinal"]),
            args=args,
            guard=guard,
            lets=lets,
            named_args=args,
            named_guard=guard,
            deps=deps,
        ))
    return RuleSet(tuple(calls))


def artifact_hash(doc: dict) -> str:
    return hashlib.sha256(dumps_canonical(doc).encode("utf-8")).hexdigest()
