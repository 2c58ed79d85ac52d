"""Per-invocation slices: backward dependency closure plus path conditions.

One slice per tool-call site, in program order.  A slice carries, in the
original program order:

* ``let`` clauses — the assignments in the dependency closure of the target
  call's arguments and guards (and nothing else; independent statements and
  tool calls whose outputs the target never reads are absent),
* ``assert`` clauses — the guards of the conditionals *enclosing* the target
  invocation, outermost first, split at top-level ``and`` into conjuncts,
* the target call with symbolic operand expressions.

Names in clauses refer to earlier lets; ``inline_*`` produce the closed
forms used for rule keys and envelope lookups.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

from .dsl.program import Assignment, Conditional, Stmt, TaskProgram, ToolCallStmt
from .symexpr import (
    Call,
    Expr,
    Pred,
    conjuncts,
    free_names,
    pretty,
    substitute,
    tool_calls,
)
from .symexpr.parse import KeyParseError, parse_key, parse_key_expr


class UnresolvableName(RuntimeError):
    """A referenced name has no defining statement: internal bug, not user error."""


@dataclass(frozen=True)
class LetClause:
    name: str
    expr: Expr
    position: int = field(default=0, compare=False)


@dataclass(frozen=True)
class AssertClause:
    pred: Pred
    position: int = field(default=0, compare=False)


Clause = Union[LetClause, AssertClause]


@dataclass(frozen=True)
class Slice:
    tool: str  # full dotted id
    ordinal: int
    clauses: tuple[Clause, ...]
    args: tuple[Expr, ...]

    @property
    def service(self) -> str:
        return self.tool.split(".", 1)[0]

    @property
    def lets(self) -> tuple[LetClause, ...]:
        return tuple(c for c in self.clauses if isinstance(c, LetClause))

    @property
    def asserts(self) -> tuple[AssertClause, ...]:
        return tuple(c for c in self.clauses if isinstance(c, AssertClause))

    def let_env(self) -> dict[str, Expr]:
        """name -> fully inlined definition, honoring sequential shadowing."""
        env: dict[str, Expr] = {}
        for c in self.lets:
            env[c.name] = substitute(c.expr, env)  # type: ignore[assignment]
        return env

    def inline_args(self) -> tuple[Expr, ...]:
        env = self.let_env()
        return tuple(substitute(a, env) for a in self.args)  # type: ignore[misc]

    def inline_guard_conjuncts(self) -> tuple[Pred, ...]:
        env = self.let_env()
        return tuple(substitute(a.pred, env) for a in self.asserts)

    def call_expr(self) -> Call:
        return Call(self.tool, self.args)

    def inline_call_expr(self) -> Call:
        return Call(self.tool, self.inline_args())


@dataclass(frozen=True)
class _Def:
    name: str
    position: int
    expr: Expr


def _index(prog: TaskProgram) -> tuple[list[_Def], list[tuple[Call, int, int, tuple[tuple[int, Pred], ...]]]]:
    """Definitions and call sites with positions and positioned guard stacks."""
    defs: list[_Def] = []
    sites: list[tuple[Call, int, int, tuple[tuple[int, Pred], ...]]] = []
    counts: dict[str, int] = {}
    pos = 0

    def walk(stmts: tuple[Stmt, ...], guards: tuple[tuple[int, Pred], ...]) -> None:
        nonlocal pos
        for st in stmts:
            pos += 1
            here = pos
            if isinstance(st, Assignment):
                for call in tool_calls(st.expr):
                    counts[call.tool] = counts.get(call.tool, 0) + 1
                    sites.append((call, counts[call.tool], here, guards))
                defs.append(_Def(st.name, here, st.expr))
            elif isinstance(st, ToolCallStmt):
                counts[st.call.tool] = counts.get(st.call.tool, 0) + 1
                sites.append((st.call, counts[st.call.tool], here, guards))
            elif isinstance(st, Conditional):
                walk(st.body, guards + ((here, st.guard),))
        return

    walk(prog.body, ())
    return defs, sites


def derive_slices(prog: TaskProgram) -> list[Slice]:
    defs, sites = _index(prog)
    params = set(prog.params)

    def resolve(name: str, before: int) -> _Def | None:
        found = None
        for d in defs:
            if d.name == name and d.position < before:
                found = d
        if found is None and name not in params:
            raise UnresolvableName(name)
        return found

    out: list[Slice] = []
    for call, ordinal, cpos, guards in sites:
        needed: dict[tuple[str, int], _Def] = {}

        def require(name: str, before: int) -> None:
            d = resolve(name, before)
            if d is None:
                return  # program parameter: stays free
            key = (d.name, d.position)
            if key in needed:
                return
            needed[key] = d
            for ident in free_names(d.expr):
                require(ident, d.position)

        for arg in call.args:
            for ident in free_names(arg):
                require(ident, cpos)
        for gpos, guard in guards:
            for ident in free_names(guard):
                require(ident, gpos)

        clauses: list[Clause] = [LetClause(d.name, d.expr, d.position) for d in needed.values()]
        for gpos, guard in guards:
            for part in conjuncts(guard):
                clauses.append(AssertClause(part, gpos))
        clauses.sort(key=lambda c: c.position)
        out.append(Slice(tool=call.tool, ordinal=ordinal, clauses=tuple(clauses), args=call.args))
    return out


def render_slice(slice_: Slice) -> str:
    lines: list[str] = []
    for c in slice_.clauses:
        if isinstance(c, LetClause):
            lines.append(f"let {c.name} = {pretty(c.expr)}")
        else:
            lines.append(f"assert {pretty(c.pred)}")
    lines.append(pretty(slice_.call_expr()))
    return "\n".join(lines) + "\n"


def parse_slice(text: str, ordinal: int = 1) -> Slice:
    """Inverse of render_slice (ordinal is context the text does not carry)."""
    clauses: list[Clause] = []
    lines = [ln for ln in (ln.strip() for ln in text.splitlines()) if ln]
    if not lines:
        raise KeyParseError("empty slice text")
    for i, line in enumerate(lines):
        last = i == len(lines) - 1
        if line.startswith("let "):
            name, _, rhs = line[4:].partition("=")
            if not _:
                raise KeyParseError(f"bad let clause: {line!r}")
            clauses.append(LetClause(name.strip(), parse_key_expr(rhs.strip())))
        elif line.startswith("assert "):
            clauses.append(AssertClause(parse_key(line[len("assert "):])))
        elif last:
            call = parse_key(line)
            if not isinstance(call, Call):
                raise KeyParseError(f"slice must end with a call, got {line!r}")
            return Slice(tool=call.tool, ordinal=ordinal, clauses=tuple(clauses), args=call.args)
        else:
            raise KeyParseError(f"unexpected slice line: {line!r}")
    raise KeyParseError("slice text has no target call line")
