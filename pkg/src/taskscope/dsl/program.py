"""Task-program syntax tree: the single ``run`` function of the restricted DSL."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Union

from ..symexpr import Call, Expr, Pred, tool_calls


@dataclass(frozen=True)
class Assignment:
    name: str
    expr: Expr
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class ToolCallStmt:
    """Bare tool call in statement position (result discarded)."""

    call: Call
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class UnknownCallStmt:
    """Statement call to a non-tool (print, output, ...).

    Only produced by lenient parsing; dead-code elimination removes these,
    and strict validation rejects any survivor.
    """

    target: str
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Pass:
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Conditional:
    guard: Pred
    body: tuple["Stmt", ...]
    line: int = field(default=0, compare=False)


Stmt = Union[Assignment, ToolCallStmt, UnknownCallStmt, Conditional, Pass]


@dataclass(frozen=True)
class TaskProgram:
    params: tuple[str, ...]
    body: tuple[Stmt, ...]

    name: str = "run"

    def statements(self) -> Iterator[tuple[Stmt, tuple[Pred, ...]]]:
        """All statements in program order with their enclosing guard stack."""

        def walk(stmts: tuple[Stmt, ...], guards: tuple[Pred, ...]) -> Iterator[tuple[Stmt, tuple[Pred, ...]]]:
            for st in stmts:
                yield st, guards
                if isinstance(st, Conditional):
                    yield from walk(st.body, guards + (st.guard,))

        yield from walk(self.body, ())

    def call_sites(self) -> list["CallSite"]:
        """Tool invocations in program order with per-tool ordinals."""
        sites: list[CallSite] = []
        counts: dict[str, int] = {}
        position = 0
        for st, guards in self.statements():
            position += 1
            if isinstance(st, Assignment):
                expr, binds = st.expr, st.name
            elif isinstance(st, ToolCallStmt):
                expr, binds = st.call, None
            else:
                continue
            for call in tool_calls(expr):
                ordinal = counts.get(call.tool, 0) + 1
                counts[call.tool] = ordinal
                sites.append(CallSite(call, ordinal, position, guards, binds, st.line))
        return sites


@dataclass(frozen=True)
class CallSite:
    call: Call
    ordinal: int
    position: int  # 1-based statement index in program order
    guards: tuple[Pred, ...]
    binds: str | None  # name assigned by the enclosing statement, if any
    line: int = field(default=0, compare=False)
