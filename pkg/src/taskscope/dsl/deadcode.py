"""Dead-code elimination over parsed task programs.

Removes, to a fixed point:

* statement-position calls to non-tool functions (print/output/...),
* assignments whose names are never read and whose right side contains no
  tool call (tool calls have effects and are never removed, used or not),
* conditionals whose bodies become empty.

An emptied program body becomes ``[pass]``, the same shape as the
conservative fallback program.
"""

from __future__ import annotations

from ..environment.registry import ToolRegistry
from ..symexpr import free_names, tool_calls
from .program import Assignment, Conditional, Pass, Stmt, TaskProgram, ToolCallStmt, UnknownCallStmt


def _live_names(stmts: tuple[Stmt, ...]) -> set[str]:
    """Names read anywhere by the surviving statements (guards included)."""
    live: set[str] = set()
    for st in stmts:
        if isinstance(st, Assignment):
            live.update(free_names(st.expr))
        elif isinstance(st, ToolCallStmt):
            live.update(free_names(st.call))
        elif isinstance(st, Conditional):
            live.update(free_names(st.guard))
            live.update(_live_names(st.body))
    return live


def _sweep(stmts: tuple[Stmt, ...], live: set[str], keep_pass: bool) -> tuple[Stmt, ...]:
    out: list[Stmt] = []
    for st in stmts:
        if isinstance(st, UnknownCallStmt):
            continue
        if isinstance(st, Assignment):
            if st.name not in live and not tool_calls(st.expr):
                continue
            out.append(st)
        elif isinstance(st, Conditional):
            body = _sweep(st.body, live, keep_pass=False)
            if not body:
                continue
            out.append(Conditional(st.guard, body, st.line))
        elif isinstance(st, Pass):
            if keep_pass:
                out.append(st)
        else:
            out.append(st)
    return tuple(out)


def eliminate_dead_code(program: TaskProgram, registry: ToolRegistry) -> TaskProgram:
    body = program.body
    while True:
        live = _live_names(body)
        swept = _sweep(body, live, keep_pass=True)
        if swept == body:
            break
        body = swept
    if not body:
        body = (Pass(),)
    return TaskProgram(params=program.params, body=body)
