"""Canonical rendering of task programs.

The layout is fixed (4-space body indent, 8 spaces inside conditionals,
double-quoted strings), so structurally identical programs render to
identical bytes; program hashes and cross-service divergence checks build
on this.
"""

from __future__ import annotations

import hashlib

from ..symexpr import pretty
from .program import Assignment, Conditional, Pass, Stmt, TaskProgram, ToolCallStmt, UnknownCallStmt


def render_stmt(st: Stmt, indent: str) -> list[str]:
    if isinstance(st, Assignment):
        return [f"{indent}{st.name} = {pretty(st.expr)}"]
    if isinstance(st, ToolCallStmt):
        return [f"{indent}{pretty(st.call)}"]
    if isinstance(st, UnknownCallStmt):
        return [f"{indent}{st.target}()"]
    if isinstance(st, Pass):
        return [f"{indent}pass"]
    if isinstance(st, Conditional):
        lines = [f"{indent}if {pretty(st.guard)}:"]
        for inner in st.body:
            lines.extend(render_stmt(inner, indent + "    "))
        return lines
    raise TypeError(f"cannot render {type(st).__name__}")


def render_program(program: TaskProgram) -> str:
    header = f"def run({', '.join(program.params)}):"
    lines = [header]
    for st in program.body:
        lines.extend(render_stmt(st, "    "))
    return "\n".join(lines) + "\n"


def program_hash(program: TaskProgram) -> str:
    return hashlib.sha256(render_program(program).encode("utf-8")).hexdigest()
