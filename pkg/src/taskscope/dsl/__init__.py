"""Restricted task DSL: parse, validate, normalize, render."""

from .deadcode import eliminate_dead_code
from .parse import ProgramInvalid, Violation, parse_lenient, parse_program, validate
from .program import (
    Assignment,
    CallSite,
    Conditional,
    Pass,
    Stmt,
    TaskProgram,
    ToolCallStmt,
    UnknownCallStmt,
)
from .render import program_hash, render_program, render_stmt

FALLBACK_SOURCE = "def run():\n    pass\n"


def fallback_program() -> TaskProgram:
    """The conservative no-op program: performs no tool calls, so nothing is allowed."""
    return TaskProgram(params=(), body=(Pass(),))


__all__ = [
    "Assignment",
    "CallSite",
    "Conditional",
    "FALLBACK_SOURCE",
    "Pass",
    "ProgramInvalid",
    "Stmt",
    "TaskProgram",
    "ToolCallStmt",
    "UnknownCallStmt",
    "Violation",
    "eliminate_dead_code",
    "fallback_program",
    "parse_lenient",
    "parse_program",
    "program_hash",
    "render_program",
    "render_stmt",
    "validate",
]
