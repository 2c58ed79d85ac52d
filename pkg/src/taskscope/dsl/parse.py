"""Parsing and validation of restricted-DSL task programs.

The DSL is a strict subset of Python (one ``run`` function; assignments,
bare tool calls, single-level conditionals, ``pass``; no loops of any kind),
so parsing runs Python's own tokenizer and ``ast`` and then validates the
tree against the grammar, collecting *all* violations rather than stopping
at the first.

``parse_program`` is strict: on success the returned program satisfies every
structural invariant, including "every call target is a registered tool or
helper".  The code-generation pipeline instead uses ``parse_lenient``, which
keeps statement-position calls to unknown functions (``print(...)`` and the
like) as removable nodes for dead-code elimination to drop.
"""

from __future__ import annotations

import ast
import io
import tokenize
from dataclasses import dataclass

import re

from ..environment.registry import ToolRegistry
from ..symexpr import Call, Helper, Name, Pred, free_names
from ..symexpr.nodes import HELPERS, Arith, ListExpr
from ..symexpr.parse import POS_RHS, ExprReader
from .program import Assignment, Conditional, Pass, Stmt, TaskProgram, ToolCallStmt, UnknownCallStmt

FORBIDDEN_KEYWORDS = {
    "for": "loop-found",
    "while": "loop-found",
    "import": "import-found",
    "return": "return-found",
    "try": "exception-handling",
    "except": "exception-handling",
    "raise": "exception-handling",
    "with": "unsupported-syntax",
    "class": "unsupported-syntax",
    "yield": "unsupported-syntax",
    "global": "unsupported-syntax",
    "nonlocal": "unsupported-syntax",
    "del": "unsupported-syntax",
    "assert": "unsupported-syntax",
}

IMPLICIT_LOOP_BUILTINS = {"any", "all", "map", "filter", "sorted", "sum"}


@dataclass(frozen=True)
class Violation:
    code: str
    line: int
    column: int
    message: str

    def to_wire(self) -> dict:
        return {"code": self.code, "line": self.line, "column": self.column, "message": self.message}

    def __str__(self) -> str:
        return f"{self.line}:{self.column}: {self.code}: {self.message}"


class ProgramInvalid(ValueError):
    def __init__(self, violations: list[Violation]):
        super().__init__("; ".join(map(str, violations)))
        self.violations = violations


class _Parser:
    def __init__(self, source: str, registry: ToolRegistry, lenient: bool):
        self.source = source
        self.registry = registry
        self.lenient = lenient
        self.violations: list[Violation] = []
        self.reader = ExprReader(
            source=source,
            is_tool=lambda name: name in registry,
            strict_dsl=True,
            on_error=self._expr_error,
        )

    def report(self, code: str, line: int, col: int, message: str) -> None:
        self.violations.append(Violation(code, line, col, message))

    def _expr_error(self, node: ast.AST, code: str, message: str) -> None:
        self.report(code, getattr(node, "lineno", 0), getattr(node, "col_offset", 0), message)

    # -- token-level checks --------------------------------------------------

    def scan_tokens(self) -> None:
        try:
            tokens = list(tokenize.generate_tokens(io.StringIO(self.source).readline))
        except (tokenize.TokenError, IndentationError, SyntaxError, ValueError):
            return  # ast.parse will report the syntax error with a position
        fstring_prefix = re.compile(r"(?:[fF][rRbB]?|[rRbB][fF])['\"]")
        for tok in tokens:
            if tok.type == tokenize.COMMENT:
                self.report("comment-found", tok.start[0], tok.start[1], "comments are not allowed")
            elif tok.type == tokenize.NAME and tok.string in FORBIDDEN_KEYWORDS:
                self.report(FORBIDDEN_KEYWORDS[tok.string], tok.start[0], tok.start[1],
                            f"'{tok.string}' is not allowed")
            elif tok.type == tokenize.STRING and fstring_prefix.match(tok.string):
                self.report("f-string", tok.start[0], tok.start[1], "f-strings are not allowed")

    # -- statement conversion --------------------------------------------------

    def parse(self) -> TaskProgram | None:
        self.scan_tokens()
        try:
            module = ast.parse(self.source)
        except SyntaxError as exc:
            self.report("syntax-error", exc.lineno or 0, exc.offset or 0, exc.msg or "syntax error")
            return None
        except (ValueError, RecursionError) as exc:  # null bytes, pathological nesting
            self.report("syntax-error", 0, 0, str(exc) or type(exc).__name__)
            return None
        if len(module.body) != 1 or not isinstance(module.body[0], ast.FunctionDef):
            self.report("not-single-function", 1, 0, "source must define exactly one function")
            return None
        fn = module.body[0]
        if fn.name != "run":
            self.report("bad-function-name", fn.lineno, fn.col_offset, f"function must be named 'run', not '{fn.name}'")
        if fn.decorator_list:
            self.report("unsupported-syntax", fn.lineno, fn.col_offset, "decorators are not allowed")
        if fn.returns is not None or any(a.annotation for a in fn.args.args):
            self.report("type-hint-found", fn.lineno, fn.col_offset, "type hints are not allowed")
        a = fn.args
        if a.vararg or a.kwarg or a.kwonlyargs or a.defaults or a.posonlyargs:
            self.report("unsupported-syntax", fn.lineno, fn.col_offset, "only plain positional parameters")
        params = tuple(arg.arg for arg in a.args)
        body_nodes = list(fn.body)
        if (body_nodes and isinstance(body_nodes[0], ast.Expr)
                and isinstance(body_nodes[0].value, ast.Constant)
                and isinstance(body_nodes[0].value.value, str)):
            self.report("docstring-found", body_nodes[0].lineno, body_nodes[0].col_offset,
                        "docstrings are not allowed")
            body_nodes = body_nodes[1:]
        body = tuple(self.stmt(n, inside_if=False) for n in body_nodes)
        if not body:
            self.report("empty-body", fn.lineno, fn.col_offset, "function body must not be empty")
        program = TaskProgram(params=params, body=body)
        self.check_names(program)
        return program

    def stmt(self, node: ast.stmt, inside_if: bool) -> Stmt:
        line = node.lineno
        if isinstance(node, ast.Pass):
            return Pass(line)
        if isinstance(node, ast.Assign):
            if len(node.targets) != 1 or not isinstance(node.targets[0], ast.Name):
                self.report("unsupported-syntax", line, node.col_offset, "assignment target must be a single name")
                return Pass(line)
            target = node.targets[0].id
            if isinstance(node.value, ast.Call):
                unknown = self._unknown_call_target(node.value, line)
                if unknown is not None:
                    if self.lenient:
                        # whole statement is a non-tool call; the dead-code pass drops it
                        return UnknownCallStmt(unknown, line)
                    self.report("unknown-tool", line, node.col_offset,
                                f"'{unknown}' is not a registered tool or helper")
                    return Pass(line)
            expr = self.reader.expr(node.value, POS_RHS)
            return Assignment(target, expr, line)
        if isinstance(node, ast.AugAssign):
            self.report("unsupported-syntax", line, node.col_offset,
                        "augmented assignment; write x = x + [item] explicitly")
            return Pass(line)
        if isinstance(node, ast.AnnAssign):
            self.report("type-hint-found", line, node.col_offset, "type hints are not allowed")
            return Pass(line)
        if isinstance(node, ast.Expr):
            if isinstance(node.value, ast.Call):
                unknown = self._unknown_call_target(node.value, line)
                if unknown is not None:
                    if self.lenient:
                        return UnknownCallStmt(unknown, line)
                    self.report("unknown-tool", line, node.col_offset,
                                f"'{unknown}' is not a registered tool or helper")
                    return Pass(line)
                expr = self.reader.expr(node.value, POS_RHS)
                if isinstance(expr, Call):
                    return ToolCallStmt(expr, line)
                if isinstance(expr, Helper):
                    self.report("unknown-tool", line, node.col_offset,
                                "helper result must be assigned, not discarded")
                    return Pass(line)
                return Pass(line)  # reader already reported
            self.report("unsupported-syntax", line, node.col_offset, "expression statements must be tool calls")
            return Pass(line)
        if isinstance(node, ast.If):
            if node.orelse:
                self.report("else-found", line, node.col_offset, "else/elif blocks are not allowed")
            if inside_if:
                self.report("nested-if", line, node.col_offset, "conditionals must not nest")
            guard = self.reader.pred(node.test)
            body = tuple(self.stmt(n, inside_if=True) for n in node.body)
            return Conditional(guard, body, line)
        if isinstance(node, (ast.For, ast.AsyncFor, ast.While)):
            self.report("loop-found", line, node.col_offset, "loops are not allowed")
            return Pass(line)
        if isinstance(node, ast.Return):
            self.report("return-found", line, node.col_offset, "return statements are not allowed")
            return Pass(line)
        if isinstance(node, (ast.Import, ast.ImportFrom)):
            self.report("import-found", line, node.col_offset, "imports are not allowed")
            return Pass(line)
        self.report("unsupported-syntax", line, node.col_offset, f"{type(node).__name__} is not in the grammar")
        return Pass(line)

    def _unknown_call_target(self, node: ast.Call, line: int) -> str | None:
        """Bare-name call that is neither a helper nor a registered tool."""
        if isinstance(node.func, ast.Name):
            name = node.func.id
            if name in IMPLICIT_LOOP_BUILTINS:
                self.report("implicit-loop", line, node.col_offset,
                            f"'{name}' contains an implicit loop; use first()/min()/max() patterns")
                return None
            if name not in HELPERS and name not in self.registry:
                return name
        return None

    # -- semantic checks --------------------------------------------------

    def check_names(self, program: TaskProgram) -> None:
        defined: set[str] = set(program.params)

        def is_accumulation(st: Assignment) -> bool:
            # x = x + [item]
            e = st.expr
            return (isinstance(e, Arith) and e.op == "+"
                    and isinstance(e.lhs, Name) and e.lhs.ident == st.name
                    and isinstance(e.rhs, ListExpr))

        def check_refs(pred: Pred, line: int) -> None:
            for ident in free_names(pred):
                if ident not in defined:
                    self.report("undefined-name", line, 0, f"'{ident}' is not defined before use")

        def walk(stmts: tuple[Stmt, ...], region: set[str]) -> None:
            for st in stmts:
                if isinstance(st, Assignment):
                    check_refs(st.expr, st.line)
                    if st.name in region and not is_accumulation(st):
                        self.report("assign-duplicate", st.line, 0,
                                    f"'{st.name}' is assigned twice in one region")
                    region.add(st.name)
                    defined.add(st.name)
                elif isinstance(st, ToolCallStmt):
                    check_refs(st.call, st.line)
                elif isinstance(st, Conditional):
                    check_refs(st.guard, st.line)
                    walk(st.body, set())
            return

        walk(program.body, set())

        # arity against the registry
        for site in program.call_sites():
            if site.call.tool.startswith("?unknown."):
                continue
            spec = self.registry.get(site.call.tool)
            if spec is None:
                continue  # already reported as unknown-tool
            if len(site.call.args) != len(spec.params):
                self.report("arity-mismatch", site.line, 0,
                            f"{site.call.tool} takes {len(spec.params)} argument(s), got {len(site.call.args)}"
                            " (pass None for unused optional parameters)")


def parse_program(source: str, registry: ToolRegistry) -> TaskProgram | list[Violation]:
    """Strict parse: a valid TaskProgram, or every violation found."""
    parser = _Parser(source, registry, lenient=False)
    program = parser.parse()
    if parser.violations:
        return _dedup(parser.violations)
    assert program is not None
    return program


def parse_lenient(source: str, registry: ToolRegistry) -> tuple[TaskProgram | None, list[Violation]]:
    """Parse keeping removable unknown-call statements; for the codegen pipeline."""
    parser = _Parser(source, registry, lenient=True)
    program = parser.parse()
    return program, _dedup(parser.violations)


def validate(program: TaskProgram, registry: ToolRegistry) -> list[Violation]:
    """Re-validate a (possibly transformed) program, strictly."""
    from .render import render_program

    result = parse_program(render_program(program), registry)
    return result if isinstance(result, list) else []


def _dedup(violations: list[Violation]) -> list[Violation]:
    # token scan and tree walk can both flag the same construct on one line
    seen: set[tuple] = set()
    out = []
    for v in violations:
        key = (v.code, v.line)
        if key not in seen:
            seen.add(key)
            out.append(v)
    return out
