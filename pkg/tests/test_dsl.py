import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from taskscope.dsl import (
    Assignment,
    Conditional,
    Pass,
    TaskProgram,
    ToolCallStmt,
    eliminate_dead_code,
    parse_lenient,
    parse_program,
    render_program,
)
from taskscope.symexpr import tool_calls
from tests.conftest import AURORA_SOURCE, BANKING_SOURCE


class TestParseProgram:
    def test_shopping_walkthrough_shape(self, shop_registry):
        program = parse_program(AURORA_SOURCE, shop_registry)
        assert isinstance(program, TaskProgram)
        assert len(program.body) == 2
        details, cond = program.body
        assert isinstance(details, Assignment) and details.name == "details"
        assert isinstance(cond, Conditional) and len(cond.body) == 3
        tools = [s.call.tool for s in cond.body if isinstance(s, ToolCallStmt)]
        assert tools == ["shop.add_to_cart", "bank.send_money"]

    def test_lone_pass_is_valid(self, registry):
        program = parse_program("def run():\n    pass\n", registry)
        assert isinstance(program, TaskProgram)
        assert program.body == (Pass(),)

    def test_loop_keyword_rejected(self, registry):
        out = parse_program("def run():\n    for m in msgs:\n        pass\n", registry)
        assert isinstance(out, list)
        assert any(v.code == "loop-found" for v in out)

    @pytest.mark.parametrize("source,code", [
        ("def run():\n    import os\n", "import-found"),
        ("def run():\n    x = f\"hi\"\n", "f-string"),
        ("def run():\n    # note\n    pass\n", "comment-found"),
        ("def run():\n    return 1\n", "return-found"),
        ("def run():\n    while True:\n        pass\n", "loop-found"),
        ("def run():\n    x = [i for i in y]\n", "loop-found"),
        ("def run():\n    x = any(y)\n", "implicit-loop"),
        ("def walk():\n    pass\n", "bad-function-name"),
        ("def run():\n    if a > 1:\n        if b > 2:\n            pass\n", "nested-if"),
        ("def run():\n    if a > 1:\n        pass\n    else:\n        pass\n", "else-found"),
        ("def run():\n    unknown_tool(1)\n", "unknown-tool"),
        ("def run():\n    bank.get_iban(5)\n", "arity-mismatch"),
        ("def run():\n    x = bank.get_iban().upper\n", "chained-call"),
        ("def run():\n    x = first(bank.get_scheduled_transactions(), predicate=lambda s: True)\n",
         "embedded-call"),
        ("def run():\n    bank.send_money(bank.get_iban(), 1, \"s\", \"d\")\n", "embedded-call"),
        ("def run():\n    x: int = 1\n", "type-hint-found"),
        ("def run():\n    '''doc'''\n    pass\n", "docstring-found"),
        ("def run():\n    x = 1\n    x = 2\n", "assign-duplicate"),
        ("def run():\n    bank.send_money(y, 1, \"s\", \"d\")\n", "undefined-name"),
        ("def run(:\n", "syntax-error"),
    ])
    def test_violation_catalog(self, registry, source, code):
        out = parse_program(source, registry)
        assert isinstance(out, list), f"expected violations for {code}"
        assert any(v.code == code for v in out), f"{code} not in {[v.code for v in out]}"

    def test_all_violations_reported_not_just_first(self, registry):
        source = "def run():\n    import os\n    x = f\"hi\"\n    unknowable(1)\n"
        out = parse_program(source, registry)
        codes = {v.code for v in out}
        assert {"import-found", "f-string", "unknown-tool"} <= codes

    def test_both_quote_styles_accepted(self, registry):
        single = "def run():\n    bank.send_money('DE89', 10, 'Refund', '2026-01-29')\n"
        double = 'def run():\n    bank.send_money("DE89", 10, "Refund", "2026-01-29")\n'
        a = parse_program(single, registry)
        b = parse_program(double, registry)
        assert isinstance(a, TaskProgram) and a == b
        assert '"DE89"' in render_program(a)

    def test_accumulation_reassignment_allowed(self, registry):
        source = (
            "def run():\n"
            "    filtered = []\n"
            "    items = bank.get_scheduled_transactions()\n"
            "    if len(items) > 0:\n"
            "        filtered = filtered + [items[0].recipient]\n"
        )
        program = parse_program(source, registry)
        assert isinstance(program, TaskProgram)

    def test_optional_params_require_positional_none(self, registry):
        short = "def run():\n    bank.update_scheduled_transaction(3, \"DE44\", 1500)\n"
        out = parse_program(short, registry)
        assert any(v.code == "arity-mismatch" for v in out)

    def test_banking_listing_parses(self, registry):
        program = parse_program(BANKING_SOURCE, registry)
        assert isinstance(program, TaskProgram)
        assert len(program.call_sites()) == 6


class TestRoundTrip:
    def test_render_parse_is_identity(self, shop_registry, aurora_program):
        rendered = render_program(aurora_program)
        assert parse_program(rendered, shop_registry) == aurora_program

    def test_parse_is_deterministic(self, shop_registry):
        a = parse_program(AURORA_SOURCE, shop_registry)
        b = parse_program(AURORA_SOURCE, shop_registry)
        assert render_program(a) == render_program(b)

    def test_banking_round_trip(self, registry, banking_program):
        rendered = render_program(banking_program)
        assert parse_program(rendered, registry) == banking_program


_TOKENS = [
    "def", "run", "(", ")", ":", "\n", "    ", "pass", "if", "and", "or",
    "x", "y", "=", "+", "*", "shop.add_to_cart", "bank.get_iban", "min", "first",
    "lambda", "1", "2.5", '"s"', ",", "[", "]", ".", ">", "==", "None", "is", "not",
    "for", "while", "import", "@", "#", "\t", "'t'", "f\"x\"",
]


class TestGrammarFuzz:
    @settings(max_examples=400, deadline=None)
    @given(st.lists(st.sampled_from(_TOKENS), min_size=0, max_size=40), st.randoms())
    def test_random_token_soup_never_crashes(self, registry, tokens, rng):
        source = "".join(t if rng.random() < 0.7 else t + " " for t in tokens)
        out = parse_program(source, registry)
        assert isinstance(out, (TaskProgram, list))

    @settings(max_examples=100, deadline=None)
    @given(st.text(max_size=120))
    def test_arbitrary_text_never_crashes(self, registry, source):
        out = parse_program(source, registry)
        assert isinstance(out, (TaskProgram, list))


class TestDeadCode:
    def test_trailing_print_removed(self, shop_registry):
        source = AURORA_SOURCE + "    print(cart.total)\n"
        program, violations = parse_lenient(source, shop_registry)
        assert not violations
        cleaned = eliminate_dead_code(program, shop_registry)
        assert "print" not in render_program(cleaned)
        assert len(cleaned.body) == 2

    def test_fixed_point_on_clean_program(self, shop_registry, aurora_program):
        assert eliminate_dead_code(aurora_program, shop_registry) == aurora_program

    def test_idempotent(self, shop_registry):
        source = AURORA_SOURCE + "    output(cart)\n    x = 1\n"
        program, _ = parse_lenient(source, shop_registry)
        once = eliminate_dead_code(program, shop_registry)
        assert eliminate_dead_code(once, shop_registry) == once

    def test_unused_tool_call_assignment_survives(self, registry):
        source = "def run():\n    iban = bank.get_iban()\n"
        program = parse_program(source, registry)
        cleaned = eliminate_dead_code(program, registry)
        assert cleaned == program

    def test_everything_dead_leaves_pass(self, registry):
        source = "def run():\n    x = 1\n    y = x + 1\n"
        program, _ = parse_lenient(source, registry)
        cleaned = eliminate_dead_code(program, registry)
        assert cleaned.body == (Pass(),)

    def test_matches_naive_liveness_oracle(self, registry):
        # random straight-line programs; oracle = iterative mark-and-sweep
        rng = random.Random(42)
        names = ["a", "b", "c", "d", "e"]
        for _ in range(200):
            lines = ["def run():"]
            defined: list[str] = []
            n = rng.randrange(1, 9)
            for i in range(n):
                kind = rng.random()
                if kind < 0.35 or not defined:
                    name = names[len(defined) % len(names)] + str(len(defined))
                    lines.append(f"    {name} = {rng.randrange(10)}")
                    defined.append(name)
                elif kind < 0.6:
                    name = names[len(defined) % len(names)] + str(len(defined))
                    src = rng.choice(defined)
                    lines.append(f"    {name} = {src} + {rng.randrange(5)}")
                    defined.append(name)
                elif kind < 0.8:
                    name = names[len(defined) % len(names)] + str(len(defined))
                    lines.append(f"    {name} = bank.get_iban()")
                    defined.append(name)
                else:
                    arg = rng.choice(defined) if defined and rng.random() < 0.5 else rng.randrange(5)
                    lines.append(f"    bank.get_most_recent_transactions({arg})")
            source = "\n".join(lines) + "\n"
            program, violations = parse_lenient(source, registry)
            if violations or program is None:
                continue
            cleaned = eliminate_dead_code(program, registry)

            # oracle: keep tool-call statements; keep assignments read by kept
            # statements (transitively) or containing tool calls
            kept_oracle = _liveness_oracle(program)
            kept_impl = [st for st in cleaned.body if not isinstance(st, Pass)]
            assert [render_stmt_flat(s) for s in kept_impl] == kept_oracle, source


def render_stmt_flat(st):
    from taskscope.dsl import render_stmt

    return render_stmt(st, "")[0]


def _liveness_oracle(program):
    body = list(program.body)
    kept = [False] * len(body)
    for i, st in enumerate(body):
        if isinstance(st, ToolCallStmt):
            kept[i] = True
        elif isinstance(st, Assignment) and tool_calls(st.expr):
            kept[i] = True
    changed = True
    while changed:
        changed = False
        from taskscope.symexpr import free_names

        needed: set[str] = set()
        for i, st in enumerate(body):
            if not kept[i]:
                continue
            if isinstance(st, Assignment):
                needed.update(free_names(st.expr))
            elif isinstance(st, ToolCallStmt):
                needed.update(free_names(st.call))
        for i, st in enumerate(body):
            if kept[i] or not isinstance(st, Assignment):
                continue
            if st.name in needed:
                kept[i] = True
                changed = True
    return [render_stmt_flat(st) for i, st in enumerate(body) if kept[i]]
