"""Slicer vs an independent naive backward-reachability oracle."""

import random

from taskscope.dsl import parse_program
from taskscope.slicer import derive_slices
from taskscope.symexpr import pretty
from tests.oracles import ORACLE_REGISTRY, naive_backward_slice, random_program_source


def check_program(source: str) -> None:
    program = parse_program(source, ORACLE_REGISTRY)
    assert not isinstance(program, list), f"{[str(v) for v in program]}\n{source}"
    slices = derive_slices(program)
    expected = naive_backward_slice(program)
    assert len(slices) == len(expected), source
    for s, (tool, lets, asserts) in zip(slices, expected):
        assert s.tool == tool, source
        got_lets = sorted((c.position, c.name) for c in s.lets)
        assert got_lets == lets, f"{s.tool}: lets {got_lets} != {lets}\n{source}"
        got_asserts = [pretty(a.pred) for a in s.asserts]
        assert got_asserts == asserts, f"{s.tool}: asserts differ\n{source}"


def test_oracle_agreement_500_random_programs():
    rng = random.Random(20260810)
    for _ in range(500):
        check_program(random_program_source(rng))


def test_random_programs_round_trip_through_rendering():
    from taskscope.dsl import render_program

    rng = random.Random(7)
    for _ in range(200):
        source = random_program_source(rng)
        program = parse_program(source, ORACLE_REGISTRY)
        assert not isinstance(program, list), source
        again = parse_program(render_program(program), ORACLE_REGISTRY)
        assert again == program, source


def test_oracle_agreement_on_fixture_style_program():
    source = (
        "def run():\n"
        "    r1 = svcA.read()\n"
        "    v2 = r1.x + 3\n"
        "    if v2 > 2 and r1.y < 9:\n"
        "        svcB.act(v2, 1)\n"
        "    svcB.log(r1.y)\n"
    )
    check_program(source)
