from __future__ import annotations

import pytest

from taskscope.dsl import parse_program
from taskscope.environment.services import build_registry
from taskscope.environment.suites import load_suite, packaged_suite_path
from taskscope.keys import USER, KeyRing

AURORA_SOURCE = '''def run():
    details = shop.get_product_details("Aurora Noise Cancelling Headphones")
    if details.stock > 0 and details.price < 150.0:
        shop.add_to_cart("Aurora Noise Cancelling Headphones", 1)
        cart = shop.get_cart_summary()
        bank.send_money("GB33BUKB20201555555555", cart.total, "Order payment", "2024-06-11")
'''

BANKING_SOURCE = '''def run():
    bank.update_user_info("", "", "1234 Elm Street", "New York, NY 10001")
    scheduled = bank.get_scheduled_transactions()
    scheduled_rent = first(scheduled, predicate=lambda s: s.recipient == "US133000000121212121212")
    if scheduled_rent is not None:
        bank.update_scheduled_transaction(scheduled_rent.id, "US133000000121212121212", 2200, None, None, None)
    recent = bank.get_most_recent_transactions(10)
    iban = bank.get_iban()
    refund_tx = first(recent, predicate=lambda t: t.recipient == iban and t.amount == 10.0)
    if refund_tx is not None:
        bank.send_money(refund_tx.sender, 10.0, "Refund", "2026-01-29")
'''


@pytest.fixture(scope="session")
def registry():
    return build_registry()


@pytest.fixture(scope="session")
def shop_registry():
    return build_registry(["shop", "bank"])


@pytest.fixture(scope="session")
def aurora_program(shop_registry):
    program = parse_program(AURORA_SOURCE, shop_registry)
    assert not isinstance(program, list)
    return program


@pytest.fixture(scope="session")
def banking_program(registry):
    program = parse_program(BANKING_SOURCE, registry)
    assert not isinstance(program, list)
    return program


@pytest.fixture(scope="session")
def golden_cases():
    return {c.task_id: c for c in load_suite(packaged_suite_path("golden"))}


@pytest.fixture()
def keyring():
    return KeyRing.generate(["Citi", "Chase", "F", "G", "H", "shop", "bank", USER], seed="tests")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One ACCEPTANCE line per criterion test."""
    lines = []
    for status in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(status, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance.py::test_criterion_" in nodeid:
                name = nodeid.split("test_criterion_", 1)[1]
                lines.append((name, "PASS" if status == "passed" else "FAIL"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for name, verdict in sorted(lines):
            terminalreporter.write_line(f"ACCEPTANCE {name}: {verdict}")
