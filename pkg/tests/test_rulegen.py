import pytest

from taskscope.dsl import fallback_program
from taskscope.rulegen import (
    CallKey,
    DuplicateKey,
    artifact_hash,
    compile_rules,
    ruleset_from_artifact,
    ruleset_to_artifact,
)
from taskscope.slicer import derive_slices
from taskscope.symexpr import canonical_key


@pytest.fixture()
def aurora_rules(aurora_program):
    return compile_rules(derive_slices(aurora_program))


class TestRuleCounts:
    def test_add_to_cart_produces_three_rules(self, aurora_rules):
        assert aurora_rules.rule_counts()[CallKey("shop.add_to_cart", 1)] == 3

    def test_send_money_produces_five_rules(self, aurora_rules):
        assert aurora_rules.rule_counts()[CallKey("bank.send_money", 1)] == 5

    def test_fallback_program_compiles_to_nothing(self):
        rules = compile_rules(derive_slices(fallback_program()))
        assert rules.allowed_calls == frozenset()
        assert rules.rule_count == 0
        assert not rules.calls

    def test_counts_additive_over_slices(self, aurora_program):
        slices = derive_slices(aurora_program)
        total = compile_rules(slices).rule_count
        assert total == sum(compile_rules([s]).rule_count for s in slices)

    def test_none_positions_enforced_but_not_counted(self, banking_program):
        rules = compile_rules(derive_slices(banking_program))
        key = CallKey("bank.update_scheduled_transaction", 1)
        compiled = rules.by_key(key)
        assert len(compiled.args) == 6
        # 3 non-Null operands + 1 guard
        assert rules.rule_counts()[key] == 4
        artifact = ruleset_to_artifact(rules, "t", "bank", "h")
        entry = next(e for e in artifact["keys"] if e["tool"] == key.tool)
        assert entry["args"][3:] == [None, None, None]

    def test_banking_listing_totals(self, banking_program):
        rules = compile_rules(derive_slices(banking_program))
        assert rules.rule_count == 14


class TestRuleStructure:
    def test_guard_is_conjunction_of_asserts(self, aurora_rules):
        guard = aurora_rules.by_key(CallKey("shop.add_to_cart", 1)).guard
        text = canonical_key(guard)
        assert ".stock > 0" in text and ".price < 150.0" in text and " and " in text

    def test_cross_service_deps(self, aurora_rules):
        send = aurora_rules.by_key(CallKey("bank.send_money", 1))
        assert send.deps == frozenset({"shop"})
        details = aurora_rules.by_key(CallKey("shop.get_product_details", 1))
        assert details.deps == frozenset()

    def test_args_resolve_through_lets_only(self, aurora_rules):
        from taskscope.symexpr import free_names

        for compiled in aurora_rules.calls:
            for expr in (*compiled.args, compiled.guard):
                assert free_names(expr) == [], compiled.key

    def test_duplicate_key_is_internal_error(self, aurora_program):
        slices = derive_slices(aurora_program)
        with pytest.raises(DuplicateKey):
            compile_rules([slices[0], slices[0]])

    def test_deterministic_in_program(self, aurora_program):
        a = compile_rules(derive_slices(aurora_program))
        b = compile_rules(derive_slices(aurora_program))
        assert ruleset_to_artifact(a, "t", "shop", "h") == ruleset_to_artifact(b, "t", "shop", "h")


class TestArtifact:
    def test_round_trip(self, aurora_rules):
        doc = ruleset_to_artifact(aurora_rules, "task-1", "bank", "hash")
        back = ruleset_from_artifact(doc)
        assert back.rule_counts() == aurora_rules.rule_counts()
        assert back.allowed_calls == aurora_rules.allowed_calls
        for compiled in aurora_rules.calls:
            other = back.by_key(compiled.key)
            assert other is not None
            assert [canonical_key(a) for a in other.args] == [canonical_key(a) for a in compiled.args]
            assert canonical_key(other.guard) == canonical_key(compiled.guard)

    def test_hash_stability(self, aurora_rules):
        doc = ruleset_to_artifact(aurora_rules, "task-1", "bank", "hash")
        assert artifact_hash(doc) == artifact_hash(ruleset_to_artifact(aurora_rules, "task-1", "bank", "hash"))
