import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from taskscope.envelope import (
    AGENT,
    Envelope,
    EnvelopeStore,
    SignerMismatch,
    StoreConflict,
    canonical_payload,
    flatten_value,
    seal,
    unflatten_value,
    verify,
)
from taskscope.keys import USER, KeyRing
from taskscope.values import dec


@pytest.fixture()
def trust(keyring):
    return keyring.trust_store()


class TestSealVerify:
    def test_citi_balance_round_trip(self, keyring, trust):
        env = seal(1200, 'Citi.getBalance("Me@Citi")', "task-1", "Citi", keyring.private("Citi"), trust)
        assert env.signature is not None
        assert verify(env, trust)

    def test_agent_literal_envelope_is_unsigned_and_valid(self, trust):
        env = seal(1, "1", "task-1", AGENT, None)
        assert env.signature is None
        assert verify(env, trust)

    def test_agent_cannot_attest_tool_outputs(self, trust):
        env = Envelope(task_id="task-1", key="F.f(1)", value=5, signer=AGENT, signature=None)
        assert not verify(env, trust)

    def test_unknown_signer_is_false_not_an_exception(self, keyring, trust):
        env = seal(5, "F.f(1)", "task-1", "F", keyring.private("F"), trust)
        stripped = KeyRing.generate([USER, "Citi"], seed="other").trust_store()
        assert verify(env, stripped) is False

    def test_wrong_key_for_signer_is_rejected_at_seal(self, keyring, trust):
        with pytest.raises(SignerMismatch):
            seal(5, "F.f(1)", "task-1", "F", keyring.private("G"), trust)

    def test_signature_covers_task_id(self, keyring, trust):
        env = seal(5, "F.f(1)", "task-A", "F", keyring.private("F"), trust)
        replayed = Envelope(task_id="task-B", key=env.key, value=env.value,
                            signer=env.signer, signature=env.signature)
        assert verify(env, trust)
        assert not verify(replayed, trust)

    def test_every_single_byte_flip_breaks_verification(self, keyring, trust):
        env = seal(dec("12.5"), "F.f(1)", "t", "F", keyring.private("F"), trust)
        wire = json.dumps(env.to_wire())
        flips = 0
        for i in range(len(wire)):
            for bit in (1, 32):
                mutated = wire[:i] + chr(ord(wire[i]) ^ bit) + wire[i + 1:]
                try:
                    candidate = Envelope.from_wire(json.loads(mutated))
                except (ValueError, KeyError, TypeError):
                    continue  # unparseable tampering is equivalent to omission
                if candidate == env:
                    continue  # flip landed in ignorable whitespace
                assert not verify(candidate, trust), f"byte {i} bit {bit} still verifies"
                flips += 1
        assert flips > 50

    def test_payload_is_deterministic(self):
        a = canonical_payload("t", "k", {"b": 1, "a": dec("2.0")})
        b = canonical_payload("t", "k", {"a": dec("2.00"), "b": 1})
        assert a == b


class TestStore:
    def test_write_once(self, keyring, trust):
        store = EnvelopeStore()
        env = seal(1, "1", "t", AGENT, None)
        store.put(env)
        with pytest.raises(StoreConflict):
            store.put(env)

    def test_lookup_scopes_by_task(self, keyring):
        store = EnvelopeStore()
        store.put(seal(1, "1", "task-A", AGENT, None))
        assert store.lookup("task-A", "1") is not None
        assert store.lookup("task-B", "1") is None

    def test_structural_keys_do_not_unify_algebra(self, keyring):
        store = EnvelopeStore()
        store.put(seal(300, 'Citi.getBalance("Me@Citi") / 4', "t", AGENT, None))
        assert store.lookup("t", '0.25 * Citi.getBalance("Me@Citi")') is None

    def test_empty_lookup(self):
        assert EnvelopeStore().lookup("t", "shop.get_cart_summary()") is None


class TestFlatten:
    def test_walkthrough_record(self):
        flat = flatten_value({"price": dec("120.0"), "stock": 5})
        assert flat == {"price": dec("120.0"), "stock": 5}

    def test_scalar_goes_under_empty_path(self):
        assert flatten_value(42) == {"": 42}

    def test_nested_paths(self):
        value = {"res": {"user": {"id": 7}}, "items": [{"price": dec("1.5")}, {"price": 2}]}
        flat = flatten_value(value)
        assert flat["res.user.id"] == 7
        assert flat["items.0.price"] == dec("1.5")
        assert flat["items.1.price"] == 2

    def test_unflatten_inverts(self):
        value = {"res": {"user": {"id": 7}}, "items": [{"price": dec("1.5")}, {"price": 2}]}
        assert unflatten_value(flatten_value(value)) == value

    @given(st.recursive(
        st.one_of(st.none(), st.booleans(), st.integers(-100, 100), st.text(max_size=5)),
        lambda inner: st.one_of(
            st.lists(inner, max_size=3),
            st.dictionaries(st.sampled_from(["a", "b", "c"]), inner, max_size=3),
        ),
        max_leaves=10,
    ))
    def test_random_round_trip(self, value):
        assert unflatten_value(flatten_value(value)) == value
