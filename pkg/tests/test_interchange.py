import pytest
from hypothesis import given
from hypothesis import strategies as st

from taskscope.interchange import (
    canonical_value_text,
    dumps_canonical,
    value_from_wire,
    value_to_wire,
)
from taskscope.values import dec, values_equal

values = st.recursive(
    st.one_of(
        st.none(),
        st.booleans(),
        st.integers(-10**12, 10**12),
        st.text(max_size=8),
        st.decimals(allow_nan=False, allow_infinity=False, places=4),
    ),
    lambda inner: st.one_of(
        st.lists(inner, max_size=4),
        st.dictionaries(st.text(min_size=1, max_size=4), inner, max_size=4),
    ),
    max_leaves=12,
)


class TestWireEncoding:
    @given(values)
    def test_round_trip(self, v):
        assert values_equal(value_from_wire(value_to_wire(v)), v)

    @given(values)
    def test_canonical_text_is_deterministic(self, v):
        assert canonical_value_text(v) == canonical_value_text(v)

    def test_decimals_are_tagged_never_bare_floats(self):
        wire = value_to_wire({"price": dec("120.0")})
        assert wire == {"rec": {"price": {"dec": "120.0"}}}
        with pytest.raises(ValueError):
            value_from_wire({"rec": {"price": 120.0}})

    def test_record_keys_sort_canonically(self):
        a = canonical_value_text({"b": 1, "a": 2})
        b = canonical_value_text({"a": 2, "b": 1})
        assert a == b

    def test_equal_decimals_share_bytes(self):
        assert canonical_value_text(dec("1.50")) == canonical_value_text(dec("1.5"))

    def test_tag_collisions_rejected(self):
        with pytest.raises(ValueError):
            value_from_wire({"dec": "1", "list": []})

    def test_dumps_canonical_is_compact_and_sorted(self):
        assert dumps_canonical({"b": [1, 2], "a": None}) == '{"a":null,"b":[1,2]}'
