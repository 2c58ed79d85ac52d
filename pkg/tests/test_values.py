from decimal import Decimal
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from taskscope.values import (
    EvalError,
    arith,
    contains,
    dec,
    parse_number,
    render_number,
    truthy,
    values_equal,
    values_ordered,
)


class TestRenderNumber:
    @pytest.mark.parametrize("text,expected", [
        ("120.00", "120.0"),
        ("150.0", "150.0"),
        ("0.250", "0.25"),
        ("10.50", "10.5"),
        ("-3.100", "-3.1"),
        ("0.0", "0.0"),
        ("2200", "2200.0"),  # decimal-typed whole numbers keep the marker digit
    ])
    def test_minimal_decimal_form(self, text, expected):
        assert render_number(dec(text)) == expected

    def test_integers_have_no_point(self):
        assert render_number(300) == "300"
        assert render_number(-7) == "-7"

    @given(st.decimals(allow_nan=False, allow_infinity=False, places=6,
                       min_value=Decimal("-1e12"), max_value=Decimal("1e12")))
    def test_round_trip(self, d):
        out = parse_number(render_number(d))
        assert isinstance(out, Decimal)
        assert out == d


class TestArith:
    def test_quarter_of_balance_is_exact(self):
        assert arith("/", 1200, 4) == 300

    def test_decimal_division_exact(self):
        assert arith("/", dec("10.5"), 4) == dec("2.625")

    def test_inexact_division_refused(self):
        with pytest.raises(EvalError, match="inexact-division"):
            arith("/", 1, 3)

    def test_division_by_zero(self):
        with pytest.raises(EvalError, match="division-by-zero"):
            arith("/", 1, 0)

    def test_floor_division_floors_negatives(self):
        assert arith("//", -7, 2) == -4
        assert arith("//", 7, 2) == 3

    def test_modulo_matches_floor(self):
        assert arith("%", dec("10.5"), 3) == dec("1.5")
        assert arith("%", -7, 2) == 1

    def test_text_and_list_concatenation(self):
        assert arith("+", "ab", "cd") == "abcd"
        assert arith("+", [1], [2, 3]) == [1, 2, 3]

    @given(st.integers(-10**6, 10**6), st.integers(-10**6, 10**6),
           st.sampled_from(["+", "-", "*"]))
    def test_int_arith_matches_fractions(self, a, b, op):
        expected = {"+": a + b, "-": a - b, "*": a * b}[op]
        assert arith(op, a, b) == expected

    @given(st.decimals(allow_nan=False, allow_infinity=False, places=4,
                       min_value=Decimal("-1e6"), max_value=Decimal("1e6")),
           st.decimals(allow_nan=False, allow_infinity=False, places=4,
                       min_value=Decimal("-1e6"), max_value=Decimal("1e6")))
    def test_decimal_products_are_exact(self, a, b):
        assert Fraction(arith("*", a, b)) == Fraction(a) * Fraction(b)


class TestEquality:
    def test_int_promotes_to_decimal(self):
        assert values_equal(300, dec("300.0"))
        assert values_equal(dec("1.50"), dec("1.5"))

    def test_bool_is_not_a_number(self):
        assert not values_equal(True, 1)
        assert not values_equal(0, False)
        assert values_equal(True, True)

    def test_null_equals_only_null(self):
        assert values_equal(None, None)
        assert not values_equal(None, 0)
        assert not values_equal("", None)

    def test_text_is_byte_exact(self):
        assert not values_equal("Aurora ", "Aurora")
        assert not values_equal("AURORA", "Aurora")

    def test_records_compare_by_field_map(self):
        assert values_equal({"a": 1, "b": dec("2.0")}, {"b": 2, "a": 1})
        assert not values_equal({"a": 1}, {"a": 1, "b": 2})

    def test_ordered_with_null_is_false(self):
        assert not values_ordered("<", None, 5)
        assert not values_ordered(">", 5, None)

    def test_mixed_type_ordering_raises(self):
        with pytest.raises(EvalError):
            values_ordered("<", 5, "a")


class TestTruthyAndMembership:
    def test_truthiness(self):
        assert truthy(True) and not truthy(False)
        assert not truthy(None)
        assert truthy(5) and not truthy(0) and not truthy(dec("0.0"))
        assert truthy("x") and not truthy("")
        assert truthy([1]) and not truthy([])
        assert truthy({"a": 1})

    def test_membership(self):
        assert contains("coffee", "anyone up for coffee later?")
        assert not contains("tea", "coffee")
        assert contains(2, [1, 2, 3])
        assert contains(dec("2.0"), [1, 2, 3])
        assert not contains(4, [1, 2, 3])
