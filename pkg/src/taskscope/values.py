"""Concrete values and exact arithmetic.

Every value that crosses an authorization boundary is one of:

    None | bool | int | Decimal | str | list[Value] | dict[str, Value]

Decimals are exact fixed-point numbers (never binary floats), so operand
comparisons during enforcement are exact by construction.  Arithmetic is
computed through Fraction and converted back; an operation whose result has
no finite decimal representation raises EvalError rather than rounding.
"""

from __future__ import annotations

from decimal import Decimal, InvalidOperation
from fractions import Fraction
from typing import Any, Mapping

Value = Any  # None | bool | int | Decimal | str | list[Value] | dict[str, Value]

SCALAR_TYPES = (bool, int, Decimal, str)


class EvalError(ValueError):
    """Evaluation failed; enforcement treats this as a failed candidate."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code


def type_mismatch(message: str) -> EvalError:
    return EvalError("type-mismatch", message)


def is_numeric(v: Value) -> bool:
    return isinstance(v, (int, Decimal)) and not isinstance(v, bool)


def ensure_value(obj: Any) -> Value:
    """Validate and normalize an arbitrary object into a Value.

    Floats are rejected: they can silently carry binary-rounding error into
    comparisons that must be exact.
    """
    if obj is None or isinstance(obj, (bool, int, str)):
        return obj
    if isinstance(obj, Decimal):
        return obj
    if isinstance(obj, float):
        raise type_mismatch(f"binary float {obj!r} is not an exact value")
    if isinstance(obj, (list, tuple)):
        return [ensure_value(x) for x in obj]
    if isinstance(obj, Mapping):
        return {str(k): ensure_value(v) for k, v in obj.items()}
    raise type_mismatch(f"unsupported value type {type(obj).__name__}")


def dec(text: str) -> Decimal:
    """Build an exact decimal from its text form."""
    try:
        return Decimal(text)
    except InvalidOperation as exc:
        raise type_mismatch(f"bad decimal literal {text!r}") from exc


def render_number(v: Value) -> str:
    """Canonical text of a numeric value.

    Integers render without a point.  Decimals render in minimal fixed-point
    form with trailing fractional zeros stripped but always at least one
    fractional digit, so the int/decimal distinction survives the round trip
    (``120`` vs ``"120.0"``).
    """
    if isinstance(v, bool) or not is_numeric(v):
        raise type_mismatch(f"not a number: {v!r}")
    if isinstance(v, int):
        return str(v)
    sign, digits, exp = v.as_tuple()
    if not isinstance(exp, int):  # NaN / Infinity
        raise type_mismatch(f"non-finite decimal {v!r}")
    coeff = int("".join(map(str, digits)))
    while exp < 0 and coeff and coeff % 10 == 0:
        coeff //= 10
        exp += 1
    if coeff == 0:
        exp = 0
    body: str
    if exp >= 0:
        body = str(coeff) + "0" * exp + ".0"
    else:
        text = str(coeff).rjust(-exp + 1, "0")
        body = text[:exp] + "." + text[exp:]
    return ("-" if sign and coeff else "") + body


def parse_number(text: str) -> Value:
    """Inverse of render_number; '.' in the text means Decimal."""
    if "." in text or "e" in text or "E" in text:
        return dec(text)
    return int(text)


def _fraction_to_value(fr: Fraction, want_decimal: bool) -> Value:
    if fr.denominator == 1 and not want_decimal:
        return int(fr)
    num, den = fr.numerator, fr.denominator
    scale = 0
    while den % 2 == 0:
        den //= 2
        num *= 5
        scale += 1
    while den % 5 == 0:
        den //= 5
        num *= 2
        scale += 1
    if den != 1:
        raise EvalError("inexact-division", f"{fr} has no finite decimal form")
    return Decimal(num).scaleb(-scale) if scale else Decimal(num)


def _as_fraction(v: Value, op: str) -> Fraction:
    if not is_numeric(v):
        raise type_mismatch(f"'{op}' needs numbers, got {type(v).__name__}")
    return Fraction(v)


def arith(op: str, a: Value, b: Value) -> Value:
    """Exact arithmetic: + - * / // %  (plus '+' on text and lists)."""
    if op == "+" and isinstance(a, str) and isinstance(b, str):
        return a + b
    if op == "+" and isinstance(a, list) and isinstance(b, list):
        return a + b
    fa, fb = _as_fraction(a, op), _as_fraction(b, op)
    any_decimal = isinstance(a, Decimal) or isinstance(b, Decimal)
    if op == "+":
        return _fraction_to_value(fa + fb, any_decimal)
    if op == "-":
        return _fraction_to_value(fa - fb, any_decimal)
    if op == "*":
        return _fraction_to_value(fa * fb, any_decimal)
    if op == "/":
        if fb == 0:
            raise EvalError("division-by-zero", f"{a} / 0")
        return _fraction_to_value(fa / fb, any_decimal)
    if op == "//":
        if fb == 0:
            raise EvalError("division-by-zero", f"{a} // 0")
        return _floor(fa / fb)
    if op == "%":
        if fb == 0:
            raise EvalError("division-by-zero", f"{a} % 0")
        return _fraction_to_value(fa - fb * _floor(fa / fb), any_decimal)
    raise type_mismatch(f"unknown operator {op!r}")


def _floor(fr: Fraction) -> int:
    return fr.numerator // fr.denominator


def values_equal(a: Value, b: Value) -> bool:
    """Exact structural equality.

    Numeric comparison promotes int to Decimal exactly; bool equals only
    bool; Null equals only Null; text is byte-exact; records compare as
    field-name maps.  Mismatched kinds are unequal, never an error.
    """
    if isinstance(a, bool) or isinstance(b, bool):
        return isinstance(a, bool) and isinstance(b, bool) and a == b
    if a is None or b is None:
        return a is None and b is None
    if is_numeric(a) and is_numeric(b):
        return Fraction(a) == Fraction(b)
    if isinstance(a, str) and isinstance(b, str):
        return a == b
    if isinstance(a, list) and isinstance(b, list):
        return len(a) == len(b) and all(values_equal(x, y) for x, y in zip(a, b))
    if isinstance(a, dict) and isinstance(b, dict):
        return a.keys() == b.keys() and all(values_equal(a[k], b[k]) for k in a)
    return False


def values_ordered(op: str, a: Value, b: Value) -> bool:
    """< <= > >= over numbers or text.  Null operands compare false."""
    if a is None or b is None:
        return False
    if is_numeric(a) and is_numeric(b):
        fa, fb = Fraction(a), Fraction(b)
    elif isinstance(a, str) and isinstance(b, str):
        fa, fb = a, b  # type: ignore[assignment]
    else:
        raise type_mismatch(f"cannot order {type(a).__name__} and {type(b).__name__}")
    if op == "<":
        return fa < fb
    if op == "<=":
        return fa <= fb
    if op == ">":
        return fa > fb
    if op == ">=":
        return fa >= fb
    raise type_mismatch(f"unknown comparison {op!r}")


def truthy(v: Value) -> bool:
    if isinstance(v, bool):
        return v
    if v is None:
        return False
    if is_numeric(v):
        return v != 0
    if isinstance(v, (str, list)):
        return len(v) > 0
    if isinstance(v, dict):
        return True
    raise type_mismatch(f"no truth value for {type(v).__name__}")


def contains(item: Value, coll: Value) -> bool:
    """Membership: substring for text, element for lists."""
    if isinstance(coll, str):
        if not isinstance(item, str):
            raise type_mismatch("'in' on text needs a text left operand")
        return item in coll
    if isinstance(coll, list):
        return any(values_equal(item, x) for x in coll)
    if coll is None:
        return False
    raise type_mismatch(f"'in' needs text or list, got {type(coll).__name__}")
