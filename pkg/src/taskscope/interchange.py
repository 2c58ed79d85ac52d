"""Repo-wide interchange format: canonical JSON with exact decimals.

Plain JSON cannot carry exact decimals (numbers decode to binary floats), so
values use a small tagged encoding:

    Null     -> null              Integer -> 123
    Boolean  -> true/false        Text    -> "..."
    Decimal  -> {"dec": "120.0"}  List    -> {"list": [...]}
    Record   -> {"rec": {...}}

A bare JSON object always has exactly one of the keys ``dec``/``list``/
``rec``, so the encoding is unambiguous.  ``dumps_canonical`` emits sorted
keys and no whitespace: identical values produce identical bytes on every
host, which signatures and cross-mode log comparison rely on.
"""

from __future__ import annotations

import json
from decimal import Decimal
from typing import Any

from .values import Value, dec, render_number


def value_to_wire(v: Value) -> Any:
    if v is None or isinstance(v, bool):
        return v
    if isinstance(v, int):
        return v
    if isinstance(v, Decimal):
        return {"dec": render_number(v)}
    if isinstance(v, str):
        return v
    if isinstance(v, list):
        return {"list": [value_to_wire(x) for x in v]}
    if isinstance(v, dict):
        return {"rec": {k: value_to_wire(x) for k, x in sorted(v.items())}}
    raise TypeError(f"not a value: {type(v).__name__}")


def value_from_wire(obj: Any) -> Value:
    if obj is None or isinstance(obj, (bool, int, str)):
        return obj
    if isinstance(obj, float):
        raise ValueError(f"bare float {obj!r} on the wire; decimals must be tagged")
    if isinstance(obj, dict):
        if set(obj) == {"dec"}:
            return dec(obj["dec"])
        if set(obj) == {"list"}:
            return [value_from_wire(x) for x in obj["list"]]
        if set(obj) == {"rec"}:
            return {k: value_from_wire(x) for k, x in obj["rec"].items()}
        raise ValueError(f"bad value tag: {sorted(obj)}")
    raise ValueError(f"not a wire value: {type(obj).__name__}")


def dumps_canonical(obj: Any) -> str:
    """Deterministic JSON text: sorted keys, compact separators, no NaN."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False, ensure_ascii=False)


def canonical_value_text(v: Value) -> str:
    return dumps_canonical(value_to_wire(v))


def loads(text: str) -> Any:
    return json.loads(text)
