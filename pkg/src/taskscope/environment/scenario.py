"""Scenario state and deterministic tool dispatch.

A scenario holds each service's initial state (catalogs, balances, message
boards, ...) plus the task date.  Mock tools are pure functions of
(state, args) except for explicit mutations, which apply in call order, so
replaying a script over a fresh scenario reproduces identical states and
envelopes.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
from typing import Any, Callable, Mapping

from ..interchange import value_from_wire, value_to_wire
from ..values import Value, is_numeric
from .registry import ParamSpec, ToolSpec


class SchemaViolation(ValueError):
    pass


class ToolExecutionError(RuntimeError):
    pass


Handler = Callable[[dict, tuple[Value, ...]], Value]


@dataclass
class Scenario:
    state: dict[str, dict]  # service id -> mutable state
    today: str = ""

    @classmethod
    def from_data(cls, doc: Mapping[str, Any]) -> "Scenario":
        """Decode from the interchange form ({"state": {svc: <wire value>}, "today": ...})."""
        state = {}
        for svc, body in doc.get("state", {}).items():
            decoded = value_from_wire(body)
            if not isinstance(decoded, dict):
                raise ValueError(f"service state for {svc} must be a record")
            state[svc] = decoded
        return cls(state=state, today=doc.get("today", ""))

    def to_data(self) -> dict:
        return {"state": {svc: value_to_wire(body) for svc, body in self.state.items()}, "today": self.today}

    def fork(self) -> "Scenario":
        return Scenario(state=copy.deepcopy(self.state), today=self.today)

    def service_state(self, service: str) -> dict:
        return self.state.setdefault(service, {})


def _check_arg(param: ParamSpec, value: Value, tool_id: str) -> None:
    if value is None:
        if param.optional:
            return
        raise SchemaViolation(f"{tool_id}: parameter '{param.name}' is required")
    ok = {
        "text": lambda v: isinstance(v, str),
        "int": lambda v: isinstance(v, int) and not isinstance(v, bool),
        "number": lambda v: is_numeric(v),
        "bool": lambda v: isinstance(v, bool),
        "list": lambda v: isinstance(v, list),
        "any": lambda v: True,
    }.get(param.type, lambda v: True)
    if not ok(value):
        raise SchemaViolation(f"{tool_id}: parameter '{param.name}' expects {param.type}, got {type(value).__name__}")


def invoke_tool(scenario: Scenario, spec: ToolSpec, handler: Handler, args: tuple[Value, ...]) -> Value:
    if len(args) != len(spec.params):
        raise SchemaViolation(f"{spec.tool_id}: expected {len(spec.params)} args, got {len(args)}")
    for param, value in zip(spec.params, args):
        _check_arg(param, value, spec.tool_id)
    state = scenario.service_state(spec.service)
    return handler(state, args)
