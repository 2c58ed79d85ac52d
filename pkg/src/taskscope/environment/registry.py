"""Tool registry: per-tool parameter and output schemas.

Tool ids are dotted ``service.name``.  Output schemas are mandatory — the
code generator needs them so tool results can be referenced symbolically by
later calls — and are described by a small type tree:

    {"type": "int" | "number" | "text" | "bool"}
    {"type": "list", "item": <type>}
    {"type": "record", "fields": {name: <type>, ...}}
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

from ..interchange import dumps_canonical


class MissingOutputSchema(ValueError):
    pass


@dataclass(frozen=True)
class ParamSpec:
    name: str
    type: str  # "text" | "int" | "number" | "bool" | "list" | "any"
    optional: bool = False


@dataclass(frozen=True)
class ToolSpec:
    service: str
    name: str  # bare name; full id is f"{service}.{name}"
    params: tuple[ParamSpec, ...]
    output: Mapping[str, object]
    read_only: bool = False
    description: str = ""

    @property
    def tool_id(self) -> str:
        return f"{self.service}.{self.name}"

    def schema_text(self) -> str:
        params = [{"name": p.name, "type": p.type, "optional": p.optional} for p in self.params]
        return dumps_canonical({"tool": self.tool_id, "parameters": params, "returns": dict(self.output)})


@dataclass(frozen=True)
class ToolRegistry:
    tools: Mapping[str, ToolSpec] = field(default_factory=dict)

    @classmethod
    def of(cls, specs: Iterable[ToolSpec]) -> "ToolRegistry":
        table: dict[str, ToolSpec] = {}
        for spec in specs:
            if spec.tool_id in table:
                raise ValueError(f"duplicate tool {spec.tool_id}")
            if not spec.output:
                raise MissingOutputSchema(spec.tool_id)
            table[spec.tool_id] = spec
        return cls(dict(table))

    def __contains__(self, tool_id: str) -> bool:
        return tool_id in self.tools

    def get(self, tool_id: str) -> ToolSpec | None:
        return self.tools.get(tool_id)

    def require(self, tool_id: str) -> ToolSpec:
        spec = self.tools.get(tool_id)
        if spec is None:
            raise KeyError(f"unknown tool {tool_id}")
        return spec

    def services(self) -> list[str]:
        return sorted({t.service for t in self.tools.values()})

    def for_service(self, service: str) -> list[ToolSpec]:
        return [t for t in self.tools.values() if t.service == service]

    def restrict(self, services: Iterable[str]) -> "ToolRegistry":
        wanted = set(services)
        return ToolRegistry({tid: t for tid, t in self.tools.items() if t.service in wanted})

    def is_read_only(self, tool_id: str) -> bool:
        spec = self.tools.get(tool_id)
        return bool(spec and spec.read_only)
