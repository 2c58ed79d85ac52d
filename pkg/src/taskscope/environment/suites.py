"""Suite loading: tasks, scenarios, fixture programs, and injection scripts.

Suites are data files, one JSON document per task:

    {
      "task": {"id": ..., "text": ..., "context": {...}},
      "services": ["shop", "bank"],
      "scenario": {"today": ..., "state": {service: <wire value>}},
      "fixture_program": "def run(): ...",
      "fixture_usage": {"prompt_tokens": n, "completion_tokens": n, "model": ...},
      "injections": [{"after_step": k, "tool": ..., "args": [<wire value>...], "label": ...}]
    }

Every injection is a spurious concrete call forced into the otherwise
faithful script after its k-th tool call; the bench scores whether
enforcement refuses it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from ..interchange import value_from_wire
from ..values import Value
from .scenario import Scenario


class SuiteError(ValueError):
    pass


@dataclass(frozen=True)
class Injection:
    after_step: int
    tool: str
    args: tuple[Value, ...]
    label: str


@dataclass(frozen=True)
class SuiteCase:
    suite: str
    task_id: str
    text: str
    context: dict[str, str]
    services: tuple[str, ...]
    scenario: Scenario
    fixture_source: str
    fixture_usage: dict  # {"prompt_tokens": int, "completion_tokens": int, "model": str}
    injections: tuple[Injection, ...]


def _load_case(path: Path, suite: str) -> SuiteCase:
    try:
        doc = json.loads(path.read_text())
        task = doc["task"]
        usage = doc.get("fixture_usage", {})
        injections = tuple(
            Injection(
                after_step=inj["after_step"],
                tool=inj["tool"],
                args=tuple(value_from_wire(a) for a in inj["args"]),
                label=inj.get("label", ""),
            )
            for inj in doc.get("injections", [])
        )
        return SuiteCase(
            suite=suite,
            task_id=task["id"],
            text=task["text"],
            context={k: str(v) for k, v in task.get("context", {}).items()},
            services=tuple(doc["services"]),
            scenario=Scenario.from_data(doc["scenario"]),
            fixture_source=doc["fixture_program"],
            fixture_usage={
                "prompt_tokens": int(usage.get("prompt_tokens", 0)),
                "completion_tokens": int(usage.get("completion_tokens", 0)),
                "model": usage.get("model", "fixture-model"),
            },
            injections=injections,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SuiteError(f"malformed suite file {path}: {exc}") from exc


def load_suite(path: str | Path) -> list[SuiteCase]:
    root = Path(path)
    if not root.is_dir():
        raise SuiteError(f"suite directory not found: {root}")
    return [_load_case(p, root.name) for p in sorted(root.glob("*.json"))]


def load_suites(root: str | Path) -> dict[str, list[SuiteCase]]:
    base = Path(root)
    return {p.name: load_suite(p) for p in sorted(base.iterdir()) if p.is_dir()}


def packaged_suites_root() -> Path:
    return Path(str(resources.files("taskscope.data").joinpath("suites")))


def packaged_suite_path(name: str) -> Path:
    return packaged_suites_root() / name
