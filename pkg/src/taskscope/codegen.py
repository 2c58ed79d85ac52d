"""Task-to-program generation with a closed-fail guarantee.

A backend (live HTTP model or deterministic fixture replay) turns a signed
task plus tool schemas into restricted-DSL source.  Whatever the backend
does — timeouts, garbage, forbidden constructs — the result of
``generate_program`` is always a valid program: one retry, then the
conservative no-op fallback (``def run(): pass``), which allows nothing at
enforcement time.
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass
from decimal import Decimal
from importlib import resources
from pathlib import Path
from typing import Mapping, Protocol

import requests
from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey

from .dsl import TaskProgram, eliminate_dead_code, fallback_program, parse_lenient, validate
from .envelope import TrustStore
from .environment.registry import MissingOutputSchema, ToolRegistry
from .interchange import dumps_canonical
from .values import arith, dec


# -- signed tasks -------------------------------------------------------------

def task_payload(task_id: str, text: str, context: Mapping[str, str]) -> bytes:
    parts = [task_id.encode(), text.encode(), dumps_canonical(dict(context)).encode()]
    out = bytearray()
    for p in parts:
        out += struct.pack(">I", len(p))
        out += p
    return bytes(out)


@dataclass(frozen=True)
class SignedTask:
    task_id: str
    text: str
    context: Mapping[str, str]
    user_signature: bytes

    def verify(self, trust: TrustStore) -> bool:
        try:
            trust.user_key().verify(self.user_signature, task_payload(self.task_id, self.text, self.context))
            return True
        except InvalidSignature:
            return False


def sign_task(task_id: str, text: str, context: Mapping[str, str], user_key: Ed25519PrivateKey) -> SignedTask:
    sig = user_key.sign(task_payload(task_id, text, context))
    return SignedTask(task_id=task_id, text=text, context=dict(context), user_signature=sig)


# -- prompt assembly -----------------------------------------------------------

def strict_rules_text() -> str:
    return resources.files("taskscope.data.prompts").joinpath("strict_rules.txt").read_text()


@dataclass(frozen=True)
class PromptBundle:
    system_rules: str
    tool_schemas: tuple[str, ...]
    task_text: str
    context: Mapping[str, str]

    def render(self) -> tuple[str, str]:
        """(system message, user message) for a chat-completion request."""
        schemas = "\n".join(self.tool_schemas)
        system = f"{self.system_rules}\n\nAVAILABLE TOOLS (schemas in parameter order):\n{schemas}\n"
        context_lines = "\n".join(f"{k} = {v}" for k, v in sorted(self.context.items()))
        user = f"Task:\n{self.task_text}\n\nAuxiliary data:\n{context_lines}\n"
        return system, user


def assemble_prompt(task: SignedTask, registry: ToolRegistry) -> PromptBundle:
    schemas = []
    for tool_id in sorted(registry.tools):
        spec = registry.tools[tool_id]
        if not spec.output:
            raise MissingOutputSchema(tool_id)
        schemas.append(spec.schema_text())
    return PromptBundle(
        system_rules=strict_rules_text(),
        tool_schemas=tuple(schemas),
        task_text=task.text,
        context=dict(task.context),
    )


# -- backends ------------------------------------------------------------------

@dataclass(frozen=True)
class Usage:
    prompt_tokens: int = 0
    completion_tokens: int = 0
    model: str = ""

    def __add__(self, other: "Usage") -> "Usage":
        return Usage(
            self.prompt_tokens + other.prompt_tokens,
            self.completion_tokens + other.completion_tokens,
            other.model or self.model,
        )


class BackendError(RuntimeError):
    pass


class GeneratorBackend(Protocol):
    backend_id: str

    def complete(self, bundle: PromptBundle, task: SignedTask) -> tuple[str, Usage]:
        """Return (raw model text, usage).  May raise BackendError."""


@dataclass(frozen=True)
class FixtureEntry:
    source: str
    usage: Usage


class FixtureBackend:
    """Deterministic replay keyed by task_id; safe for concurrent use."""

    def __init__(self, corpus: Mapping[str, FixtureEntry], backend_id: str = "fixture"):
        self.backend_id = backend_id
        self._corpus = dict(corpus)

    @classmethod
    def from_dir(cls, path: str | Path) -> "FixtureBackend":
        corpus: dict[str, FixtureEntry] = {}
        for file in sorted(Path(path).glob("*.json")):
            doc = json.loads(file.read_text())
            usage = doc.get("usage", {})
            corpus[doc["task_id"]] = FixtureEntry(
                source=doc["source"],
                usage=Usage(usage.get("prompt_tokens", 0), usage.get("completion_tokens", 0),
                            usage.get("model", "fixture")),
            )
        return cls(corpus)

    def complete(self, bundle: PromptBundle, task: SignedTask) -> tuple[str, Usage]:
        entry = self._corpus.get(task.task_id)
        if entry is None and "~" in task.task_id:
            # rerun ids are "<case>~<n>"; the corpus is keyed by case
            entry = self._corpus.get(task.task_id.rsplit("~", 1)[0])
        if entry is None:
            raise BackendError(f"no fixture for task {task.task_id}")
        return entry.source, entry.usage


class LiveBackend:
    """Chat-completion HTTP backend (OpenAI-style API shape).

    Credentials come from the environment; endpoint and model from config.
    """

    def __init__(self, endpoint: str, model: str, api_key_env: str = "TASKSCOPE_API_KEY",
                 timeout: float = 60.0):
        self.backend_id = f"live:{model}"
        self.endpoint = endpoint
        self.model = model
        self.api_key_env = api_key_env
        self.timeout = timeout

    def complete(self, bundle: PromptBundle, task: SignedTask) -> tuple[str, Usage]:
        api_key = os.environ.get(self.api_key_env, "")
        if not api_key:
            raise BackendError(f"missing credentials in ${self.api_key_env}")
        system, user = bundle.render()
        try:
            resp = requests.post(
                self.endpoint,
                headers={"Authorization": f"Bearer {api_key}"},
                json={
                    "model": self.model,
                    "temperature": 0,
                    "messages": [
                        {"role": "system", "content": system},
                        {"role": "user", "content": user},
                    ],
                },
                timeout=self.timeout,
            )
            resp.raise_for_status()
            doc = resp.json()
            text = doc["choices"][0]["message"]["content"]
            usage = doc.get("usage", {})
            return text, Usage(usage.get("prompt_tokens", 0), usage.get("completion_tokens", 0), self.model)
        except (requests.RequestException, KeyError, ValueError) as exc:
            raise BackendError(str(exc)) from exc


# -- generation ----------------------------------------------------------------

@dataclass(frozen=True)
class GenerationResult:
    program: TaskProgram
    backend_id: str
    usage: Usage
    cost_usd: Decimal
    fallback_used: bool = False


def extract_code(text: str) -> str:
    """Strip a markdown fence if the model wrapped its output in one."""
    stripped = text.strip()
    if stripped.startswith("```"):
        lines = stripped.splitlines()
        body: list[str] = []
        for line in lines[1:]:
            if line.strip().startswith("```"):
                break
            body.append(line)
        return "\n".join(body) + "\n"
    return stripped + "\n"


def normalize_source(source: str, registry: ToolRegistry) -> TaskProgram | None:
    """Lenient parse, dead-code elimination, then strict validation."""
    program, violations = parse_lenient(source, registry)
    if violations or program is None:
        return None
    program = eliminate_dead_code(program, registry)
    if validate(program, registry):
        return None
    return program


def compute_cost(usage: Usage, cost_table: Mapping[str, Mapping[str, str]]) -> Decimal:
    prices = cost_table.get(usage.model)
    if not prices:
        return dec("0")
    prompt = arith("/", arith("*", dec(str(prices.get("prompt_per_1k", "0"))), usage.prompt_tokens), 1000)
    completion = arith("/", arith("*", dec(str(prices.get("completion_per_1k", "0"))), usage.completion_tokens), 1000)
    total = arith("+", prompt, completion)
    return total if isinstance(total, Decimal) else dec(str(total))


def generate_program(task: SignedTask, registry: ToolRegistry, backend: GeneratorBackend,
                     cost_table: Mapping[str, Mapping[str, str]] | None = None,
                     retries: int = 1) -> GenerationResult:
    bundle = assemble_prompt(task, registry)
    usage = Usage()
    for _ in range(1 + retries):
        try:
            text, attempt_usage = backend.complete(bundle, task)
        except BackendError:
            continue  # transient backend failures get the same single retry
        usage = usage + attempt_usage
        program = normalize_source(extract_code(text), registry)
        if program is not None:
            return GenerationResult(
                program=program,
                backend_id=backend.backend_id,
                usage=usage,
                cost_usd=compute_cost(usage, cost_table or {}),
                fallback_used=False,
            )
    return GenerationResult(
        program=fallback_program(),
        backend_id=backend.backend_id,
        usage=usage,
        cost_usd=compute_cost(usage, cost_table or {}),
        fallback_used=True,
    )
