"""Service runtime: per-task rule compilation and enforced tool execution.

On task submission the service independently generates the program, derives
slices, and compiles rules for its *own* tools; it never trusts anything the
agent derived.  At call time the enforcer consults only this service's
envelope store plus the verified attachments supplied with the call, so the
single-host and multi-host modes make identical decisions.

Escalations block the individual call (not the task) until the user gateway
answers or the timeout passes; timeout means deny.
"""

from __future__ import annotations

import base64
import datetime
import json
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey

from ..codegen import GenerationResult, GeneratorBackend, generate_program
from ..dsl import program_hash
from ..enforcer import (
    BY_REPLAY,
    BY_SLICE,
    CallRequest,
    Decision,
    EnforcementState,
    check_call,
    deny,
    explicit_key_text,
    record_approval,
)
from ..envelope import Envelope, EnvelopeStore, StoreConflict, TrustStore, seal
from ..environment.registry import ToolRegistry
from ..environment.scenario import Scenario, SchemaViolation, ToolExecutionError, invoke_tool
from ..environment.services import handler_for
from ..interchange import value_to_wire
from ..rulegen import artifact_hash, compile_rules, ruleset_to_artifact
from ..slicer import derive_slices, render_slice
from . import messages as msg


@dataclass
class TaskState:
    enforcement: EnforcementState
    slices_rendered: list[str]
    artifact: dict
    generation: GenerationResult
    program_hash: str
    lock: threading.Lock = field(default_factory=threading.Lock)


@dataclass
class _PendingEscalation:
    event: threading.Event = field(default_factory=threading.Event)
    decision: str | None = None


class ServiceRuntime:
    def __init__(
        self,
        name: str,
        registry: ToolRegistry,
        signing_key: Ed25519PrivateKey,
        trust: TrustStore,
        backend: GeneratorBackend,
        scenario: Scenario,
        gateway_channel: Callable[[dict], dict] | None = None,
        escalation_timeout: float = 10.0,
        artifacts_dir: str | Path | None = None,
    ):
        self.name = name
        self.registry = registry
        self.signing_key = signing_key
        self.trust = trust
        self.backend = backend
        self.scenario = scenario
        self.gateway_channel = gateway_channel
        self.escalation_timeout = escalation_timeout
        self.artifacts_dir = Path(artifacts_dir) if artifacts_dir else None
        self.store = EnvelopeStore()
        self.tasks: dict[str, TaskState] = {}
        self.audit: list[dict] = []
        self._audit_seq = 0
        self._nonce_seq = 0
        self._pending: dict[str, _PendingEscalation] = {}
        self._lock = threading.Lock()

    # -- audit ----------------------------------------------------------------

    def _audit_event(self, task_id: str, event: str, body: dict) -> None:
        with self._lock:
            self._audit_seq += 1
            record = {
                "seq": self._audit_seq,
                "service": self.name,
                "task_id": task_id,
                "event": event,
                **body,
                "ts": datetime.datetime.now(datetime.timezone.utc).isoformat(),
            }
        self.audit.append(record)

    def audit_log(self) -> list[dict]:
        return list(self.audit)

    # -- message entry point ----------------------------------------------------

    def handle(self, message: dict) -> dict:
        kind = message.get("type")
        if kind == msg.TASK_SUBMIT:
            return self.handle_task_submit(message)
        if kind == msg.TOOL_CALL:
            return self.handle_tool_call(message)
        if kind == msg.ESCALATION_RESPONSE:
            return self.handle_escalation_response(message)
        return {"ok": False, "error": "unknown-message-type", "detail": str(kind)}

    # -- task submission ----------------------------------------------------------

    def handle_task_submit(self, message: dict) -> dict:
        task = msg.task_from_wire(message["task"])
        services = list(message.get("services", []))

        def nack(error: str) -> dict:
            return {"type": msg.SLICE_ACK, "task_id": task.task_id, "service": self.name,
                    "ok": False, "error": error, "slices": [], "artifact_hash": "", "program_hash": ""}

        if not task.verify(self.trust):
            return nack("signature-invalid")
        if task.task_id in self.tasks:
            return nack("duplicate-task")

        registry = self.registry.restrict(services) if services else self.registry
        generation = generate_program(task, registry, self.backend)
        program = generation.program
        slices = derive_slices(program)
        mine = [s for s in slices if s.service == self.name]
        rules = compile_rules(mine)
        phash = program_hash(program)
        artifact = ruleset_to_artifact(rules, task.task_id, self.name, phash)
        rendered = [render_slice(s) for s in mine]
        state = TaskState(
            enforcement=EnforcementState(rules=rules),
            slices_rendered=rendered,
            artifact=artifact,
            generation=generation,
            program_hash=phash,
        )
        self.tasks[task.task_id] = state
        if self.artifacts_dir:
            self.artifacts_dir.mkdir(parents=True, exist_ok=True)
            out = self.artifacts_dir / f"{task.task_id}.{self.name}.rules.json"
            out.write_text(json.dumps(artifact, indent=2, sort_keys=True) + "\n")
        self._audit_event(task.task_id, "submit", {
            "rule_count": rules.rule_count,
            "program_hash": phash,
            "fallback_used": generation.fallback_used,
        })
        return {
            "type": msg.SLICE_ACK,
            "task_id": task.task_id,
            "service": self.name,
            "ok": True,
            "slices": rendered,
            "artifact_hash": artifact_hash(artifact),
            "program_hash": phash,
        }

    # -- tool calls --------------------------------------------------------------

    def handle_tool_call(self, message: dict) -> dict:
        call_id = message.get("call_id", "")
        task_id = message.get("task_id", "")

        def result(decision: Decision, envelope: Envelope | None = None) -> dict:
            doc = {"type": msg.TOOL_RESULT, "task_id": task_id, "call_id": call_id,
                   "decision": decision.to_wire()}
            if envelope is not None:
                doc["envelope"] = envelope.to_wire()
            return doc

        state = self.tasks.get(task_id)
        if state is None:
            decision = deny("unknown-task", f"no rules for task {task_id!r} on {self.name}")
            self._audit_event(task_id, "decision", {"tool": message.get("tool", ""), "decision": decision.to_wire()})
            return result(decision)
        try:
            args = msg.args_from_wire(message)
            attachments = msg.attachments_from_wire(message)
            tool = str(message["tool"])
        except (KeyError, ValueError, TypeError) as exc:
            decision = deny("malformed-request", str(exc))
            self._audit_event(task_id, "decision", {"tool": message.get("tool", ""), "decision": decision.to_wire()})
            return result(decision)

        req = CallRequest(task_id=task_id, tool=tool, args=args,
                          attachments=attachments, caller=message.get("caller", "agent"))
        decision, envelope = self._decide_and_execute(req, state)
        if decision.kind == "escalate":
            # the lock is not held here: escalation blocks this call, not the task
            answer = self._escalate(task_id, call_id, decision)
            self._audit_event(task_id, "escalation-resolved", {"tool": tool, "outcome": answer})
            if answer != msg.APPROVE:
                return result(deny("escalation-denied", decision.question or ""))
            with state.lock:
                record_approval(state.enforcement, req)
            decision, envelope = self._decide_and_execute(req, state)
        return result(decision, envelope)

    def _decide_and_execute(self, req: CallRequest, state: TaskState) -> tuple[Decision, Envelope | None]:
        with state.lock:  # calls for one task are decided serially; consumption is atomic with Permit
            decision = check_call(req, state.enforcement, self.store, self.trust, self.registry)
            self._audit_event(req.task_id, "decision", {
                "tool": req.tool,
                "args": [value_to_wire(a) for a in req.args],
                "decision": decision.to_wire(),
            })
            envelope = self._execute(req, decision, state) if decision.kind == "permit" else None
        return decision, envelope

    def _execute(self, req: CallRequest, decision: Decision, state: TaskState) -> Envelope | None:
        assert decision.key is not None
        if decision.authorized_by == BY_SLICE:
            compiled = state.enforcement.rules.by_key(decision.key)
            key_text = compiled.call_key_text() if compiled else explicit_key_text(req)
        else:
            key_text = explicit_key_text(req)
        existing = self.store.lookup(req.task_id, key_text)
        if decision.authorized_by == BY_REPLAY and existing is not None:
            return existing  # read-only replay: pinned envelope, no re-execution
        spec = self.registry.get(req.tool)
        if spec is None:
            return None
        try:
            value = invoke_tool(self.scenario, spec, handler_for(req.tool), req.args)
        except (SchemaViolation, ToolExecutionError) as exc:
            self._audit_event(req.task_id, "execution-error", {"tool": req.tool, "detail": str(exc)})
            return None
        envelope = seal(value, key_text, req.task_id, self.name, self.signing_key, self.trust)
        try:
            self.store.put(envelope)
        except StoreConflict:
            pinned = self.store.lookup(req.task_id, key_text)
            return pinned  # the first sealed value stays authoritative for the task
        return envelope

    # -- escalation --------------------------------------------------------------

    def _escalate(self, task_id: str, call_id: str, decision: Decision) -> str:
        if self.gateway_channel is None:
            return msg.DENY  # no user to ask; fail closed
        with self._lock:
            self._nonce_seq += 1
            nonce = f"{task_id}:{self.name}:{self._nonce_seq}"
            pending = _PendingEscalation()
            self._pending[nonce] = pending
        self.gateway_channel({
            "type": msg.ESCALATION_REQUEST,
            "task_id": task_id,
            "nonce": nonce,
            "service": self.name,
            "question": decision.question or "",
            "operation": decision.operation or "",
            "call_id": call_id,
        })
        pending.event.wait(self.escalation_timeout)
        with self._lock:
            self._pending.pop(nonce, None)
        return pending.decision or msg.DENY

    def handle_escalation_response(self, message: dict) -> dict:
        nonce = message.get("nonce", "")
        decision = message.get("decision", "")
        signature = message.get("user_signature", "")
        try:
            self.trust.user_key().verify(base64.b64decode(signature), msg.escalation_payload(nonce, decision))
        except Exception:
            return {"ok": False, "error": "signature-invalid"}
        with self._lock:
            pending = self._pending.get(nonce)
            if pending is None or pending.decision is not None:
                return {"ok": False, "error": "unknown-nonce"}
            pending.decision = decision if decision in (msg.APPROVE, msg.DENY) else msg.DENY
        pending.event.set()
        return {"ok": True}
