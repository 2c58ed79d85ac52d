"""Runtime enforcement: Permit / Deny / Escalate for each concrete call.

Default-deny: a call permits only when an unconsumed call key for its tool
fully matches — the guard concretizes to true and every operand expression
evaluates (through verified envelopes) to a value exactly equal to the
concrete argument.  Anything else escalates with a precise, operand-naming
question; Deny is reserved for malformed requests and unknown tasks.

A key is consumed by the Permit it grants.  Replaying a previously
permitted request yields Escalate unless the tool is schema-marked
read-only, in which case the pinned envelope is re-served without
re-execution.  A recorded escalation approval permits the byte-identical
request once, tagged as explicitly user-authorized rather than
slice-authorized.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from .envelope import Envelope, EnvelopeStore, TrustStore, verify
from .environment.registry import ToolRegistry
from .interchange import canonical_value_text
from .rulegen import CallKey, CompiledCall, RuleSet
from .symexpr import (
    Call,
    Lit,
    Pred,
    canonical_key,
    evaluate,
    outer_tool_calls,
    value_to_expr,
)
from .values import EvalError, Value, truthy, values_equal

PERMIT = "permit"
DENY = "deny"
ESCALATE = "escalate"

BY_SLICE = "slice"
BY_USER = "user"
BY_REPLAY = "replay"


@dataclass(frozen=True)
class CallRequest:
    task_id: str
    tool: str
    args: tuple[Value, ...]
    attachments: tuple[Envelope, ...] = ()
    caller: str = "agent"

    def digest(self) -> str:
        body = canonical_value_text([self.task_id, self.tool, list(self.args)])
        return hashlib.sha256(body.encode("utf-8")).hexdigest()

    def operation_text(self) -> str:
        return canonical_key(Call(self.tool, tuple(value_to_expr(a) for a in self.args)))


@dataclass(frozen=True)
class Decision:
    kind: str  # permit | deny | escalate
    key: CallKey | None = None
    authorized_by: str | None = None  # slice | user | replay (permit only)
    reason: str | None = None         # deny only
    detail: str | None = None
    question: str | None = None       # escalate only
    operation: str | None = None

    def to_wire(self) -> dict:
        doc: dict = {"kind": self.kind}
        if self.key is not None:
            doc["key"] = {"tool": self.key.tool, "ordinal": self.key.ordinal}
        for name in ("authorized_by", "reason", "detail", "question", "operation"):
            v = getattr(self, name)
            if v is not None:
                doc[name] = v
        return doc

    @classmethod
    def from_wire(cls, doc: dict) -> "Decision":
        key = doc.get("key")
        return cls(
            kind=doc["kind"],
            key=CallKey(key["tool"], key["ordinal"]) if key else None,
            authorized_by=doc.get("authorized_by"),
            reason=doc.get("reason"),
            detail=doc.get("detail"),
            question=doc.get("question"),
            operation=doc.get("operation"),
        )


def permit(key: CallKey, by: str = BY_SLICE) -> Decision:
    return Decision(kind=PERMIT, key=key, authorized_by=by)


def deny(reason: str, detail: str = "") -> Decision:
    return Decision(kind=DENY, reason=reason, detail=detail)


def escalate(req: CallRequest) -> Decision:
    op = req.operation_text()
    return Decision(kind=ESCALATE, question=f"Do you want to allow {op}?", operation=op)


@dataclass(frozen=True)
class Failure:
    """Concretization failed: every unresolved key, or an evaluation error."""

    missing: tuple[str, ...] = ()
    error: str | None = None


@dataclass
class EnforcementState:
    """Per-(task, service) mutable enforcement state.

    The owning runtime serializes calls for one task, so no lock here;
    consumption updates happen atomically with the Permit decision under
    that serialization.
    """

    rules: RuleSet
    consumed: set[CallKey] = field(default_factory=set)
    permitted: dict[str, CallKey] = field(default_factory=dict)   # request digest -> key
    approvals: set[str] = field(default_factory=set)              # one-shot explicit approvals


def _bindings(exprs: list[Pred], store: EnvelopeStore, attachments: tuple[Envelope, ...],
              trust: TrustStore, task_id: str) -> tuple[dict[str, Value], list[str]]:
    """Resolve every outer tool-call subterm via store-then-attachments."""
    verified: dict[str, Value] = {}
    for env in attachments:
        if env.task_id == task_id and verify(env, trust):
            verified.setdefault(env.key, env.value)
    bindings: dict[str, Value] = {}
    missing: list[str] = []
    for expr in exprs:
        for call in outer_tool_calls(expr):
            key = canonical_key(call)
            if key in bindings:
                continue
            stored = store.lookup(task_id, key)
            if stored is not None:
                bindings[key] = stored.value
            elif key in verified:
                bindings[key] = verified[key]
            elif key not in missing:
                missing.append(key)
    return bindings, missing


def concretize(key: str, store: EnvelopeStore, attachments: tuple[Envelope, ...],
               trust: TrustStore, task_id: str) -> Value | Failure:
    """Resolve a symbolic key to its concrete value, innermost calls first."""
    from .symexpr import parse_key

    expr = parse_key(key)
    bindings, missing = _bindings([expr], store, attachments, trust, task_id)
    if missing:
        return Failure(missing=tuple(missing))
    try:
        return evaluate(expr, bindings)
    except EvalError as exc:
        return Failure(error=str(exc))


def _match_candidate(cand: CompiledCall, req: CallRequest, store: EnvelopeStore,
                     trust: TrustStore) -> bool:
    exprs: list[Pred] = [cand.guard, *cand.args]
    bindings, missing = _bindings(exprs, store, req.attachments, trust, req.task_id)
    if missing:
        return False
    if len(req.args) != len(cand.args):
        return False
    try:
        if not truthy(evaluate(cand.guard, bindings)):
            return False
        for expr, concrete in zip(cand.args, req.args):
            if isinstance(expr, Lit) and expr.value is None:
                if concrete is not None:
                    return False
                continue
            if not values_equal(evaluate(expr, bindings), concrete):
                return False
    except EvalError:
        return False
    return True


def check_call(req: CallRequest, state: EnforcementState, store: EnvelopeStore,
               trust: TrustStore, registry: ToolRegistry) -> Decision:
    digest = req.digest()
    if digest in state.approvals:
        state.approvals.discard(digest)
        key = state.permitted.get(digest, CallKey(req.tool, 0))
        return permit(key, BY_USER)
    if req.tool in state.rules.allowed_calls:
        for cand in state.rules.candidates(req.tool):
            if cand.key in state.consumed:
                continue
            if _match_candidate(cand, req, store, trust):
                state.consumed.add(cand.key)
                state.permitted[digest] = cand.key
                return permit(cand.key, BY_SLICE)
    if digest in state.permitted and registry.is_read_only(req.tool):
        return permit(state.permitted[digest], BY_REPLAY)
    return escalate(req)


def record_approval(state: EnforcementState, req: CallRequest) -> None:
    """An explicit user approval authorizes this exact operation once."""
    state.approvals.add(req.digest())


def explicit_key_text(req: CallRequest) -> str:
    """Envelope key for an explicitly approved (off-slice) call's result."""
    return req.operation_text()
