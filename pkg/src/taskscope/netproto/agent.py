"""The (untrusted) agent runtime.

Executes a task script: the faithful call sequence obtained by interpreting
the fixture program over real results, optionally interleaved with injected
spurious calls.  The agent caches every envelope it receives and, before
each faithful call, attaches exactly the envelopes whose keys are tool-call
subterms of that call's slice closure (parsed from the services' acks).

Nothing here is trusted by services; an ``attachment_filter`` hook lets
adversarial tests tamper with, drop, or substitute attachments on the way
out.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

from ..dsl import Assignment, Conditional, Pass, TaskProgram, ToolCallStmt
from ..envelope import Envelope
from ..environment.suites import Injection
from ..symexpr import canonical_key, evaluate, outer_tool_calls, tool_calls
from ..slicer import Slice, parse_slice
from ..values import EvalError, Value, truthy
from . import messages as msg
from .transport import Channel

AttachmentFilter = Callable[[list[Envelope], "StepOutcome"], list[Envelope]]


@dataclass
class StepOutcome:
    index: int
    kind: str  # "faithful" | "injected"
    tool: str
    args: tuple[Value, ...]
    decision: dict = field(default_factory=dict)
    label: str = ""

    @property
    def permitted(self) -> bool:
        return self.decision.get("kind") == "permit"


@dataclass
class AgentRun:
    outcomes: list[StepOutcome] = field(default_factory=list)
    aborted: str | None = None

    @property
    def faithful(self) -> list[StepOutcome]:
        return [o for o in self.outcomes if o.kind == "faithful"]

    @property
    def injected(self) -> list[StepOutcome]:
        return [o for o in self.outcomes if o.kind == "injected"]


def parse_ack_slices(acks: Mapping[str, dict]) -> dict[tuple[str, int], Slice]:
    """(tool, ordinal) -> slice, from each service's rendered slices in order."""
    view: dict[tuple[str, int], Slice] = {}
    for ack in acks.values():
        counts: dict[str, int] = {}
        for text in ack.get("slices", []):
            s = parse_slice(text)
            ordinal = counts.get(s.tool, 0) + 1
            counts[s.tool] = ordinal
            view[(s.tool, ordinal)] = Slice(tool=s.tool, ordinal=ordinal, clauses=s.clauses, args=s.args)
    return view


def select_attachments(view: Mapping[tuple[str, int], Slice], tool: str, ordinal: int,
                       cache: Mapping[str, Envelope]) -> list[Envelope]:
    """Envelopes for the tool-call subterms of the target's args/guard closure."""
    s = view.get((tool, ordinal))
    if s is None:
        return []
    keys: list[str] = []
    closure = [*s.inline_args(), *s.inline_guard_conjuncts()]
    for expr in closure:
        for call in outer_tool_calls(expr):
            key = canonical_key(call)
            if key not in keys:
                keys.append(key)
    return [cache[k] for k in keys if k in cache]


class AgentRuntime:
    def __init__(
        self,
        task_id: str,
        program: TaskProgram,
        channels: Mapping[str, Channel],
        acks: Mapping[str, dict],
        attachment_filter: AttachmentFilter | None = None,
        attach_all_on_injection: bool = True,
        on_outcome: Callable[["StepOutcome"], None] | None = None,
    ):
        self.task_id = task_id
        self.program = program
        self.channels = channels
        self.view = parse_ack_slices(acks)
        self.cache: dict[str, Envelope] = {}
        self.attachment_filter = attachment_filter
        self.attach_all_on_injection = attach_all_on_injection
        self._call_seq = 0
        self.on_outcome = on_outcome
        # ordinals are assigned over *program* order (the slicer's numbering),
        # which differs from execution order when guarded branches are skipped
        self._site_ordinals = {id(site.call): site.ordinal for site in program.call_sites()}

    # -- transport ------------------------------------------------------------

    def _send_call(self, outcome: StepOutcome, attachments: list[Envelope]) -> Value:
        service = outcome.tool.split(".", 1)[0]
        channel = self.channels.get(service)
        if channel is None:
            outcome.decision = {"kind": "deny", "reason": "unknown-service"}
            return None
        if self.attachment_filter is not None:
            attachments = self.attachment_filter(list(attachments), outcome)
        self._call_seq += 1
        reply = channel.request(msg.tool_call(
            self.task_id, f"c{self._call_seq}", outcome.tool, outcome.args, attachments))
        outcome.decision = reply.get("decision", {"kind": "deny", "reason": "no-reply"})
        env_doc = reply.get("envelope")
        value = None
        if env_doc and outcome.permitted:
            envelope = Envelope.from_wire(env_doc)
            self.cache.setdefault(envelope.key, envelope)
            value = envelope.value
        if self.on_outcome is not None:
            self.on_outcome(outcome)
        return value

    # -- script execution -------------------------------------------------------

    def run(self, injections: tuple[Injection, ...] = ()) -> AgentRun:
        run = AgentRun()
        pending = sorted(injections, key=lambda i: i.after_step)
        step = 0

        def fire_injections() -> None:
            while pending and pending[0].after_step <= step:
                inj = pending.pop(0)
                outcome = StepOutcome(index=len(run.outcomes), kind="injected",
                                      tool=inj.tool, args=inj.args, label=inj.label)
                attachments = list(self.cache.values()) if self.attach_all_on_injection else []
                self._send_call(outcome, attachments)
                run.outcomes.append(outcome)

        def faithful_call(tool: str, args: tuple[Value, ...], ordinal: int) -> Value:
            nonlocal step
            outcome = StepOutcome(index=len(run.outcomes), kind="faithful", tool=tool, args=args)
            attachments = select_attachments(self.view, tool, ordinal, self.cache)
            value = self._send_call(outcome, attachments)
            run.outcomes.append(outcome)
            step += 1
            fire_injections()
            if not outcome.permitted:
                raise _CallRefused(tool)
            return value

        env: dict[str, Value] = {}

        def eval_with_calls(expr: object) -> Value:
            bindings: dict[str, Value] = {}
            for call in tool_calls(expr):  # type: ignore[arg-type]
                args = tuple(evaluate(a, {}, env) for a in call.args)
                ordinal = self._site_ordinals.get(id(call), 1)
                value = faithful_call(call.tool, args, ordinal)
                bindings[canonical_key(call)] = value
            return evaluate(expr, bindings, env)  # type: ignore[arg-type]

        def exec_block(stmts: tuple) -> None:
            for st in stmts:
                if isinstance(st, Pass):
                    continue
                if isinstance(st, Assignment):
                    env[st.name] = eval_with_calls(st.expr)
                elif isinstance(st, ToolCallStmt):
                    eval_with_calls(st.call)
                elif isinstance(st, Conditional):
                    try:
                        taken = truthy(evaluate(st.guard, {}, env))
                    except EvalError:
                        taken = False  # unbound guard names mean the defining branch never ran
                    if taken:
                        exec_block(st.body)

        try:
            fire_injections()  # after_step 0 fires before any faithful call
            exec_block(self.program.body)
        except _CallRefused as refusal:
            run.aborted = str(refusal)
        except EvalError as exc:
            run.aborted = str(exc)
        # injections scheduled past the end of the script still fire
        step = float("inf")  # type: ignore[assignment]
        fire_injections()
        return run


class _CallRefused(RuntimeError):
    pass
