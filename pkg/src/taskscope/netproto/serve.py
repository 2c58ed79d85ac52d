"""Long-running demo deployment: gateway HTTP + per-task service servers.

Submitting a case from the dashboard (or curl) builds that case's services
as real TCP message servers, fans the signed task out, then drives the
scripted agent in a background thread — injections included, so the
escalation dialog actually appears.  Escalations stay pending until the
user answers through POST /escalations/{nonce} (or the timeout denies).
"""

from __future__ import annotations

import threading

from ..codegen import sign_task
from ..environment.suites import SuiteCase
from ..keys import USER, KeyRing
from .agent import AgentRuntime, StepOutcome
from .deployment import MULTI_HOST, build_deployment
from .gateway import Gateway, GatewayHttpServer, interactive_policy


class ServeApp:
    def __init__(
        self,
        cases: list[SuiteCase],
        keyring: KeyRing | None = None,
        host: str = "127.0.0.1",
        http_port: int = 8642,
        static_root: str | None = None,
        escalation_timeout: float = 300.0,
        session_token: str | None = None,
    ):
        self.cases = {c.task_id: c for c in cases}
        identities = sorted({svc for c in cases for svc in c.services}) + [USER]
        self.keyring = keyring or KeyRing.generate(identities)
        self.host = host
        self.escalation_timeout = escalation_timeout
        self.gateway = Gateway(self.keyring.private(USER), {}, policy=interactive_policy)
        self.http = GatewayHttpServer(
            host, http_port, self.gateway,
            launcher=self.launch,
            cases=[{"case": c.task_id, "suite": c.suite, "text": c.text, "services": list(c.services),
                    "injections": [i.label for i in c.injections]}
                   for c in cases],
            static_root=static_root,
            session_token=session_token,
        )
        self._lock = threading.Lock()

    def launch(self, body: dict) -> str:
        case_id = body.get("case", "")
        case = self.cases.get(case_id)
        if case is None:
            raise KeyError(case_id)
        injected = bool(body.get("injected", True))
        with self._lock:
            dep = build_deployment(
                case,
                mode=MULTI_HOST,
                keyring=self.keyring,
                policy=interactive_policy,
                escalation_timeout=self.escalation_timeout,
                host=self.host,
            )
            # reuse the shared gateway: per-task channel routing + shared event feed
            task_id = self.gateway.new_task_id(case.task_id)
            self.gateway.register_task_channels(task_id, dep.agent_channels)
            for runtime in dep.services.values():
                runtime.gateway_channel = self.gateway.handle

        signed = sign_task(task_id, case.text, case.context, self.keyring.private(USER))
        acks = self.gateway.submit_task(signed, list(case.services))

        def emit_outcome(outcome: StepOutcome) -> None:
            self.gateway.emit(task_id, "call_decision", {
                "kind": outcome.kind,
                "tool": outcome.tool,
                "decision": outcome.decision,
                "label": outcome.label,
            })

        def run_agent() -> None:
            try:
                agent = AgentRuntime(
                    task_id=task_id,
                    program=dep.agent_program(case),
                    channels=dep.agent_channels,
                    acks=acks,
                    on_outcome=emit_outcome,
                )
                run = agent.run(case.injections if injected else ())
                self.gateway.emit(task_id, "task_done", {
                    "aborted": run.aborted,
                    "permits": sum(1 for o in run.outcomes if o.permitted),
                    "steps": len(run.outcomes),
                })
            finally:
                dep.stop()

        threading.Thread(target=run_agent, name=f"agent-{task_id}", daemon=True).start()
        return task_id

    def start(self) -> None:
        self.http.start()

    def stop(self) -> None:
        self.http.stop()

    @property
    def http_port(self) -> int:
        return self.http.port
