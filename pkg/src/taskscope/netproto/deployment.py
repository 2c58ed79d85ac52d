"""Deployment wiring: the same runtimes behind in-process or TCP transports.

Single-host mode dispatches the identical wire-shaped messages in process;
multi-host mode binds each service and the gateway's message endpoint to
localhost TCP ports.  Decisions, envelopes, and audit logs are byte-equal
across modes (timestamps aside) because the runtimes and keys are shared
and Ed25519 is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from ..codegen import FixtureBackend, FixtureEntry, GeneratorBackend, Usage, normalize_source, sign_task
from ..dsl import TaskProgram, fallback_program
from ..environment.registry import ToolRegistry
from ..environment.services import build_registry
from ..environment.suites import SuiteCase
from ..keys import USER, KeyRing
from .agent import AgentRun, AgentRuntime, AttachmentFilter
from .gateway import EscalationPolicy, Gateway, auto_deny_policy
from .service import ServiceRuntime
from .transport import Channel, InProcChannel, MessageServer, TcpChannel

SINGLE_HOST = "single-host"
MULTI_HOST = "multi-host"


def fixture_backend(cases: list[SuiteCase]) -> FixtureBackend:
    corpus = {
        c.task_id: FixtureEntry(
            source=c.fixture_source,
            usage=Usage(
                c.fixture_usage.get("prompt_tokens", 0),
                c.fixture_usage.get("completion_tokens", 0),
                c.fixture_usage.get("model", "fixture-model"),
            ),
        )
        for c in cases
    }
    return FixtureBackend(corpus)


@dataclass
class Deployment:
    mode: str
    keyring: KeyRing
    registry: ToolRegistry
    services: dict[str, ServiceRuntime]
    gateway: Gateway
    agent_channels: dict[str, Channel]
    servers: list[MessageServer] = field(default_factory=list)

    def submit(self, case: SuiteCase, task_id: str | None = None):
        tid = self.gateway.new_task_id(task_id or case.task_id)
        task = sign_task(tid, case.text, case.context, self.keyring.private(USER))
        acks = self.gateway.submit_task(task, list(case.services))
        return task, acks

    def agent_program(self, case: SuiteCase) -> TaskProgram:
        program = normalize_source(case.fixture_source, self.registry.restrict(case.services))
        return program if program is not None else fallback_program()

    def run_agent(self, case: SuiteCase, task_id: str, acks: Mapping[str, dict],
                  injected: bool = False,
                  attachment_filter: AttachmentFilter | None = None) -> AgentRun:
        agent = AgentRuntime(
            task_id=task_id,
            program=self.agent_program(case),
            channels=self.agent_channels,
            acks=acks,
            attachment_filter=attachment_filter,
        )
        return agent.run(case.injections if injected else ())

    def audit_logs(self) -> dict[str, list[dict]]:
        return {name: runtime.audit_log() for name, runtime in sorted(self.services.items())}

    def generation_usage(self, task_id: str) -> dict[str, Usage]:
        out: dict[str, Usage] = {}
        for name, runtime in self.services.items():
            state = runtime.tasks.get(task_id)
            if state is not None:
                out[name] = state.generation.usage
        return out

    def stop(self) -> None:
        for server in self.servers:
            server.stop()


def build_deployment(
    case: SuiteCase,
    mode: str = SINGLE_HOST,
    backend: GeneratorBackend | None = None,
    keyring: KeyRing | None = None,
    policy: EscalationPolicy = auto_deny_policy,
    escalation_timeout: float = 5.0,
    artifacts_dir: str | Path | None = None,
    host: str = "127.0.0.1",
) -> Deployment:
    services = list(case.services)
    ring = keyring or KeyRing.generate(services + [USER])
    trust = ring.trust_store()
    registry = build_registry()
    gen_backend = backend or fixture_backend([case])
    scenario = case.scenario.fork()

    gateway = Gateway(user_key=ring.private(USER), service_channels={}, policy=policy)
    runtimes: dict[str, ServiceRuntime] = {}
    servers: list[MessageServer] = []
    agent_channels: dict[str, Channel] = {}

    if mode == SINGLE_HOST:
        gateway_channel = InProcChannel(gateway.handle).request
        for name in services:
            runtime = ServiceRuntime(
                name=name,
                registry=registry,
                signing_key=ring.private(name),
                trust=trust,
                backend=gen_backend,
                scenario=scenario,
                gateway_channel=gateway_channel,
                escalation_timeout=escalation_timeout,
                artifacts_dir=artifacts_dir,
            )
            runtimes[name] = runtime
            channel = InProcChannel(runtime.handle)
            gateway.channels[name] = channel
            agent_channels[name] = channel
    elif mode == MULTI_HOST:
        gateway_server = MessageServer(host, 0, gateway.handle)
        gateway_server.start()
        servers.append(gateway_server)
        gateway_channel = TcpChannel(host, gateway_server.port).request
        for name in services:
            runtime = ServiceRuntime(
                name=name,
                registry=registry,
                signing_key=ring.private(name),
                trust=trust,
                backend=gen_backend,
                scenario=scenario,
                gateway_channel=gateway_channel,
                escalation_timeout=escalation_timeout,
                artifacts_dir=artifacts_dir,
            )
            runtimes[name] = runtime
            server = MessageServer(host, 0, runtime.handle)
            server.start()
            servers.append(server)
            gateway.channels[name] = TcpChannel(host, server.port)
            agent_channels[name] = TcpChannel(host, server.port)
    else:
        raise ValueError(f"unknown mode {mode!r}")

    return Deployment(
        mode=mode,
        keyring=ring,
        registry=registry,
        services=runtimes,
        gateway=gateway,
        agent_channels=agent_channels,
        servers=servers,
    )


def strip_timestamps(audit: Mapping[str, list[dict]]) -> dict[str, list[dict]]:
    return {
        service: [{k: v for k, v in record.items() if k != "ts"} for record in records]
        for service, records in audit.items()
    }
