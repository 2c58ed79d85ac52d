"""Protocol runtimes: services, the untrusted agent, and the user gateway."""

from .agent import AgentRun, AgentRuntime, StepOutcome, parse_ack_slices, select_attachments
from .deployment import (
    MULTI_HOST,
    SINGLE_HOST,
    Deployment,
    build_deployment,
    fixture_backend,
    strip_timestamps,
)
from .gateway import Gateway, GatewayHttpServer, auto_deny_policy, interactive_policy
from .service import ServiceRuntime
from .transport import InProcChannel, MessageServer, TcpChannel

__all__ = [
    "AgentRun",
    "AgentRuntime",
    "Deployment",
    "Gateway",
    "GatewayHttpServer",
    "InProcChannel",
    "MessageServer",
    "MULTI_HOST",
    "SINGLE_HOST",
    "ServiceRuntime",
    "StepOutcome",
    "TcpChannel",
    "auto_deny_policy",
    "build_deployment",
    "fixture_backend",
    "interactive_policy",
    "parse_ack_slices",
    "select_attachments",
    "strip_timestamps",
]
