"""Wire message schemas.

Every message is one JSON object per line (newline-delimited) and carries
``type`` and ``task_id``.  The same dict shapes flow through in-process
dispatch in single-host mode and over TCP in multi-host mode, so the two
modes are behaviorally identical by construction.  Schemas are documented
in docs/protocol.md.
"""

from __future__ import annotations

import base64
import struct

from ..codegen import SignedTask
from ..envelope import Envelope
from ..interchange import dumps_canonical, value_from_wire, value_to_wire
from ..values import Value

TASK_SUBMIT = "task_submit"
SLICE_ACK = "slice_ack"
TOOL_CALL = "tool_call"
TOOL_RESULT = "tool_result"
ESCALATION_REQUEST = "escalation_request"
ESCALATION_RESPONSE = "escalation_response"

APPROVE = "approve"
DENY = "deny"


def task_to_wire(task: SignedTask) -> dict:
    return {
        "task_id": task.task_id,
        "text": task.text,
        "context": dict(task.context),
        "user_signature": base64.b64encode(task.user_signature).decode("ascii"),
    }


def task_from_wire(doc: dict) -> SignedTask:
    return SignedTask(
        task_id=doc["task_id"],
        text=doc["text"],
        context=dict(doc["context"]),
        user_signature=base64.b64decode(doc["user_signature"]),
    )


def task_submit(task: SignedTask, services: list[str]) -> dict:
    return {"type": TASK_SUBMIT, "task_id": task.task_id, "task": task_to_wire(task), "services": services}


def tool_call(task_id: str, call_id: str, tool: str, args: tuple[Value, ...],
              attachments: list[Envelope], caller: str = "agent") -> dict:
    return {
        "type": TOOL_CALL,
        "task_id": task_id,
        "call_id": call_id,
        "tool": tool,
        "args": [value_to_wire(a) for a in args],
        "attachments": [env.to_wire() for env in attachments],
        "caller": caller,
    }


def args_from_wire(doc: dict) -> tuple[Value, ...]:
    return tuple(value_from_wire(a) for a in doc["args"])


def attachments_from_wire(doc: dict) -> tuple[Envelope, ...]:
    return tuple(Envelope.from_wire(e) for e in doc.get("attachments", []))


def escalation_payload(nonce: str, decision: str) -> bytes:
    body = dumps_canonical({"decision": decision, "nonce": nonce}).encode("utf-8")
    return struct.pack(">I", len(body)) + body
