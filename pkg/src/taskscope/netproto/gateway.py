"""User gateway: task submission fan-out, event feed, escalation decisions.

The gateway is the user's trusted endpoint.  It holds the user signing key
(so browsers never handle keys), signs submitted tasks, fans them out to the
involved services, brokers escalation questions, and exposes the HTTP
surface the dashboard consumes:

    GET  /cases                      loaded demo cases
    GET  /tasks                      submitted tasks with status
    POST /tasks                      {"case": id} or {"text", "context", "services"}
    GET  /tasks/{id}/slices          per-service rendered slices + artifact hashes
    GET  /tasks/{id}/events?after=N&timeout=S     incremental long-poll
    POST /escalations/{nonce}        {"decision": "approve"|"deny"}

Escalation responses are signed over (nonce, decision); nonces are
single-use.  Events carry gateway-assigned sequence ids so clients can
deduplicate at-least-once deliveries.
"""

from __future__ import annotations

import base64
import json
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Callable, Mapping
from urllib.parse import parse_qs, unquote, urlparse

from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey

from ..codegen import SignedTask, sign_task
from . import messages as msg
from .transport import Channel

# policy(question, operation, task_id) -> "approve" | "deny" | None (leave pending)
EscalationPolicy = Callable[[str, str, str], str | None]


def auto_deny_policy(question: str, operation: str, task_id: str) -> str:
    return msg.DENY


def interactive_policy(question: str, operation: str, task_id: str) -> None:
    return None


@dataclass
class PendingEscalation:
    nonce: str
    task_id: str
    service: str
    question: str
    operation: str
    status: str = "pending"  # pending | approved | denied | expired


@dataclass
class TaskEntry:
    task: SignedTask
    services: list[str]
    acks: dict[str, dict] = field(default_factory=dict)
    status: str = "submitted"


class Gateway:
    def __init__(
        self,
        user_key: Ed25519PrivateKey,
        service_channels: Mapping[str, Channel],
        policy: EscalationPolicy = auto_deny_policy,
    ):
        self.user_key = user_key
        self.channels = dict(service_channels)
        self.policy = policy
        self.tasks: dict[str, TaskEntry] = {}
        self.escalations: dict[str, PendingEscalation] = {}
        self.events: list[dict] = []
        self._event_cond = threading.Condition()
        self._lock = threading.Lock()
        self._task_seq = 0
        self._task_channels: dict[str, dict[str, Channel]] = {}

    def register_task_channels(self, task_id: str, channels: Mapping[str, Channel]) -> None:
        """Serve mode hosts per-task service instances; route by task."""
        self._task_channels[task_id] = dict(channels)

    def _channel(self, task_id: str, service: str) -> Channel | None:
        scoped = self._task_channels.get(task_id)
        if scoped and service in scoped:
            return scoped[service]
        return self.channels.get(service)

    # -- events -------------------------------------------------------------

    def emit(self, task_id: str, kind: str, body: dict) -> None:
        with self._event_cond:
            event = {"id": len(self.events) + 1, "task_id": task_id, "type": kind, **body}
            self.events.append(event)
            self._event_cond.notify_all()

    def events_after(self, after: int, task_id: str | None = None, timeout: float = 0.0) -> list[dict]:
        def matching() -> list[dict]:
            return [e for e in self.events[after:] if task_id is None or e["task_id"] == task_id]

        with self._event_cond:
            found = matching()
            if found or timeout <= 0:
                return found
            self._event_cond.wait(timeout)
            return matching()

    # -- task submission -------------------------------------------------------

    def new_task_id(self, base: str) -> str:
        with self._lock:
            if base not in self.tasks:
                return base
            self._task_seq += 1
            return f"{base}~{self._task_seq}"  # '~' is URL-safe; rerun ids appear in paths

    def submit_task(self, task: SignedTask, services: list[str]) -> dict[str, dict]:
        entry = TaskEntry(task=task, services=list(services))
        self.tasks[task.task_id] = entry
        self.emit(task.task_id, "task_submitted", {"text": task.text, "services": list(services)})
        message = msg.task_submit(task, list(services))
        program_hashes: set[str] = set()
        for service in services:
            channel = self._channel(task.task_id, service)
            if channel is None:
                entry.acks[service] = {"ok": False, "error": "service-unavailable", "slices": []}
                continue
            try:
                ack = channel.request(message)
            except (ConnectionError, OSError) as exc:
                ack = {"ok": False, "error": "service-unavailable", "detail": str(exc), "slices": []}
            entry.acks[service] = ack
            if ack.get("ok"):
                program_hashes.add(ack.get("program_hash", ""))
            self.emit(task.task_id, "slice_ack", {
                "service": service,
                "ok": bool(ack.get("ok")),
                "error": ack.get("error"),
                "slices": ack.get("slices", []),
                "artifact_hash": ack.get("artifact_hash", ""),
            })
        if len(program_hashes) > 1:
            # services generated divergent programs; surfaced, not fatal
            self.emit(task.task_id, "divergence_warning", {"hashes": sorted(program_hashes)})
        entry.status = "ready" if all(a.get("ok") for a in entry.acks.values()) else "partial"
        return entry.acks

    def submit_text(self, text: str, context: Mapping[str, str], services: list[str],
                    task_id: str | None = None) -> tuple[SignedTask, dict[str, dict]]:
        tid = self.new_task_id(task_id or f"task-{len(self.tasks) + 1}")
        task = sign_task(tid, text, dict(context), self.user_key)
        return task, self.submit_task(task, services)

    # -- escalations -------------------------------------------------------------

    def handle(self, message: dict) -> dict:
        """Message entry point for services (escalation_request)."""
        if message.get("type") != msg.ESCALATION_REQUEST:
            return {"ok": False, "error": "unknown-message-type"}
        pending = PendingEscalation(
            nonce=message["nonce"],
            task_id=message.get("task_id", ""),
            service=message.get("service", ""),
            question=message.get("question", ""),
            operation=message.get("operation", ""),
        )
        self.escalations[pending.nonce] = pending
        self.emit(pending.task_id, "escalation_request", {
            "nonce": pending.nonce,
            "service": pending.service,
            "question": pending.question,
            "operation": pending.operation,
        })
        verdict = self.policy(pending.question, pending.operation, pending.task_id)
        if verdict in (msg.APPROVE, msg.DENY):
            self._deliver(pending, verdict)
        return {"ok": True}

    def _deliver(self, pending: PendingEscalation, decision: str) -> None:
        signature = self.user_key.sign(msg.escalation_payload(pending.nonce, decision))
        channel = self._channel(pending.task_id, pending.service)
        if channel is None:
            pending.status = "expired"
            return
        channel.request({
            "type": msg.ESCALATION_RESPONSE,
            "task_id": pending.task_id,
            "nonce": pending.nonce,
            "decision": decision,
            "user_signature": base64.b64encode(signature).decode("ascii"),
        })
        pending.status = "approved" if decision == msg.APPROVE else "denied"
        self.emit(pending.task_id, "escalation_resolved", {
            "nonce": pending.nonce,
            "service": pending.service,
            "decision": decision,
            "operation": pending.operation,
        })

    def resolve(self, nonce: str, decision: str) -> dict:
        """User decision for a pending escalation; nonces are single-use."""
        pending = self.escalations.get(nonce)
        if pending is None:
            return {"ok": False, "error": "unknown-nonce"}
        with self._lock:
            if pending.status != "pending":
                return {"ok": False, "error": "nonce-used"}
            pending.status = "resolving"
        if decision not in (msg.APPROVE, msg.DENY):
            pending.status = "pending"
            return {"ok": False, "error": "bad-decision"}
        self._deliver(pending, decision)
        return {"ok": True, "decision": decision}

    # -- dashboard views -----------------------------------------------------------

    def task_list(self) -> list[dict]:
        return [
            {"task_id": tid, "text": e.task.text, "status": e.status, "services": e.services}
            for tid, e in self.tasks.items()
        ]

    def task_slices(self, task_id: str) -> dict | None:
        entry = self.tasks.get(task_id)
        if entry is None:
            return None
        return {
            "task_id": task_id,
            "services": {
                service: {
                    "ok": bool(ack.get("ok")),
                    "error": ack.get("error"),
                    "slices": ack.get("slices", []),
                    "artifact_hash": ack.get("artifact_hash", ""),
                    "program_hash": ack.get("program_hash", ""),
                }
                for service, ack in entry.acks.items()
            },
        }


# -- HTTP surface -----------------------------------------------------------

class _GatewayHttpHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    @property
    def gateway(self) -> Gateway:
        return self.server.gateway  # type: ignore[attr-defined]

    def log_message(self, fmt: str, *args: object) -> None:
        pass  # request logging stays out of stdio; the event feed is the record

    def _send_json(self, doc: dict, status: int = 200) -> None:
        body = json.dumps(doc).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.end_headers()
        self.wfile.write(body)

    def _read_json(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        if not length:
            return {}
        return json.loads(self.rfile.read(length))

    def do_OPTIONS(self) -> None:  # CORS preflight for the dashboard
        self._send_json({})

    def do_GET(self) -> None:
        url = urlparse(self.path)
        parts = [unquote(p) for p in url.path.split("/") if p]
        query = parse_qs(url.query)
        if parts == ["tasks"]:
            self._send_json({"tasks": self.gateway.task_list()})
        elif parts == ["cases"]:
            cases = self.server.cases  # type: ignore[attr-defined]
            self._send_json({"cases": cases})
        elif parts == ["escalations"]:
            pend = [
                {"nonce": p.nonce, "task_id": p.task_id, "service": p.service,
                 "question": p.question, "operation": p.operation, "status": p.status}
                for p in self.gateway.escalations.values()
            ]
            self._send_json({"escalations": pend})
        elif len(parts) == 3 and parts[0] == "tasks" and parts[2] == "slices":
            doc = self.gateway.task_slices(parts[1])
            if doc is None:
                self._send_json({"error": "unknown-task"}, 404)
            else:
                self._send_json(doc)
        elif len(parts) == 3 and parts[0] == "tasks" and parts[2] == "events":
            after = int(query.get("after", ["0"])[0])
            timeout = min(float(query.get("timeout", ["0"])[0]), 30.0)
            events = self.gateway.events_after(after, parts[1], timeout)
            next_cursor = events[-1]["id"] if events else after
            self._send_json({"events": events, "next": next_cursor})
        elif parts and parts[0] == "ui" or url.path == "/":
            self._serve_static(url.path)
        else:
            self._send_json({"error": "not-found"}, 404)

    def _authorized(self, url) -> bool:
        token = self.server.session_token  # type: ignore[attr-defined]
        if not token:
            return True
        header = self.headers.get("Authorization", "")
        if header == f"Bearer {token}":
            return True
        query = parse_qs(url.query)
        return query.get("token", [""])[0] == token

    def do_POST(self) -> None:
        url = urlparse(self.path)
        parts = [unquote(p) for p in url.path.split("/") if p]
        try:
            # always drain the request body: a keep-alive connection must not
            # leak unread bytes into the next request's parse
            body = self._read_json()
        except (ValueError, json.JSONDecodeError):
            self._send_json({"error": "bad-json"}, 400)
            return
        if not self._authorized(url):
            self._send_json({"error": "unauthorized", "hint": "session token required"}, 401)
            return
        if parts == ["tasks"]:
            launcher = self.server.launcher  # type: ignore[attr-defined]
            if launcher is None:
                self._send_json({"error": "no-launcher"}, 503)
                return
            try:
                task_id = launcher(body)
            except KeyError as exc:
                self._send_json({"error": "unknown-case", "detail": str(exc)}, 404)
                return
            self._send_json({"task_id": task_id})
        elif len(parts) == 2 and parts[0] == "escalations":
            outcome = self.gateway.resolve(parts[1], body.get("decision", ""))
            self._send_json(outcome, 200 if outcome.get("ok") else 409)
        else:
            self._send_json({"error": "not-found"}, 404)

    def _serve_static(self, path: str) -> None:
        root = self.server.static_root  # type: ignore[attr-defined]
        if root is None:
            self._send_json({"error": "no-ui", "hint": "build the frontend first"}, 404)
            return
        rel = "index.html" if path in ("/", "/ui", "/ui/") else path.removeprefix("/ui/")
        target = (Path(root) / rel).resolve()
        if not str(target).startswith(str(Path(root).resolve())) or not target.is_file():
            self._send_json({"error": "not-found"}, 404)
            return
        ctype = {
            ".html": "text/html", ".js": "text/javascript", ".css": "text/css",
            ".map": "application/json", ".svg": "image/svg+xml",
        }.get(target.suffix, "application/octet-stream")
        body = target.read_bytes()
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


class GatewayHttpServer(ThreadingHTTPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, host: str, port: int, gateway: Gateway,
                 launcher: Callable[[dict], str] | None = None,
                 cases: list[dict] | None = None,
                 static_root: str | Path | None = None,
                 session_token: str | None = None):
        super().__init__((host, port), _GatewayHttpHandler)
        self.gateway = gateway
        self.launcher = launcher
        self.cases = cases or []
        self.static_root = static_root
        self.session_token = session_token
        self._thread: threading.Thread | None = None

    @property
    def port(self) -> int:
        return self.server_address[1]

    def start(self) -> None:
        self._thread = threading.Thread(target=self.serve_forever, name="gateway-http", daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self.shutdown()
        self.server_close()
