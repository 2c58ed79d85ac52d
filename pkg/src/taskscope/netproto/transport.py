"""Message transport: in-process dispatch or newline-delimited JSON over TCP.

A Channel sends one request dict and returns one reply dict.  The TCP form
uses one connection per request (open, write line, read line, close), which
keeps framing trivial and lets the threading servers serialize nothing
beyond what the runtimes themselves serialize.
"""

from __future__ import annotations

import json
import socket
import socketserver
import threading
from typing import Callable, Protocol

Handler = Callable[[dict], dict]


class Channel(Protocol):
    def request(self, msg: dict) -> dict: ...


class InProcChannel:
    def __init__(self, handler: Handler):
        self._handler = handler

    def request(self, msg: dict) -> dict:
        # round-trip through JSON so both modes see exactly the wire shapes
        encoded = json.dumps(msg)
        reply = self._handler(json.loads(encoded))
        return json.loads(json.dumps(reply))


class TcpChannel:
    def __init__(self, host: str, port: int, timeout: float = 30.0):
        self.host = host
        self.port = port
        self.timeout = timeout

    def request(self, msg: dict) -> dict:
        with socket.create_connection((self.host, self.port), timeout=self.timeout) as sock:
            sock.sendall(json.dumps(msg).encode("utf-8") + b"\n")
            reader = sock.makefile("r", encoding="utf-8")
            line = reader.readline()
        if not line:
            raise ConnectionError(f"no reply from {self.host}:{self.port}")
        return json.loads(line)


class _RequestHandler(socketserver.StreamRequestHandler):
    def handle(self) -> None:
        line = self.rfile.readline()
        if not line:
            return
        try:
            msg = json.loads(line)
            reply = self.server.message_handler(msg)  # type: ignore[attr-defined]
        except Exception as exc:  # malformed frames must not kill the server
            reply = {"ok": False, "error": "bad-request", "detail": str(exc)}
        self.wfile.write(json.dumps(reply).encode("utf-8") + b"\n")


class MessageServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, host: str, port: int, handler: Handler):
        super().__init__((host, port), _RequestHandler)
        self.message_handler = handler
        self._thread: threading.Thread | None = None

    @property
    def port(self) -> int:
        return self.server_address[1]

    def start(self) -> None:
        self._thread = threading.Thread(target=self.serve_forever, name=f"msg-server-{self.port}", daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self.shutdown()
        self.server_close()
