"""Provenance envelopes: signed bindings of concrete values to symbolic keys.

An envelope attests "this concrete value is the result of this symbolic
computation, within this task".  Service envelopes are Ed25519-signed over a
canonical byte serialization (length-prefixed task_id, key, value-as-
interchange-text), so identical envelopes are byte-identical on every host.
The task id inside the signed payload stops cross-task replay.

Agent-attested envelopes carry no signature and are only believed for keys
with no tool-call subterm (literals and arithmetic over literals); a key
that mentions any tool output verifies only under the producing service's
registered key.

The store is write-once per (task, key): the first sealed value is pinned
for the rest of the task.
"""

from __future__ import annotations

import base64
import struct
import threading
from dataclasses import dataclass

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey, Ed25519PublicKey

from .interchange import canonical_value_text, value_from_wire, value_to_wire
from .symexpr import KeyParseError, parse_key, tool_calls
from .values import Value

AGENT = "AGENT"


class SignerMismatch(ValueError):
    pass


class StoreConflict(ValueError):
    pass


def canonical_payload(task_id: str, key: str, value: Value) -> bytes:
    parts = [task_id.encode("utf-8"), key.encode("utf-8"), canonical_value_text(value).encode("utf-8")]
    out = bytearray()
    for p in parts:
        out += struct.pack(">I", len(p))
        out += p
    return bytes(out)


@dataclass(frozen=True)
class Envelope:
    task_id: str
    key: str
    value: Value
    signer: str
    signature: bytes | None = None

    def to_wire(self) -> dict:
        return {
            "task_id": self.task_id,
            "key": self.key,
            "value": value_to_wire(self.value),
            "signer": self.signer,
            "signature": base64.b64encode(self.signature).decode("ascii") if self.signature else None,
        }

    @classmethod
    def from_wire(cls, doc: dict) -> "Envelope":
        sig = doc.get("signature")
        return cls(
            task_id=doc["task_id"],
            key=doc["key"],
            value=value_from_wire(doc["value"]),
            signer=doc["signer"],
            signature=base64.b64decode(sig) if sig else None,
        )


@dataclass(frozen=True)
class TrustStore:
    services: dict[str, bytes]  # service id -> raw Ed25519 public key
    user: bytes

    def service_key(self, signer: str) -> Ed25519PublicKey | None:
        raw = self.services.get(signer)
        return Ed25519PublicKey.from_public_bytes(raw) if raw else None

    def user_key(self) -> Ed25519PublicKey:
        return Ed25519PublicKey.from_public_bytes(self.user)


def seal(value: Value, key: str, task_id: str, signer: str,
         signing_key: Ed25519PrivateKey | None, trust: TrustStore | None = None) -> Envelope:
    if signer == AGENT:
        return Envelope(task_id=task_id, key=key, value=value, signer=AGENT, signature=None)
    if signing_key is None:
        raise SignerMismatch(f"{signer} has no signing key")
    if trust is not None:
        expected = trust.services.get(signer)
        actual = signing_key.public_key().public_bytes_raw()
        if expected is None or expected != actual:
            raise SignerMismatch(f"signing key does not belong to {signer}")
    sig = signing_key.sign(canonical_payload(task_id, key, value))
    return Envelope(task_id=task_id, key=key, value=value, signer=signer, signature=sig)


def _key_is_literal(key: str) -> bool:
    try:
        expr = parse_key(key)
    except KeyParseError:
        return False
    return not tool_calls(expr)


def verify(env: Envelope, trust: TrustStore) -> bool:
    if env.signer == AGENT:
        return _key_is_literal(env.key)
    pub = trust.service_key(env.signer)
    if pub is None or env.signature is None:
        return False
    try:
        pub.verify(env.signature, canonical_payload(env.task_id, env.key, env.value))
        return True
    except InvalidSignature:
        return False


class EnvelopeStore:
    """Write-once map (task_id, key) -> envelope; safe for concurrent readers."""

    def __init__(self) -> None:
        self._entries: dict[tuple[str, str], Envelope] = {}
        self._lock = threading.Lock()

    def put(self, env: Envelope) -> None:
        with self._lock:
            slot = (env.task_id, env.key)
            if slot in self._entries:
                raise StoreConflict(f"key already sealed for this task: {env.key}")
            self._entries[slot] = env

    def lookup(self, task_id: str, key: str) -> Envelope | None:
        return self._entries.get((task_id, key))

    def for_task(self, task_id: str) -> list[Envelope]:
        return [e for (tid, _), e in sorted(self._entries.items()) if tid == task_id]


def lookup(store: EnvelopeStore, task_id: str, key: str) -> Envelope | None:
    return store.lookup(task_id, key)


# -- structured-output flattening -------------------------------------------

def flatten_value(value: Value) -> dict[str, Value]:
    """Leaf values by dotted field path; list elements use numeric segments.

    Scalars flatten to {"": value}.  Empty lists/records are kept as leaves
    themselves so reconstruction is exact.
    """
    out: dict[str, Value] = {}

    def visit(v: Value, path: str) -> None:
        if isinstance(v, dict) and v:
            for k, item in v.items():
                visit(item, f"{path}.{k}" if path else k)
        elif isinstance(v, list) and v:
            for i, item in enumerate(v):
                visit(item, f"{path}.{i}" if path else str(i))
        else:
            out[path] = v

    visit(value, "")
    return out


def unflatten_value(flat: dict[str, Value]) -> Value:
    if set(flat) == {""}:
        return flat[""]

    def insert(node: dict, segs: list[str], v: Value) -> None:
        head, rest = segs[0], segs[1:]
        if rest:
            node.setdefault(head, {})
            insert(node[head], rest, v)
        else:
            node[head] = v

    tree: dict = {}
    for path, v in flat.items():
        insert(tree, path.split("."), v)

    def build(node: Value) -> Value:
        if not isinstance(node, dict):
            return node
        keys = list(node)
        if keys and all(k.isdigit() for k in keys):
            return [build(node[k]) for k in sorted(keys, key=int)]
        return {k: build(v) for k, v in node.items()}

    return build(tree)
