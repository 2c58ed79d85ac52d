"""Ed25519 key management for services and the user.

A deployment's keyring maps identity -> private key; the derived trust
store (identity -> raw public key) is what every verifier loads.  Private
seeds are stored hex-encoded, one file per identity, inside the config's
key directory.  Bench runs use ephemeral in-memory keyrings.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, field
from pathlib import Path

from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey

from .envelope import TrustStore

USER = "user"


@dataclass
class KeyRing:
    keys: dict[str, Ed25519PrivateKey] = field(default_factory=dict)

    @classmethod
    def generate(cls, identities: list[str], seed: str | None = None) -> "KeyRing":
        """Fresh keys for every identity; a seed makes generation reproducible."""
        ring = cls()
        for ident in identities:
            if seed is None:
                ring.keys[ident] = Ed25519PrivateKey.generate()
            else:
                material = hashlib.sha256(f"{seed}:{ident}".encode()).digest()
                ring.keys[ident] = Ed25519PrivateKey.from_private_bytes(material)
        return ring

    def private(self, ident: str) -> Ed25519PrivateKey:
        return self.keys[ident]

    def public_hex(self, ident: str) -> str:
        return self.keys[ident].public_key().public_bytes_raw().hex()

    def trust_store(self) -> TrustStore:
        services = {
            ident: key.public_key().public_bytes_raw()
            for ident, key in self.keys.items()
            if ident != USER
        }
        return TrustStore(services=services, user=self.keys[USER].public_key().public_bytes_raw())

    def save(self, directory: str | Path) -> None:
        root = Path(directory)
        root.mkdir(parents=True, exist_ok=True)
        for ident, key in self.keys.items():
            path = root / f"{ident}.key"
            path.write_text(key.private_bytes_raw().hex() + "\n")
            os.chmod(path, 0o600)

    @classmethod
    def load(cls, directory: str | Path) -> "KeyRing":
        ring = cls()
        for path in sorted(Path(directory).glob("*.key")):
            seed = bytes.fromhex(path.read_text().strip())
            ring.keys[path.stem] = Ed25519PrivateKey.from_private_bytes(seed)
        return ring
