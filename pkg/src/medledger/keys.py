"""Ed25519 keypairs, identity ids and the keypair file format.

A keypair file is three lines of text: seed hex, role, display name. Files
are written mode 0600 so they can double as inspectable fixtures.
"""

from __future__ import annotations

import hashlib
import os
import secrets
from dataclasses import dataclass
from pathlib import Path

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import serialization
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

from .models import PUBKEY_LEN, ROLES

SEED_LEN = 32


@dataclass(frozen=True)
class KeyPair:
    seed: bytes
    public_key: bytes

    @classmethod
    def from_seed(cls, seed: bytes) -> "KeyPair":
        if len(seed) != SEED_LEN:
            raise ValueError(f"seed must be {SEED_LEN} bytes")
        private = Ed25519PrivateKey.from_private_bytes(seed)
        public = private.public_key().public_bytes(
            serialization.Encoding.Raw, serialization.PublicFormat.Raw
        )
        return cls(seed=seed, public_key=public)

    @classmethod
    def generate(cls) -> "KeyPair":
        return cls.from_seed(secrets.token_bytes(SEED_LEN))

    def sign(self, message: bytes) -> bytes:
        return Ed25519PrivateKey.from_private_bytes(self.seed).sign(message)


def verify_signature(public_key: bytes, signature: bytes, message: bytes) -> bool:
    if len(public_key) != PUBKEY_LEN:
        return False
    try:
        Ed25519PublicKey.from_public_bytes(public_key).verify(signature, message)
        return True
    except (InvalidSignature, ValueError):
        return False


def identity_id(public_key: bytes) -> bytes:
    """Identities are addressed by the SHA-256 of their public key."""
    return hashlib.sha256(public_key).digest()


def save_keypair_file(path: str | Path, keypair: KeyPair, role: str, name: str) -> None:
    if role not in ROLES:
        raise ValueError(f"unknown role: {role!r}")
    if "\n" in name:
        raise ValueError("display name must be a single line")
    path = Path(path)
    path.write_text(f"{keypair.seed.hex()}\n{role}\n{name}\n")
    os.chmod(path, 0o600)


def load_keypair_file(path: str | Path) -> tuple[KeyPair, str, str]:
    lines = Path(path).read_text().splitlines()
    if len(lines) < 3:
        raise ValueError(f"malformed keypair file: {path}")
    seed_hex, role, name = lines[0].strip(), lines[1].strip(), lines[2]
    try:
        seed = bytes.fromhex(seed_hex)
    except ValueError as exc:
        raise ValueError(f"malformed seed in keypair file: {path}") from exc
    if role not in ROLES:
        raise ValueError(f"unknown role in keypair file: {role!r}")
    return KeyPair.from_seed(seed), role, name
