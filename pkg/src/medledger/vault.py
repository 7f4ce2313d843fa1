"""Off-chain encrypted, content-addressed storage of patient records.

Records are AEAD-sealed (AES-256-GCM) with the patient id bound as
associated data, then stored in a directory keyed by the SHA-256 of the
sealed record's canonical bytes. The chain only ever carries that digest,
so on-chain growth per record is constant regardless of payload size.
"""

from __future__ import annotations

import hashlib
import os
from pathlib import Path

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from . import encoding
from .keys import SEED_LEN, KeyPair
from .models import (
    AEAD_NONCE_LEN,
    DIGEST_LEN,
    MAX_AGE,
    MAX_USERNAME_BYTES,
    PatientRecord,
    SealedRecord,
    SYM_KEY_LEN,
)


class VaultError(Exception):
    pass


class InvalidRecord(VaultError):
    pass


class AuthFailure(VaultError):
    """Wrong key, tampered ciphertext, or wrong patient binding."""


class NotFound(VaultError):
    pass


class CorruptBlob(VaultError):
    """Stored bytes no longer hash to their address."""


def _numeric(text: str) -> bool:
    try:
        float(text)
    except (TypeError, ValueError):
        return False
    return True


def validate_record(record: PatientRecord) -> None:
    if not record.username:
        raise InvalidRecord("username must be non-empty")
    if len(record.username.encode("utf-8")) > MAX_USERNAME_BYTES:
        raise InvalidRecord(f"username exceeds {MAX_USERNAME_BYTES} bytes")
    if not isinstance(record.age, int) or not 0 <= record.age <= MAX_AGE:
        raise InvalidRecord(f"age out of range: {record.age!r}")
    if not isinstance(record.patient_id, int) or record.patient_id < 1:
        raise InvalidRecord(f"patient_id must be a positive integer: {record.patient_id!r}")
    if not _numeric(record.temperature):
        raise InvalidRecord(f"temperature is not numeric: {record.temperature!r}")
    if not _numeric(record.time):
        raise InvalidRecord(f"time is not numeric: {record.time!r}")
    for key, value in record.extra.items():
        if not isinstance(key, str) or not isinstance(value, str):
            raise InvalidRecord("extra map must be string to string")


def normalize_decimal(value: int | float | str) -> str:
    """Render a user-entered numeric as the text we store.

    Strings are kept exactly as entered (validated to parse); numbers use
    Python's shortest round-trip rendering, so JSON 100 becomes "100" and
    20.8 becomes "20.8".
    """
    if isinstance(value, bool):
        raise InvalidRecord(f"not a numeric value: {value!r}")
    if isinstance(value, str):
        if not _numeric(value):
            raise InvalidRecord(f"not a numeric value: {value!r}")
        return value
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    raise InvalidRecord(f"not a numeric value: {value!r}")


def _aad(patient_id: int) -> bytes:
    return patient_id.to_bytes(8, "big")


def default_key_id(key: bytes) -> str:
    return hashlib.sha256(b"medledger-key-id" + key).hexdigest()[:16]


def seal_record(
    record: PatientRecord,
    key: bytes,
    nonce: bytes,
    key_id: str | None = None,
) -> SealedRecord:
    """AEAD-encrypt the record's canonical bytes, authenticated with the
    patient id as associated data. The caller supplies a nonce that is
    unique per key."""
    validate_record(record)
    if len(key) != SYM_KEY_LEN:
        raise ValueError(f"key must be {SYM_KEY_LEN} bytes")
    if len(nonce) != AEAD_NONCE_LEN:
        raise ValueError(f"nonce must be {AEAD_NONCE_LEN} bytes")
    plaintext = encoding.encode_patient_record(record)
    ciphertext = AESGCM(key).encrypt(nonce, plaintext, _aad(record.patient_id))
    return SealedRecord(
        ciphertext=ciphertext,
        nonce=nonce,
        key_id=key_id if key_id is not None else default_key_id(key),
    )


def open_record(sealed: SealedRecord, key: bytes, patient_id: int) -> PatientRecord:
    if len(key) != SYM_KEY_LEN:
        raise ValueError(f"key must be {SYM_KEY_LEN} bytes")
    try:
        plaintext = AESGCM(key).decrypt(sealed.nonce, sealed.ciphertext, _aad(patient_id))
    except InvalidTag as exc:
        raise AuthFailure("sealed record failed authentication") from exc
    except ValueError as exc:
        raise AuthFailure(str(exc)) from exc
    try:
        return encoding.decode_patient_record(plaintext)
    except encoding.ParseError as exc:
        raise InvalidRecord("decrypted payload is not a patient record") from exc


def content_address(sealed: SealedRecord) -> bytes:
    return hashlib.sha256(encoding.encode_sealed_record(sealed)).digest()


class BlobStore:
    """One file per sealed record under its hex digest, plus a sorted
    MANIFEST of known addresses. Puts are idempotent; reads re-hash."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _blob_path(self, addr: bytes) -> Path:
        return self.root / addr.hex()

    @property
    def manifest_path(self) -> Path:
        return self.root / "MANIFEST"

    def store(self, sealed: SealedRecord) -> bytes:
        data = encoding.encode_sealed_record(sealed)
        addr = hashlib.sha256(data).digest()
        path = self._blob_path(addr)
        if not path.exists():
            tmp = path.with_suffix(".tmp")
            tmp.write_bytes(data)
            os.replace(tmp, path)
            self._manifest_add(addr)
        return addr

    def fetch(self, addr: bytes) -> SealedRecord:
        if len(addr) != DIGEST_LEN:
            raise ValueError(f"address must be {DIGEST_LEN} bytes")
        path = self._blob_path(addr)
        if not path.exists():
            raise NotFound(f"no blob at {addr.hex()}")
        data = path.read_bytes()
        if hashlib.sha256(data).digest() != addr:
            raise CorruptBlob(f"blob {addr.hex()} does not hash to its address")
        try:
            return encoding.decode_sealed_record(data)
        except encoding.ParseError as exc:
            raise CorruptBlob(f"blob {addr.hex()} does not decode") from exc

    def __contains__(self, addr: bytes) -> bool:
        return self._blob_path(addr).exists()

    def addresses(self) -> list[bytes]:
        if not self.manifest_path.exists():
            return []
        return [
            bytes.fromhex(line)
            for line in self.manifest_path.read_text().splitlines()
            if line
        ]

    def _manifest_add(self, addr: bytes) -> None:
        known = {a.hex() for a in self.addresses()}
        known.add(addr.hex())
        tmp = self.manifest_path.with_suffix(".tmp")
        tmp.write_text("".join(f"{h}\n" for h in sorted(known)))
        os.replace(tmp, self.manifest_path)


class Keystore:
    """Service-held key material: one AES data key per patient id and the
    signing seed deposited for each identity the service authors
    transactions for. One hex file per key, mode 0600."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _write(self, path: Path, raw: bytes) -> None:
        path.write_text(raw.hex() + "\n")
        os.chmod(path, 0o600)

    def data_key(self, patient_id: int, create: bool = False) -> bytes:
        path = self.root / f"data-{patient_id}.key"
        if path.exists():
            return bytes.fromhex(path.read_text().strip())
        if not create:
            raise NotFound(f"no data key for patient {patient_id}")
        key = os.urandom(SYM_KEY_LEN)
        self._write(path, key)
        return key

    def put_signer_seed(self, identity: bytes, seed: bytes) -> None:
        if len(seed) != SEED_LEN:
            raise ValueError(f"seed must be {SEED_LEN} bytes")
        self._write(self.root / f"signer-{identity.hex()}.key", seed)

    def signer(self, identity: bytes) -> KeyPair:
        path = self.root / f"signer-{identity.hex()}.key"
        if not path.exists():
            raise NotFound(f"no signing seed for identity {identity.hex()}")
        return KeyPair.from_seed(bytes.fromhex(path.read_text().strip()))

    def has_signer(self, identity: bytes) -> bool:
        return (self.root / f"signer-{identity.hex()}.key").exists()
