"""Canonical binary encoding for everything that gets hashed or persisted.

The format is deterministic and injective over valid values: fields are
emitted in declared order, integers are fixed-width big-endian, variable
length byte strings carry a u32 length prefix, and lists a u32 element
count. Digests, public keys and signatures are fixed-width raw bytes.

A JSON-ish rendering for humans exists (`debug_json`) but is never hashed.
"""

from __future__ import annotations

import json
import struct
from typing import Any

from .models import (
    AEAD_NONCE_LEN,
    DIGEST_LEN,
    MAX_DIFFICULTY_BITS,
    MAX_U64,
    PUBKEY_LEN,
    SIGNATURE_LEN,
    AccessGrant,
    AccessRevoke,
    Appointment,
    Block,
    BlockHeader,
    IdentityReg,
    PatientRecord,
    RecordAnchor,
    SealedRecord,
    Transaction,
    TxBody,
)

TAG_IDENTITY_REG = 1
TAG_RECORD_ANCHOR = 2
TAG_ACCESS_GRANT = 3
TAG_ACCESS_REVOKE = 4
TAG_APPOINTMENT = 5

_ROLE_TAGS = {"patient": 1, "provider": 2, "admin": 3}
_ROLE_NAMES = {v: k for k, v in _ROLE_TAGS.items()}
_SCOPE_TAGS = {"read": 1, "read_write": 2}
_SCOPE_NAMES = {v: k for k, v in _SCOPE_TAGS.items()}

# Fixed header layout: index u64, prev_hash 32, tx_root 32, timestamp u64,
# difficulty u8, nonce u64. The nonce is the last field so miners can hash
# a precomputed prefix plus the 8 nonce bytes.
HEADER_LEN = 8 + DIGEST_LEN + DIGEST_LEN + 8 + 1 + 8
HEADER_PREFIX_LEN = HEADER_LEN - 8


class ParseError(ValueError):
    """Raised when bytes do not decode as the expected canonical value."""


def _u8(value: int) -> bytes:
    if not 0 <= value <= 0xFF:
        raise ValueError(f"u8 out of range: {value}")
    return struct.pack(">B", value)


def _u32(value: int) -> bytes:
    if not 0 <= value <= 0xFFFFFFFF:
        raise ValueError(f"u32 out of range: {value}")
    return struct.pack(">I", value)


def _u64(value: int) -> bytes:
    if not 0 <= value <= MAX_U64:
        raise ValueError(f"u64 out of range: {value}")
    return struct.pack(">Q", value)


def _fixed(value: bytes, width: int, what: str) -> bytes:
    if not isinstance(value, (bytes, bytearray)) or len(value) != width:
        raise ValueError(f"{what} must be exactly {width} bytes")
    return bytes(value)


def _var_bytes(value: bytes) -> bytes:
    return _u32(len(value)) + value


def _string(value: str) -> bytes:
    return _var_bytes(value.encode("utf-8"))


def _opt_u64(value: int | None) -> bytes:
    if value is None:
        return _u8(0)
    return _u8(1) + _u64(value)


class _Reader:
    """Cursor over a byte buffer; every read checks bounds."""

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        end = self.pos + n
        if n < 0 or end > len(self.data):
            raise ParseError("unexpected end of input")
        piece = self.data[self.pos : end]
        self.pos = end
        return piece

    def u8(self) -> int:
        return self.take(1)[0]

    def u32(self) -> int:
        return struct.unpack(">I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack(">Q", self.take(8))[0]

    def var_bytes(self) -> bytes:
        return self.take(self.u32())

    def string(self) -> str:
        raw = self.var_bytes()
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError("invalid utf-8 in string field") from exc

    def opt_u64(self) -> int | None:
        flag = self.u8()
        if flag == 0:
            return None
        if flag != 1:
            raise ParseError(f"invalid option flag {flag}")
        return self.u64()

    def done(self) -> None:
        if self.pos != len(self.data):
            raise ParseError(f"{len(self.data) - self.pos} trailing bytes")


# ---------------------------------------------------------------------------
# Block headers

def encode_header_prefix(header: BlockHeader) -> bytes:
    """Everything but the nonce; miners append 8 nonce bytes to this."""
    if not 0 <= header.difficulty_bits <= MAX_DIFFICULTY_BITS:
        raise ValueError(f"difficulty_bits out of range: {header.difficulty_bits}")
    return b"".join(
        (
            _u64(header.index),
            _fixed(header.prev_hash, DIGEST_LEN, "prev_hash"),
            _fixed(header.tx_root, DIGEST_LEN, "tx_root"),
            _u64(header.timestamp_ms),
            _u8(header.difficulty_bits),
        )
    )


def encode_header(header: BlockHeader) -> bytes:
    return encode_header_prefix(header) + _u64(header.nonce)


def _read_header(r: _Reader) -> BlockHeader:
    try:
        header = BlockHeader(
            index=r.u64(),
            prev_hash=r.take(DIGEST_LEN),
            tx_root=r.take(DIGEST_LEN),
            timestamp_ms=r.u64(),
            difficulty_bits=r.u8(),
            nonce=r.u64(),
        )
    except struct.error as exc:  # pragma: no cover - take() guards first
        raise ParseError(str(exc)) from exc
    if header.difficulty_bits > MAX_DIFFICULTY_BITS:
        raise ParseError(f"difficulty_bits out of range: {header.difficulty_bits}")
    return header


def decode_header(data: bytes) -> BlockHeader:
    r = _Reader(data)
    header = _read_header(r)
    r.done()
    return header


# ---------------------------------------------------------------------------
# Transactions

def encode_tx_body(body: TxBody, author_pubkey: bytes) -> bytes:
    """The signed portion of a transaction: tagged body plus author key.

    tx_id is the hash of exactly these bytes; tx_id and signature are not
    part of them.
    """
    if isinstance(body, IdentityReg):
        if body.role not in _ROLE_TAGS:
            raise ValueError(f"unknown role: {body.role!r}")
        payload = (
            _u8(TAG_IDENTITY_REG)
            + _fixed(body.public_key, PUBKEY_LEN, "public_key")
            + _u8(_ROLE_TAGS[body.role])
            + _string(body.display_name)
        )
    elif isinstance(body, RecordAnchor):
        payload = (
            _u8(TAG_RECORD_ANCHOR)
            + _u64(body.patient_id)
            + _fixed(body.content_address, DIGEST_LEN, "content_address")
            + _fixed(body.author_id, DIGEST_LEN, "author_id")
        )
    elif isinstance(body, AccessGrant):
        if body.scope not in _SCOPE_TAGS:
            raise ValueError(f"unknown scope: {body.scope!r}")
        payload = (
            _u8(TAG_ACCESS_GRANT)
            + _u64(body.patient_id)
            + _fixed(body.grantee_id, DIGEST_LEN, "grantee_id")
            + _u8(_SCOPE_TAGS[body.scope])
            + _opt_u64(body.expires_at_ms)
        )
    elif isinstance(body, AccessRevoke):
        payload = (
            _u8(TAG_ACCESS_REVOKE)
            + _u64(body.patient_id)
            + _fixed(body.grantee_id, DIGEST_LEN, "grantee_id")
        )
    elif isinstance(body, Appointment):
        payload = (
            _u8(TAG_APPOINTMENT)
            + _u64(body.patient_id)
            + _fixed(body.provider_id, DIGEST_LEN, "provider_id")
            + _u64(body.slot_ms)
            + _string(body.note)
        )
    else:
        raise ValueError(f"unknown transaction body type: {type(body).__name__}")
    return payload + _fixed(author_pubkey, PUBKEY_LEN, "author_pubkey")


def encode_transaction(tx: Transaction) -> bytes:
    return (
        encode_tx_body(tx.body, tx.author_pubkey)
        + _fixed(tx.tx_id, DIGEST_LEN, "tx_id")
        + _fixed(tx.signature, SIGNATURE_LEN, "signature")
    )


def _read_tx_body(r: _Reader) -> TxBody:
    tag = r.u8()
    try:
        if tag == TAG_IDENTITY_REG:
            public_key = r.take(PUBKEY_LEN)
            role_tag = r.u8()
            if role_tag not in _ROLE_NAMES:
                raise ParseError(f"unknown role tag {role_tag}")
            return IdentityReg(public_key, _ROLE_NAMES[role_tag], r.string())
        if tag == TAG_RECORD_ANCHOR:
            return RecordAnchor(r.u64(), r.take(DIGEST_LEN), r.take(DIGEST_LEN))
        if tag == TAG_ACCESS_GRANT:
            patient_id = r.u64()
            grantee_id = r.take(DIGEST_LEN)
            scope_tag = r.u8()
            if scope_tag not in _SCOPE_NAMES:
                raise ParseError(f"unknown scope tag {scope_tag}")
            return AccessGrant(patient_id, grantee_id, _SCOPE_NAMES[scope_tag], r.opt_u64())
        if tag == TAG_ACCESS_REVOKE:
            return AccessRevoke(r.u64(), r.take(DIGEST_LEN))
        if tag == TAG_APPOINTMENT:
            return Appointment(r.u64(), r.take(DIGEST_LEN), r.u64(), r.string())
    except struct.error as exc:  # pragma: no cover
        raise ParseError(str(exc)) from exc
    raise ParseError(f"unknown transaction tag {tag}")


def _read_transaction(r: _Reader) -> Transaction:
    body = _read_tx_body(r)
    author_pubkey = r.take(PUBKEY_LEN)
    tx_id = r.take(DIGEST_LEN)
    signature = r.take(SIGNATURE_LEN)
    return Transaction(body, author_pubkey, tx_id, signature)


def decode_transaction(data: bytes) -> Transaction:
    r = _Reader(data)
    tx = _read_transaction(r)
    r.done()
    return tx


def encode_tx_list(txs: tuple[Transaction, ...] | list[Transaction]) -> bytes:
    return _u32(len(txs)) + b"".join(encode_transaction(tx) for tx in txs)


def _read_tx_list(r: _Reader) -> tuple[Transaction, ...]:
    count = r.u32()
    return tuple(_read_transaction(r) for _ in range(count))


# ---------------------------------------------------------------------------
# Blocks

def encode_block(block: Block) -> bytes:
    return encode_header(block.header) + encode_tx_list(block.transactions)


def decode_block(data: bytes) -> Block:
    r = _Reader(data)
    header = _read_header(r)
    txs = _read_tx_list(r)
    r.done()
    return Block(header, txs)


# ---------------------------------------------------------------------------
# Vault payloads

def encode_patient_record(record: PatientRecord) -> bytes:
    pairs = sorted(record.extra.items())
    return b"".join(
        (
            _string(record.username),
            _u64(record.age),
            _string(record.temperature),
            _string(record.time),
            _u64(record.patient_id),
            _u32(len(pairs)),
            b"".join(_string(k) + _string(v) for k, v in pairs),
        )
    )


def decode_patient_record(data: bytes) -> PatientRecord:
    r = _Reader(data)
    username = r.string()
    age = r.u64()
    temperature = r.string()
    time = r.string()
    patient_id = r.u64()
    extra = {}
    for _ in range(r.u32()):
        key = r.string()
        extra[key] = r.string()
    r.done()
    return PatientRecord(username, age, temperature, time, patient_id, extra)


def encode_sealed_record(sealed: SealedRecord) -> bytes:
    return (
        _string(sealed.key_id)
        + _fixed(sealed.nonce, AEAD_NONCE_LEN, "nonce")
        + _var_bytes(sealed.ciphertext)
    )


def decode_sealed_record(data: bytes) -> SealedRecord:
    r = _Reader(data)
    key_id = r.string()
    nonce = r.take(AEAD_NONCE_LEN)
    ciphertext = r.var_bytes()
    r.done()
    return SealedRecord(ciphertext, nonce, key_id)


# ---------------------------------------------------------------------------
# Debug rendering (human eyes only, never hashed)

def _debug_value(value: Any) -> Any:
    if isinstance(value, bytes):
        return value.hex()
    if isinstance(value, BlockHeader):
        return {
            "index": value.index,
            "prev_hash": value.prev_hash.hex(),
            "tx_root": value.tx_root.hex(),
            "timestamp_ms": value.timestamp_ms,
            "difficulty_bits": value.difficulty_bits,
            "nonce": value.nonce,
        }
    if isinstance(value, Transaction):
        return {
            "kind": value.kind,
            "body": _debug_value(vars(value.body)),
            "author_pubkey": value.author_pubkey.hex(),
            "tx_id": value.tx_id.hex(),
            "signature": value.signature.hex(),
        }
    if isinstance(value, Block):
        return {
            "header": _debug_value(value.header),
            "transactions": [_debug_value(tx) for tx in value.transactions],
        }
    if isinstance(value, dict):
        return {k: _debug_value(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_debug_value(v) for v in value]
    return value


def debug_json(value: Any) -> str:
    return json.dumps(_debug_value(value), indent=2, sort_keys=True)
