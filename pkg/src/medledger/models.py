"""Domain value types shared across the ledger, vault and policy layers.

Everything here is an immutable value: blocks and transactions are frozen
dataclasses that are safe to share between threads once committed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

DIGEST_LEN = 32
ZERO_DIGEST = b"\x00" * DIGEST_LEN
PUBKEY_LEN = 32
SIGNATURE_LEN = 64
AEAD_NONCE_LEN = 12
AEAD_TAG_LEN = 16
SYM_KEY_LEN = 32

MAX_DIFFICULTY_BITS = 32
MAX_U64 = 2**64 - 1

MAX_USERNAME_BYTES = 256
MAX_AGE = 200

ROLE_PATIENT = "patient"
ROLE_PROVIDER = "provider"
ROLE_ADMIN = "admin"
ROLES = (ROLE_PATIENT, ROLE_PROVIDER, ROLE_ADMIN)

SCOPE_READ = "read"
SCOPE_READ_WRITE = "read_write"
SCOPES = (SCOPE_READ, SCOPE_READ_WRITE)


@dataclass(frozen=True)
class BlockHeader:
    index: int
    prev_hash: bytes
    tx_root: bytes
    timestamp_ms: int
    difficulty_bits: int
    nonce: int


@dataclass(frozen=True)
class IdentityReg:
    """Registers a public key as a role-tagged principal."""

    public_key: bytes
    role: str
    display_name: str


@dataclass(frozen=True)
class RecordAnchor:
    """Commits the content address of an off-chain sealed record."""

    patient_id: int
    content_address: bytes
    author_id: bytes


@dataclass(frozen=True)
class AccessGrant:
    patient_id: int
    grantee_id: bytes
    scope: str
    expires_at_ms: int | None


@dataclass(frozen=True)
class AccessRevoke:
    patient_id: int
    grantee_id: bytes


@dataclass(frozen=True)
class Appointment:
    patient_id: int
    provider_id: bytes
    slot_ms: int
    note: str


TxBody = IdentityReg | RecordAnchor | AccessGrant | AccessRevoke | Appointment


@dataclass(frozen=True)
class Transaction:
    body: TxBody
    author_pubkey: bytes
    tx_id: bytes
    signature: bytes

    @property
    def kind(self) -> str:
        return type(self.body).__name__


@dataclass(frozen=True)
class Block:
    header: BlockHeader
    transactions: tuple[Transaction, ...]


@dataclass(frozen=True)
class Chain:
    blocks: tuple[Block, ...]

    def tip(self) -> Block:
        return self.blocks[-1]

    def __len__(self) -> int:
        return len(self.blocks)


@dataclass(frozen=True)
class PatientRecord:
    """The clinical payload stored off-chain.

    ``temperature`` and ``time`` keep the exact text the user entered
    (validated to parse as numbers, units are a deployment convention).
    ``extra`` is an extensible, unvalidated string map; the canonical
    encoding sorts its keys.
    """

    username: str
    age: int
    temperature: str
    time: str
    patient_id: int
    extra: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class SealedRecord:
    """AEAD-encrypted patient record plus the metadata needed to open it."""

    ciphertext: bytes
    nonce: bytes
    key_id: str
