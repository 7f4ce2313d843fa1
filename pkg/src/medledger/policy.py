"""Deterministic policy engine: the chain-state fold and access decisions.

"Smart contracts" here are a fixed, versioned fold over the transaction
history: identities, record anchors, active grants and appointments are
materialized by replaying the chain, and access questions are answered
from that state. The fold is pure; replaying the same chain always yields
the same state and the same canonical text dump.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .chain import make_transaction
from .keys import KeyPair, identity_id as derive_identity_id
from .models import (
    AccessGrant,
    AccessRevoke,
    Appointment,
    Chain,
    IdentityReg,
    RecordAnchor,
    ROLE_ADMIN,
    ROLE_PATIENT,
    ROLE_PROVIDER,
    ROLES,
    SCOPE_READ_WRITE,
    SCOPES,
    Transaction,
)

ACTION_READ = "read"
ACTION_WRITE = "write"
ACTIONS = (ACTION_READ, ACTION_WRITE)

# Deny reasons.
DENY_NO_GRANT = "NoGrant"
DENY_EXPIRED = "Expired"
DENY_INSUFFICIENT_SCOPE = "InsufficientScope"
DENY_UNKNOWN_IDENTITY = "UnknownIdentity"

# Admission reject reasons (append-time validation).
REJECT_UNKNOWN_IDENTITY = "UnknownIdentity"
REJECT_DUPLICATE_REGISTRATION = "DuplicateRegistration"
REJECT_BAD_ROLE = "BadRole"
REJECT_AUTHOR_MISMATCH = "AuthorMismatch"
REJECT_NOT_OWNER = "NotOwner"
REJECT_NO_SUCH_GRANT = "NoSuchGrant"
REJECT_UNKNOWN_PROVIDER = "UnknownProvider"
REJECT_NOT_PARTICIPANT = "NotParticipant"
REJECT_ACCESS_DENIED = "AccessDenied"
REJECT_UNKNOWN_GRANTEE = "UnknownGrantee"
REJECT_BAD_SCOPE = "BadScope"


class PolicyError(Exception):
    pass


class UnknownIdentity(PolicyError):
    pass


class NotOwner(PolicyError):
    pass


@dataclass(frozen=True)
class Identity:
    identity_id: bytes
    public_key: bytes
    role: str
    display_name: str


@dataclass(frozen=True)
class Grant:
    patient_id: int
    grantee_id: bytes
    scope: str
    expires_at_ms: int | None
    granted_in_block: int


@dataclass(frozen=True)
class AppointmentEntry:
    patient_id: int
    provider_id: bytes
    slot_ms: int
    note: str
    block_index: int
    tx_id: bytes


@dataclass(frozen=True)
class AccessDecision:
    allowed: bool
    reason: str | None = None

    def __bool__(self) -> bool:
        return self.allowed


ALLOW = AccessDecision(True)


def deny(reason: str) -> AccessDecision:
    return AccessDecision(False, reason)


@dataclass
class ChainState:
    """Materialized view of the chain. Treat instances as immutable
    snapshots; `materialize` and the ledger always hand out fresh copies."""

    identities: dict[bytes, Identity] = field(default_factory=dict)
    patient_owner: dict[int, bytes] = field(default_factory=dict)
    anchors: dict[int, list[bytes]] = field(default_factory=dict)
    grants: dict[tuple[int, bytes], Grant] = field(default_factory=dict)
    appointments: list[AppointmentEntry] = field(default_factory=list)

    def clone(self) -> "ChainState":
        return ChainState(
            identities=dict(self.identities),
            patient_owner=dict(self.patient_owner),
            anchors={pid: list(addrs) for pid, addrs in self.anchors.items()},
            grants=dict(self.grants),
            appointments=list(self.appointments),
        )

    def identity_by_name(self, display_name: str) -> Identity | None:
        """First registered identity with this display name."""
        for ident in self.identities.values():
            if ident.display_name == display_name:
                return ident
        return None

    def role_of(self, identity: bytes) -> str | None:
        ident = self.identities.get(identity)
        return ident.role if ident else None


def _author_identity(state: ChainState, tx: Transaction) -> Identity | None:
    return state.identities.get(derive_identity_id(tx.author_pubkey))


def _owns_or_admin(state: ChainState, author: Identity, patient_id: int) -> bool:
    if author.role == ROLE_ADMIN:
        return True
    return state.patient_owner.get(patient_id) == author.identity_id


def _may_claim(state: ChainState, author: Identity, patient_id: int) -> bool:
    """A patient-role identity claims an unowned patient id by being the
    first to transact on it."""
    return (
        patient_id not in state.patient_owner and author.role == ROLE_PATIENT
    )


def admit_transaction(state: ChainState, tx: Transaction, now_ms: int) -> str | None:
    """Append-time validation against the materialized state.

    Returns a reject reason, or None when the transaction may be applied.
    `now_ms` is the mining timestamp so grant expiry is judged against the
    block being built, keeping replays deterministic.
    """
    body = tx.body
    author = _author_identity(state, tx)

    if isinstance(body, IdentityReg):
        if body.role not in ROLES:
            return REJECT_BAD_ROLE
        if derive_identity_id(body.public_key) in state.identities:
            return REJECT_DUPLICATE_REGISTRATION
        self_signed = tx.author_pubkey == body.public_key
        if not self_signed and (author is None or author.role != ROLE_ADMIN):
            return REJECT_NOT_OWNER
        return None

    if author is None:
        return REJECT_UNKNOWN_IDENTITY

    if isinstance(body, RecordAnchor):
        if body.author_id != author.identity_id:
            return REJECT_AUTHOR_MISMATCH
        if author.role not in (ROLE_PATIENT, ROLE_PROVIDER):
            return REJECT_BAD_ROLE
        if _may_claim(state, author, body.patient_id):
            return None
        decision = evaluate_access(state, author.identity_id, body.patient_id, ACTION_WRITE, now_ms)
        if not decision:
            return f"{REJECT_ACCESS_DENIED}:{decision.reason}"
        return None

    if isinstance(body, AccessGrant):
        if body.scope not in SCOPES:
            return REJECT_BAD_SCOPE
        if body.grantee_id not in state.identities:
            return REJECT_UNKNOWN_GRANTEE
        if not _owns_or_admin(state, author, body.patient_id) and not _may_claim(
            state, author, body.patient_id
        ):
            return REJECT_NOT_OWNER
        return None

    if isinstance(body, AccessRevoke):
        if not _owns_or_admin(state, author, body.patient_id):
            return REJECT_NOT_OWNER
        if (body.patient_id, body.grantee_id) not in state.grants:
            return REJECT_NO_SUCH_GRANT
        return None

    if isinstance(body, Appointment):
        provider = state.identities.get(body.provider_id)
        if provider is None or provider.role != ROLE_PROVIDER:
            return REJECT_UNKNOWN_PROVIDER
        if author.identity_id == body.provider_id:
            return None
        if state.patient_owner.get(body.patient_id) == author.identity_id:
            return None
        if _may_claim(state, author, body.patient_id):
            return None
        return REJECT_NOT_PARTICIPANT

    return REJECT_BAD_ROLE


def apply_transaction(state: ChainState, tx: Transaction, block_index: int) -> None:
    """Fold one admitted transaction into the state (mutates in place).

    Total over chains that passed append-time validation; stray
    inconsistencies degrade to no-ops rather than aborting the fold.
    """
    body = tx.body
    author_ident = derive_identity_id(tx.author_pubkey)

    if isinstance(body, IdentityReg):
        ident_id = derive_identity_id(body.public_key)
        if ident_id not in state.identities:
            state.identities[ident_id] = Identity(
                identity_id=ident_id,
                public_key=body.public_key,
                role=body.role,
                display_name=body.display_name,
            )
        return

    author = state.identities.get(author_ident)
    claims = author is not None and author.role == ROLE_PATIENT

    if isinstance(body, RecordAnchor):
        if claims and body.patient_id not in state.patient_owner:
            state.patient_owner[body.patient_id] = author_ident
        state.anchors.setdefault(body.patient_id, []).append(body.content_address)
        return

    if isinstance(body, AccessGrant):
        if claims and body.patient_id not in state.patient_owner:
            state.patient_owner[body.patient_id] = author_ident
        state.grants[(body.patient_id, body.grantee_id)] = Grant(
            patient_id=body.patient_id,
            grantee_id=body.grantee_id,
            scope=body.scope,
            expires_at_ms=body.expires_at_ms,
            granted_in_block=block_index,
        )
        return

    if isinstance(body, AccessRevoke):
        state.grants.pop((body.patient_id, body.grantee_id), None)
        return

    if isinstance(body, Appointment):
        if claims and body.patient_id not in state.patient_owner:
            state.patient_owner[body.patient_id] = author_ident
        state.appointments.append(
            AppointmentEntry(
                patient_id=body.patient_id,
                provider_id=body.provider_id,
                slot_ms=body.slot_ms,
                note=body.note,
                block_index=block_index,
                tx_id=tx.tx_id,
            )
        )
        return


def materialize(chain: Chain) -> ChainState:
    """Left-fold over blocks then transactions, in order."""
    state = ChainState()
    for block in chain.blocks:
        for tx in block.transactions:
            apply_transaction(state, tx, block.header.index)
    return state


def evaluate_access(
    state: ChainState,
    requester: bytes,
    patient_id: int,
    action: str,
    now_ms: int,
) -> AccessDecision:
    """Allow iff the requester owns the patient id, is an admin, or holds
    an unexpired grant of sufficient scope."""
    if action not in ACTIONS:
        raise ValueError(f"unknown action: {action!r}")
    ident = state.identities.get(requester)
    if ident is None:
        return deny(DENY_UNKNOWN_IDENTITY)
    if state.patient_owner.get(patient_id) == requester:
        return ALLOW
    if ident.role == ROLE_ADMIN:
        return ALLOW
    grant = state.grants.get((patient_id, requester))
    if grant is None:
        return deny(DENY_NO_GRANT)
    if grant.expires_at_ms is not None and now_ms >= grant.expires_at_ms:
        return deny(DENY_EXPIRED)
    if action == ACTION_WRITE and grant.scope != SCOPE_READ_WRITE:
        return deny(DENY_INSUFFICIENT_SCOPE)
    return ALLOW


def may_write_record(
    state: ChainState, requester: bytes, patient_id: int, now_ms: int
) -> AccessDecision:
    """Write check including the first-claim rule for unowned patient ids."""
    ident = state.identities.get(requester)
    if ident is None:
        return deny(DENY_UNKNOWN_IDENTITY)
    if patient_id not in state.patient_owner and ident.role == ROLE_PATIENT:
        return ALLOW
    return evaluate_access(state, requester, patient_id, ACTION_WRITE, now_ms)


# ---------------------------------------------------------------------------
# Transaction builders


def make_grant(
    patient_key: KeyPair,
    patient_id: int,
    grantee_id: bytes,
    scope: str,
    expires_at_ms: int | None = None,
) -> Transaction:
    if scope not in SCOPES:
        raise ValueError(f"unknown scope: {scope!r}")
    return make_transaction(AccessGrant(patient_id, grantee_id, scope, expires_at_ms), patient_key)


def make_revoke(patient_key: KeyPair, patient_id: int, grantee_id: bytes) -> Transaction:
    return make_transaction(AccessRevoke(patient_id, grantee_id), patient_key)


def make_appointment(
    author_key: KeyPair,
    patient_id: int,
    provider_id: bytes,
    slot_ms: int,
    note: str,
) -> Transaction:
    return make_transaction(Appointment(patient_id, provider_id, slot_ms, note), author_key)


def make_registration(keypair: KeyPair, role: str, display_name: str) -> Transaction:
    """Self-signed identity registration."""
    if role not in ROLES:
        raise ValueError(f"unknown role: {role!r}")
    return make_transaction(IdentityReg(keypair.public_key, role, display_name), keypair)


# ---------------------------------------------------------------------------
# Audit

@dataclass(frozen=True)
class AuditEntry:
    block_index: int
    tx_index: int
    tx_id: bytes
    kind: str
    detail: dict

    def to_dict(self) -> dict:
        return {
            "block_index": self.block_index,
            "tx_index": self.tx_index,
            "tx_id": self.tx_id.hex(),
            "kind": self.kind,
            "detail": self.detail,
        }


def _tx_patient_id(tx: Transaction) -> int | None:
    body = tx.body
    if isinstance(body, (RecordAnchor, AccessGrant, AccessRevoke, Appointment)):
        return body.patient_id
    return None


def _tx_detail(tx: Transaction) -> dict:
    body = tx.body
    if isinstance(body, RecordAnchor):
        return {"content_address": body.content_address.hex(), "author_id": body.author_id.hex()}
    if isinstance(body, AccessGrant):
        return {
            "grantee_id": body.grantee_id.hex(),
            "scope": body.scope,
            "expires_at_ms": body.expires_at_ms,
        }
    if isinstance(body, AccessRevoke):
        return {"grantee_id": body.grantee_id.hex()}
    if isinstance(body, Appointment):
        return {"provider_id": body.provider_id.hex(), "slot_ms": body.slot_ms, "note": body.note}
    return {}


def audit_trail(chain: Chain, patient_id: int) -> list[AuditEntry]:
    """Every on-chain transaction touching the patient id, in chain order."""
    trail: list[AuditEntry] = []
    for block in chain.blocks:
        for tx_index, tx in enumerate(block.transactions):
            if _tx_patient_id(tx) == patient_id:
                trail.append(
                    AuditEntry(
                        block_index=block.header.index,
                        tx_index=tx_index,
                        tx_id=tx.tx_id,
                        kind=tx.kind,
                        detail=_tx_detail(tx),
                    )
                )
    return trail


# ---------------------------------------------------------------------------
# Canonical rendering

def canonical_state_dump(state: ChainState) -> str:
    """Deterministic text rendering of a state: sorted keys, one line per
    fact. Used for golden restart tests."""
    lines: list[str] = []
    for ident_id in sorted(state.identities):
        ident = state.identities[ident_id]
        lines.append(
            f"identity {ident_id.hex()} role={ident.role} "
            f"pubkey={ident.public_key.hex()} name={json.dumps(ident.display_name)}"
        )
    for patient_id in sorted(state.patient_owner):
        lines.append(f"owner {patient_id} {state.patient_owner[patient_id].hex()}")
    for patient_id in sorted(state.anchors):
        for seq, addr in enumerate(state.anchors[patient_id]):
            lines.append(f"anchor {patient_id} {seq} {addr.hex()}")
    for patient_id, grantee_id in sorted(state.grants):
        grant = state.grants[(patient_id, grantee_id)]
        expires = "none" if grant.expires_at_ms is None else str(grant.expires_at_ms)
        lines.append(
            f"grant {patient_id} {grantee_id.hex()} scope={grant.scope} "
            f"expires={expires} block={grant.granted_in_block}"
        )
    for seq, appt in enumerate(state.appointments):
        lines.append(
            f"appointment {seq} patient={appt.patient_id} provider={appt.provider_id.hex()} "
            f"slot={appt.slot_ms} note={json.dumps(appt.note)} block={appt.block_index}"
        )
    return "".join(line + "\n" for line in lines)
