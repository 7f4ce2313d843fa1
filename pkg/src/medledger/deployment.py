"""A deployment directory bound to one running ledger.

Ties together the pieces a service or CLI needs: config, the single-writer
ledger over the persisted chain log, the content-addressed blob vault, and
the key store holding per-patient data keys plus custodial signing seeds
for identities registered here. All policy checks happen in this layer or
below; callers above it only translate errors.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from . import chain as chain_ops
from . import encoding, policy, vault
from .chain import BlockFailure, VerificationReport
from .config import (
    CONFIG_BASENAME,
    DeploymentConfig,
    config_path_from_env,
    load_config,
    write_config,
)
from .keys import KeyPair, identity_id
from .ledger import Ledger, MiningResult, now_ms, scan_chain_log
from .models import PatientRecord, RecordAnchor
from .policy import AccessDecision, AppointmentEntry, AuditEntry, ChainState

RECORD_NONCE_CONTEXT = b"medledger-record-nonce"


class DeploymentError(Exception):
    pass


class AlreadyInitialized(DeploymentError):
    pass


class NotInitialized(DeploymentError):
    pass


class UnknownSigner(DeploymentError):
    pass


class AccessDenied(DeploymentError):
    def __init__(self, decision: AccessDecision):
        super().__init__(decision.reason or "denied")
        self.decision = decision


@dataclass(frozen=True)
class TxReceipt:
    tx_id: bytes
    block_index: int | None
    attempts: int | None = None


@dataclass(frozen=True)
class SubmitReceipt:
    content_address: bytes
    tx_id: bytes
    block_index: int | None
    attempts: int | None = None


@dataclass(frozen=True)
class FetchedRecord:
    record: PatientRecord
    content_address: bytes
    tx_id: bytes
    block_index: int


def derive_record_nonce(key: bytes, record_bytes: bytes) -> bytes:
    """Nonce as a hash of key and plaintext: identical submissions seal to
    identical bytes (stable content address), distinct plaintexts can never
    collide on (key, nonce)."""
    return hashlib.sha256(RECORD_NONCE_CONTEXT + key + record_bytes).digest()[
        : vault.AEAD_NONCE_LEN
    ]


class Deployment:
    def __init__(
        self,
        config: DeploymentConfig,
        clock: Callable[[], int] = now_ms,
        _fresh: bool = False,
    ):
        self.config = config
        self.clock = clock
        config.vault_path.mkdir(parents=True, exist_ok=True)
        config.keys_path.mkdir(parents=True, exist_ok=True)
        self.blobs = vault.BlobStore(config.vault_path)
        self.keystore = vault.Keystore(config.keys_path)
        if _fresh:
            self.ledger = Ledger(
                difficulty_bits=config.difficulty_bits,
                log_path=config.chain_log_path,
                clock=clock,
            )
        else:
            self.ledger = Ledger.open(
                config.chain_log_path,
                difficulty_bits=config.difficulty_bits,
                clock=clock,
            )

    # -- lifecycle ---------------------------------------------------------

    @classmethod
    def init_dir(
        cls,
        path: str | Path,
        difficulty_bits: int = 12,
        auto_mine: bool = True,
        listen_addr: str | None = None,
        clock: Callable[[], int] = now_ms,
    ) -> "Deployment":
        base = Path(path).resolve()
        config_path = base / CONFIG_BASENAME
        if config_path.exists():
            raise AlreadyInitialized(f"{config_path} already exists")
        base.mkdir(parents=True, exist_ok=True)
        fields = {
            "difficulty_bits": difficulty_bits,
            "auto_mine": auto_mine,
            "base_dir": base,
        }
        if listen_addr is not None:
            fields["listen_addr"] = listen_addr
        config = DeploymentConfig(**fields)
        config.validate()
        write_config(config_path, config)
        return cls(config, clock=clock, _fresh=True)

    @classmethod
    def open_dir(cls, path: str | Path, clock: Callable[[], int] = now_ms) -> "Deployment":
        return cls.open_config(Path(path) / CONFIG_BASENAME, clock=clock)

    @classmethod
    def open_config(
        cls, config_path: str | Path, clock: Callable[[], int] = now_ms
    ) -> "Deployment":
        config_path = Path(config_path)
        if not config_path.exists():
            raise NotInitialized(f"no config file at {config_path}")
        return cls(load_config(config_path), clock=clock)

    @classmethod
    def open_env(
        cls, fallback_dir: str | Path | None = None, clock: Callable[[], int] = now_ms
    ) -> "Deployment":
        return cls.open_config(config_path_from_env(fallback_dir), clock=clock)

    def close(self) -> None:
        self.ledger.close()

    def __enter__(self) -> "Deployment":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- snapshots ---------------------------------------------------------

    @property
    def state(self) -> ChainState:
        return self.ledger.state

    @property
    def state_with_pending(self) -> ChainState:
        return self.ledger.state_with_pending

    def _maybe_mine(self) -> MiningResult | None:
        if self.config.auto_mine:
            return self.ledger.mine()
        return None

    def _signer(self, author_id: bytes) -> KeyPair:
        try:
            return self.keystore.signer(author_id)
        except vault.NotFound as exc:
            raise UnknownSigner(f"no signing seed held for {author_id.hex()}") from exc

    def _receipt(self, tx_id: bytes, mined: MiningResult | None) -> TxReceipt:
        if mined is None:
            return TxReceipt(tx_id=tx_id, block_index=None)
        return TxReceipt(
            tx_id=tx_id, block_index=mined.block.header.index, attempts=mined.attempts
        )

    # -- identity ----------------------------------------------------------

    def register_identity(
        self, role: str, display_name: str, keypair: KeyPair | None = None
    ) -> tuple[KeyPair, TxReceipt]:
        """Register an identity and retain its signing seed so later
        submissions made through this deployment can be signed on its
        behalf."""
        kp = keypair if keypair is not None else KeyPair.generate()
        tx = policy.make_registration(kp, role, display_name)
        self.ledger.submit(tx)
        self.keystore.put_signer_seed(identity_id(kp.public_key), kp.seed)
        mined = self._maybe_mine()
        return kp, self._receipt(tx.tx_id, mined)

    # -- records -----------------------------------------------------------

    def submit_record(self, author_id: bytes, record: PatientRecord) -> SubmitReceipt:
        vault.validate_record(record)
        decision = policy.may_write_record(
            self.state_with_pending, author_id, record.patient_id, self.clock()
        )
        if not decision:
            raise AccessDenied(decision)
        signer = self._signer(author_id)
        key = self.keystore.data_key(record.patient_id, create=True)
        record_bytes = encoding.encode_patient_record(record)
        sealed = vault.seal_record(record, key, derive_record_nonce(key, record_bytes))
        address = self.blobs.store(sealed)
        tx = chain_ops.make_transaction(
            RecordAnchor(
                patient_id=record.patient_id, content_address=address, author_id=author_id
            ),
            signer,
        )
        self.ledger.submit(tx)
        mined = self._maybe_mine()
        return SubmitReceipt(
            content_address=address,
            tx_id=tx.tx_id,
            block_index=mined.block.header.index if mined else None,
            attempts=mined.attempts if mined else None,
        )

    def fetch_records(self, requester_id: bytes, patient_id: int) -> list[FetchedRecord]:
        decision = policy.evaluate_access(
            self.state, requester_id, patient_id, policy.ACTION_READ, self.clock()
        )
        if not decision:
            raise AccessDenied(decision)
        try:
            key = self.keystore.data_key(patient_id)
        except vault.NotFound:
            return []
        out: list[FetchedRecord] = []
        for block in self.ledger.chain.blocks:
            for tx in block.transactions:
                body = tx.body
                if isinstance(body, RecordAnchor) and body.patient_id == patient_id:
                    sealed = self.blobs.fetch(body.content_address)
                    record = vault.open_record(sealed, key, patient_id)
                    out.append(
                        FetchedRecord(
                            record=record,
                            content_address=body.content_address,
                            tx_id=tx.tx_id,
                            block_index=block.header.index,
                        )
                    )
        return out

    # -- grants and appointments ------------------------------------------

    def grant_access(
        self,
        author_id: bytes,
        patient_id: int,
        grantee_id: bytes,
        scope: str,
        expires_at_ms: int | None,
    ) -> TxReceipt:
        tx = policy.make_grant(
            self._signer(author_id), patient_id, grantee_id, scope, expires_at_ms
        )
        self.ledger.submit(tx)
        return self._receipt(tx.tx_id, self._maybe_mine())

    def revoke_access(
        self, author_id: bytes, patient_id: int, grantee_id: bytes
    ) -> TxReceipt:
        tx = policy.make_revoke(self._signer(author_id), patient_id, grantee_id)
        self.ledger.submit(tx)
        return self._receipt(tx.tx_id, self._maybe_mine())

    def book_appointment(
        self,
        author_id: bytes,
        patient_id: int,
        provider_id: bytes,
        slot_ms: int,
        note: str,
    ) -> TxReceipt:
        tx = policy.make_appointment(
            self._signer(author_id), patient_id, provider_id, slot_ms, note
        )
        self.ledger.submit(tx)
        return self._receipt(tx.tx_id, self._maybe_mine())

    def appointments_for(self, identity: bytes) -> list[AppointmentEntry]:
        state = self.state
        role = state.role_of(identity)
        out = []
        for entry in state.appointments:
            if role == policy.ROLE_ADMIN:
                out.append(entry)
            elif entry.provider_id == identity:
                out.append(entry)
            elif state.patient_owner.get(entry.patient_id) == identity:
                out.append(entry)
        return out

    # -- chain operations --------------------------------------------------

    def mine(self) -> MiningResult:
        return self.ledger.mine()

    def audit(self, patient_id: int) -> list[AuditEntry]:
        return policy.audit_trail(self.ledger.chain, patient_id)

    def verify_live(self) -> VerificationReport:
        return self.ledger.verify(pin_difficulty=True)

    def verify_persisted(self) -> VerificationReport:
        """Re-read the log from disk and verify what is actually stored."""
        blocks, problem = scan_chain_log(self.config.chain_log_path)
        if problem is not None:
            return VerificationReport(
                ok=False,
                failures=(
                    BlockFailure(block_index=len(blocks), reason=chain_ops.BAD_ENCODING),
                ),
            )
        return chain_ops.verify_chain(
            chain_ops.Chain(blocks=blocks),
            expected_difficulty_bits=self.config.difficulty_bits,
        )

    def state_dump(self) -> str:
        return policy.canonical_state_dump(self.ledger.state)

    def corrupt_log_record(self, block_index: int, flip_offset: int = -1) -> None:
        """Test hook: flip one byte inside the persisted record for the
        given block. The default offset lands in the final transaction's
        signature, which keeps the record decodable."""
        path = self.config.chain_log_path
        raw = bytearray(path.read_bytes())
        pos = len(b"MLG1")
        index = 0
        while pos + 4 <= len(raw):
            length = int.from_bytes(raw[pos : pos + 4], "big")
            start = pos + 4
            if index == block_index:
                target = start + (length + flip_offset if flip_offset < 0 else flip_offset)
                raw[target] ^= 0x01
                path.write_bytes(bytes(raw))
                return
            pos = start + length
            index += 1
        raise DeploymentError(f"no record for block {block_index} in {path}")
