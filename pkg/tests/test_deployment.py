"""Deployment directories: init, restart, record lifecycle, integrity."""

from __future__ import annotations

import hashlib

import pytest

from medledger.chain import BAD_ENCODING
from medledger.encoding import HEADER_LEN
from medledger.deployment import (
    AccessDenied,
    AlreadyInitialized,
    Deployment,
    DeploymentError,
    NotInitialized,
    UnknownSigner,
    derive_record_nonce,
)
from medledger.keys import KeyPair
from medledger.models import PatientRecord, SCOPE_READ, SCOPE_READ_WRITE
from medledger.vault import CorruptBlob, InvalidRecord

from conftest import FakeClock

BITS = 8


def record_for(pid: int, **overrides) -> PatientRecord:
    fields = dict(
        username="hanu",
        age=20,
        temperature="100",
        time="20.8",
        patient_id=pid,
        extra={},
    )
    fields.update(overrides)
    return PatientRecord(**fields)


@pytest.fixture()
def clock():
    return FakeClock()


@pytest.fixture()
def dep(tmp_path, clock):
    d = Deployment.init_dir(tmp_path / "dep", difficulty_bits=BITS, clock=clock)
    yield d
    d.close()


# -------------------------------------------------------------- directories


def test_init_twice_refuses(tmp_path, clock):
    Deployment.init_dir(tmp_path / "d", difficulty_bits=BITS, clock=clock).close()
    with pytest.raises(AlreadyInitialized):
        Deployment.init_dir(tmp_path / "d", difficulty_bits=BITS, clock=clock)


def test_open_uninitialized_refuses(tmp_path):
    with pytest.raises(NotInitialized):
        Deployment.open_dir(tmp_path / "missing")


def test_open_env_uses_environment(tmp_path, clock, monkeypatch):
    Deployment.init_dir(tmp_path / "d", difficulty_bits=BITS, clock=clock).close()
    monkeypatch.setenv("MEDLEDGER_CONFIG", str(tmp_path / "d" / "medledger.toml"))
    with Deployment.open_env(clock=clock) as dep:
        assert dep.config.difficulty_bits == BITS


def test_init_writes_layout(tmp_path, clock):
    with Deployment.init_dir(tmp_path / "d", difficulty_bits=BITS, clock=clock) as dep:
        base = dep.config.base_dir
        assert (base / "medledger.toml").is_file()
        assert (base / "chain.log").is_file()
        assert dep.ledger.height() == 0


# ---------------------------------------------------------------- lifecycle


def test_register_submit_fetch_lifecycle(dep):
    keypair, receipt = dep.register_identity("patient", "hanu")
    assert receipt.block_index == 1
    ident = dep.state.identity_by_name("hanu")
    assert ident is not None

    submit = dep.submit_record(ident.identity_id, record_for(52))
    assert submit.block_index == 2
    assert len(submit.content_address) == 32

    fetched = dep.fetch_records(ident.identity_id, 52)
    assert len(fetched) == 1
    assert fetched[0].record == record_for(52)
    assert fetched[0].content_address == submit.content_address
    assert fetched[0].block_index == 2


def test_submit_requires_custodial_seed(dep):
    # An identity registered with an externally held key cannot be signed
    # for after the seed is dropped from the keystore.
    keypair, _ = dep.register_identity("patient", "hanu")
    ident = dep.state.identity_by_name("hanu")
    other = KeyPair.generate()
    with pytest.raises(UnknownSigner):
        dep.grant_access(
            hashlib.sha256(other.public_key).digest(), 52, ident.identity_id, SCOPE_READ, None
        )


def test_submit_denied_without_ownership(dep):
    _, _ = dep.register_identity("patient", "hanu")
    hanu = dep.state.identity_by_name("hanu").identity_id
    dep.submit_record(hanu, record_for(52))
    _, _ = dep.register_identity("patient", "eve")
    eve = dep.state.identity_by_name("eve").identity_id
    with pytest.raises(AccessDenied) as exc:
        dep.submit_record(eve, record_for(52, username="eve"))
    assert exc.value.decision.reason == "NoGrant"


def test_submit_validates_before_sealing(dep):
    dep.register_identity("patient", "hanu")
    hanu = dep.state.identity_by_name("hanu").identity_id
    with pytest.raises(InvalidRecord):
        dep.submit_record(hanu, record_for(52, age=999))


def test_resubmission_reuses_content_address(dep):
    dep.register_identity("patient", "hanu")
    hanu = dep.state.identity_by_name("hanu").identity_id
    first = dep.submit_record(hanu, record_for(52))
    second = dep.submit_record(hanu, record_for(52))
    assert first.content_address == second.content_address
    assert len(dep.blobs.addresses()) == 1


def test_record_nonce_is_deterministic():
    key = bytes(range(32))
    assert derive_record_nonce(key, b"abc") == derive_record_nonce(key, b"abc")
    assert derive_record_nonce(key, b"abc") != derive_record_nonce(key, b"abd")
    assert len(derive_record_nonce(key, b"abc")) == 12


def test_grant_enables_provider_write(dep, clock):
    dep.register_identity("patient", "hanu")
    hanu = dep.state.identity_by_name("hanu").identity_id
    dep.submit_record(hanu, record_for(52))
    dep.register_identity("provider", "doc")
    doc = dep.state.identity_by_name("doc").identity_id

    with pytest.raises(AccessDenied):
        dep.submit_record(doc, record_for(52, username="note-by-doc"))
    dep.grant_access(hanu, 52, doc, SCOPE_READ_WRITE, None)
    receipt = dep.submit_record(doc, record_for(52, username="note-by-doc"))
    assert receipt.block_index is not None
    # Both entries fetch under the patient's key, newest last.
    fetched = dep.fetch_records(hanu, 52)
    assert [f.record.username for f in fetched] == ["hanu", "note-by-doc"]


def test_fetch_without_data_key_returns_empty(dep):
    # An admin can read any id, but an id nobody wrote has no key and no
    # blobs; the fetch is empty rather than an error.
    dep.register_identity("admin", "root")
    root = dep.state.identity_by_name("root").identity_id
    assert dep.fetch_records(root, 12345) == []


def test_auto_mine_off_leaves_pending(tmp_path, clock):
    with Deployment.init_dir(
        tmp_path / "manual", difficulty_bits=BITS, auto_mine=False, clock=clock
    ) as dep:
        _, receipt = dep.register_identity("patient", "hanu")
        assert receipt.block_index is None
        assert dep.ledger.height() == 0
        assert len(dep.ledger.pending) == 1
        result = dep.mine()
        assert result.block.header.index == 1
        assert dep.ledger.height() == 1


def test_appointments_for_filters_by_relation(dep):
    dep.register_identity("patient", "hanu")
    hanu = dep.state.identity_by_name("hanu").identity_id
    dep.submit_record(hanu, record_for(52))
    dep.register_identity("provider", "doc")
    doc = dep.state.identity_by_name("doc").identity_id
    dep.register_identity("provider", "other")
    other = dep.state.identity_by_name("other").identity_id
    dep.register_identity("admin", "root")
    root = dep.state.identity_by_name("root").identity_id

    dep.book_appointment(hanu, 52, doc, 1_800_000_000_000, "checkup")
    assert len(dep.appointments_for(hanu)) == 1
    assert len(dep.appointments_for(doc)) == 1
    assert dep.appointments_for(other) == []
    assert len(dep.appointments_for(root)) == 1


# ------------------------------------------------------------------ restart


def test_restart_reproduces_state_dump(tmp_path, clock):
    home = tmp_path / "dep"
    with Deployment.init_dir(home, difficulty_bits=BITS, clock=clock) as dep:
        dep.register_identity("patient", "hanu")
        hanu = dep.state.identity_by_name("hanu").identity_id
        dep.submit_record(hanu, record_for(52))
        dep.register_identity("provider", "doc")
        doc = dep.state.identity_by_name("doc").identity_id
        dep.grant_access(hanu, 52, doc, SCOPE_READ, None)
        dep.book_appointment(hanu, 52, doc, 1_800_000_000_000, "checkup")
        dump_before = dep.state_dump()
        height_before = dep.ledger.height()

    with Deployment.open_dir(home, clock=clock) as dep:
        assert dep.ledger.height() == height_before
        assert dep.state_dump() == dump_before
        # Data survives too: the sealed record still opens.
        hanu = dep.state.identity_by_name("hanu").identity_id
        fetched = dep.fetch_records(hanu, 52)
        assert [f.record.username for f in fetched] == ["hanu"]


# ---------------------------------------------------------------- integrity


def populated(dep) -> bytes:
    dep.register_identity("patient", "hanu")
    hanu = dep.state.identity_by_name("hanu").identity_id
    dep.submit_record(hanu, record_for(52))
    return hanu


def test_verify_persisted_clean(dep):
    populated(dep)
    report = dep.verify_persisted()
    assert report.ok and report.failures == ()


def test_verify_persisted_flags_signature_flip(dep):
    populated(dep)
    dep.corrupt_log_record(2)
    report = dep.verify_persisted()
    assert not report.ok
    assert any(f.block_index == 2 for f in report.failures)
    reasons = {f.reason for f in report.failures}
    assert "BadSignature" in reasons or "BadTxRoot" in reasons
    # The live chain in memory is unaffected.
    assert dep.verify_live().ok


def test_verify_persisted_flags_undecodable_record(dep):
    populated(dep)
    # The byte right after the fixed-width header is the high byte of the
    # transaction count; flipping it makes the record undecodable.
    dep.corrupt_log_record(1, flip_offset=HEADER_LEN)
    report = dep.verify_persisted()
    assert not report.ok
    assert report.failures[0].reason == BAD_ENCODING
    assert report.failures[0].block_index == 1


def test_corrupt_missing_block_raises(dep):
    populated(dep)
    with pytest.raises(DeploymentError):
        dep.corrupt_log_record(99)


def test_blob_corruption_surfaces_on_fetch(dep):
    hanu = populated(dep)
    addr = dep.blobs.addresses()[0]
    blob_path = dep.blobs._blob_path(addr)
    raw = bytearray(blob_path.read_bytes())
    raw[-1] ^= 0x01
    blob_path.write_bytes(bytes(raw))
    with pytest.raises(CorruptBlob):
        dep.fetch_records(hanu, 52)
