"""Record validation, AEAD sealing, blob storage, and the keystore."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from medledger import encoding
from medledger.models import PatientRecord, SealedRecord
from medledger.vault import (
    AuthFailure,
    BlobStore,
    CorruptBlob,
    InvalidRecord,
    Keystore,
    NotFound,
    content_address,
    default_key_id,
    normalize_decimal,
    open_record,
    seal_record,
    validate_record,
)

GOLDEN = Path(__file__).resolve().parents[1] / "fixtures" / "golden"

KEY = bytes(range(32))
NONCE = bytes(12)


def sample_record(**overrides) -> PatientRecord:
    fields = dict(
        username="hanu",
        age=20,
        temperature="100",
        time="20.8",
        patient_id=52,
        extra={"note": "routine check"},
    )
    fields.update(overrides)
    return PatientRecord(**fields)


# ---------------------------------------------------------------- validation


def test_validate_accepts_sample():
    validate_record(sample_record())


@pytest.mark.parametrize(
    "overrides",
    [
        {"username": ""},
        {"username": "x" * 300},
        {"age": -1},
        {"age": 201},
        {"age": 20.5},
        {"patient_id": 0},
        {"patient_id": -3},
        {"temperature": "warm"},
        {"time": ""},
        {"extra": {"k": 5}},
    ],
)
def test_validate_rejects(overrides):
    with pytest.raises(InvalidRecord):
        validate_record(sample_record(**overrides))


def test_username_byte_limit_counts_utf8():
    # 128 two-byte characters fit exactly in 256 bytes; one more does not.
    validate_record(sample_record(username="é" * 128))
    with pytest.raises(InvalidRecord):
        validate_record(sample_record(username="é" * 129))


def test_normalize_decimal():
    assert normalize_decimal(100) == "100"
    assert normalize_decimal(20.8) == "20.8"
    assert normalize_decimal("007") == "007"
    assert normalize_decimal("20.80") == "20.80"
    with pytest.raises(InvalidRecord):
        normalize_decimal("soon")
    with pytest.raises(InvalidRecord):
        normalize_decimal(True)


# ------------------------------------------------------------------- sealing


def test_seal_open_round_trip():
    record = sample_record()
    sealed = seal_record(record, KEY, NONCE)
    assert open_record(sealed, KEY, record.patient_id) == record
    assert sealed.key_id == default_key_id(KEY)


def test_seal_rejects_invalid_record():
    with pytest.raises(InvalidRecord):
        seal_record(sample_record(age=999), KEY, NONCE)


def test_seal_rejects_bad_key_and_nonce_lengths():
    with pytest.raises(ValueError):
        seal_record(sample_record(), KEY[:16], NONCE)
    with pytest.raises(ValueError):
        seal_record(sample_record(), KEY, NONCE[:8])
    with pytest.raises(ValueError):
        open_record(seal_record(sample_record(), KEY, NONCE), KEY[:16], 52)


def test_open_with_wrong_key_fails_auth():
    sealed = seal_record(sample_record(), KEY, NONCE)
    wrong = bytes(32)
    with pytest.raises(AuthFailure):
        open_record(sealed, wrong, 52)


def test_open_with_wrong_patient_id_fails_auth():
    # The patient id is authenticated data: a sealed record cannot be
    # re-attributed to a different patient.
    sealed = seal_record(sample_record(), KEY, NONCE)
    with pytest.raises(AuthFailure):
        open_record(sealed, KEY, 53)


def test_open_tampered_ciphertext_fails_auth():
    sealed = seal_record(sample_record(), KEY, NONCE)
    for offset in (0, len(sealed.ciphertext) // 2, len(sealed.ciphertext) - 1):
        mangled = bytearray(sealed.ciphertext)
        mangled[offset] ^= 0x01
        with pytest.raises(AuthFailure):
            open_record(
                SealedRecord(bytes(mangled), sealed.nonce, sealed.key_id),
                KEY,
                52,
            )


def test_content_address_is_hash_of_encoding():
    sealed = seal_record(sample_record(), KEY, NONCE)
    expected = hashlib.sha256(encoding.encode_sealed_record(sealed)).digest()
    assert content_address(sealed) == expected
    other = seal_record(sample_record(), KEY, bytes([7] * 12))
    assert content_address(other) != content_address(sealed)


def test_golden_sealed_record_bytes():
    golden = json.loads((GOLDEN / "golden.json").read_text())
    record = PatientRecord(**golden["record_fields"])
    sealed = seal_record(
        record,
        bytes.fromhex(golden["data_key"]),
        bytes.fromhex(golden["nonce"]),
    )
    assert encoding.encode_sealed_record(sealed) == (GOLDEN / "sealed_hanu.bin").read_bytes()
    assert content_address(sealed).hex() == golden["content_address"]


@settings(max_examples=40)
@given(
    username=st.text(min_size=1, max_size=32),
    age=st.integers(min_value=0, max_value=150),
    patient_id=st.integers(min_value=1, max_value=2**63),
    extra=st.dictionaries(st.text(max_size=8), st.text(max_size=16), max_size=4),
    key=st.binary(min_size=32, max_size=32),
    nonce=st.binary(min_size=12, max_size=12),
)
def test_seal_open_property(username, age, patient_id, extra, key, nonce):
    record = PatientRecord(
        username=username,
        age=age,
        temperature="98.6",
        time="12",
        patient_id=patient_id,
        extra=extra,
    )
    assert open_record(seal_record(record, key, nonce), key, patient_id) == record


# ----------------------------------------------------------------- BlobStore


def test_blobstore_store_fetch_round_trip(tmp_path):
    store = BlobStore(tmp_path / "vault")
    sealed = seal_record(sample_record(), KEY, NONCE)
    addr = store.store(sealed)
    assert addr == content_address(sealed)
    assert addr in store
    assert store.fetch(addr) == sealed
    assert store.addresses() == [addr]


def test_blobstore_store_is_idempotent(tmp_path):
    store = BlobStore(tmp_path / "vault")
    sealed = seal_record(sample_record(), KEY, NONCE)
    assert store.store(sealed) == store.store(sealed)
    assert store.addresses() == [content_address(sealed)]


def test_blobstore_fetch_unknown_raises(tmp_path):
    store = BlobStore(tmp_path / "vault")
    with pytest.raises(NotFound):
        store.fetch(bytes(32))
    assert bytes(32) not in store


def test_blobstore_detects_disk_corruption(tmp_path):
    store = BlobStore(tmp_path / "vault")
    sealed = seal_record(sample_record(), KEY, NONCE)
    addr = store.store(sealed)
    blob_path = store._blob_path(addr)
    raw = bytearray(blob_path.read_bytes())
    raw[len(raw) // 2] ^= 0x01
    blob_path.write_bytes(bytes(raw))
    with pytest.raises(CorruptBlob):
        store.fetch(addr)


def test_blobstore_detects_truncation(tmp_path):
    store = BlobStore(tmp_path / "vault")
    sealed = seal_record(sample_record(), KEY, NONCE)
    addr = store.store(sealed)
    blob_path = store._blob_path(addr)
    blob_path.write_bytes(blob_path.read_bytes()[:-3])
    with pytest.raises(CorruptBlob):
        store.fetch(addr)


def test_blobstore_manifest_is_sorted(tmp_path):
    store = BlobStore(tmp_path / "vault")
    addrs = []
    for i in range(5):
        sealed = seal_record(sample_record(patient_id=100 + i), KEY, NONCE)
        addrs.append(store.store(sealed))
    listed = store.manifest_path.read_text().splitlines()
    assert listed == sorted(a.hex() for a in addrs)
    assert store.addresses() == [bytes.fromhex(h) for h in listed]


def test_blobstore_survives_reopen(tmp_path):
    root = tmp_path / "vault"
    sealed = seal_record(sample_record(), KEY, NONCE)
    addr = BlobStore(root).store(sealed)
    again = BlobStore(root)
    assert again.fetch(addr) == sealed
    assert again.addresses() == [addr]


# ------------------------------------------------------------------ Keystore


def test_keystore_data_key_create_and_reload(tmp_path):
    ks = Keystore(tmp_path / "keys")
    key = ks.data_key(52, create=True)
    assert len(key) == 32
    assert ks.data_key(52) == key
    assert Keystore(tmp_path / "keys").data_key(52) == key
    assert ks.data_key(53, create=True) != key


def test_keystore_data_key_missing_raises(tmp_path):
    ks = Keystore(tmp_path / "keys")
    with pytest.raises(NotFound):
        ks.data_key(52)


def test_keystore_signer_seed_round_trip(tmp_path):
    from medledger.keys import KeyPair, identity_id

    ks = Keystore(tmp_path / "keys")
    keypair = KeyPair.from_seed(bytes([9] * 32))
    ident = identity_id(keypair.public_key)
    assert not ks.has_signer(ident)
    ks.put_signer_seed(ident, keypair.seed)
    assert ks.has_signer(ident)
    assert ks.signer(ident).public_key == keypair.public_key
    with pytest.raises(NotFound):
        ks.signer(bytes(32))


def test_keystore_files_are_private(tmp_path):
    import stat

    ks = Keystore(tmp_path / "keys")
    ks.data_key(52, create=True)
    files = [p for p in (tmp_path / "keys").rglob("*") if p.is_file()]
    assert files
    for path in files:
        assert stat.S_IMODE(path.stat().st_mode) & 0o077 == 0
