"""Wire format: golden fixtures, oracle cross-checks, round trips."""

from __future__ import annotations

import json
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from medledger import chain as chain_ops
from medledger import encoding
from medledger.keys import KeyPair
from medledger.ledger import read_chain_log
from medledger.models import (
    AccessGrant,
    AccessRevoke,
    Appointment,
    Block,
    BlockHeader,
    IdentityReg,
    MAX_U64,
    PatientRecord,
    RecordAnchor,
    ROLES,
    SCOPES,
    SealedRecord,
    Transaction,
)

from oracle_encoder import (
    oracle_block,
    oracle_header,
    oracle_patient_record,
    oracle_sealed_record,
    oracle_transaction,
)

GOLDEN = Path(__file__).resolve().parents[1] / "fixtures" / "golden"
META = json.loads((GOLDEN / "golden.json").read_text())

b32 = st.binary(min_size=32, max_size=32)
b64 = st.binary(min_size=64, max_size=64)
u64s = st.integers(min_value=0, max_value=MAX_U64)
short_text = st.text(max_size=24)

bodies = st.one_of(
    st.builds(
        IdentityReg,
        public_key=b32,
        role=st.sampled_from(ROLES),
        display_name=short_text,
    ),
    st.builds(RecordAnchor, patient_id=u64s, content_address=b32, author_id=b32),
    st.builds(
        AccessGrant,
        patient_id=u64s,
        grantee_id=b32,
        scope=st.sampled_from(SCOPES),
        expires_at_ms=st.one_of(st.none(), u64s),
    ),
    st.builds(AccessRevoke, patient_id=u64s, grantee_id=b32),
    st.builds(
        Appointment, patient_id=u64s, provider_id=b32, slot_ms=u64s, note=short_text
    ),
)

transactions = st.builds(
    Transaction, body=bodies, author_pubkey=b32, tx_id=b32, signature=b64
)

headers = st.builds(
    BlockHeader,
    index=u64s,
    prev_hash=b32,
    tx_root=b32,
    timestamp_ms=u64s,
    difficulty_bits=st.integers(min_value=0, max_value=32),
    nonce=u64s,
)

records = st.builds(
    PatientRecord,
    username=st.text(min_size=1, max_size=24),
    age=u64s,
    temperature=short_text,
    time=short_text,
    patient_id=u64s,
    extra=st.dictionaries(st.text(max_size=12), st.text(max_size=12), max_size=4),
)

sealed_records = st.builds(
    SealedRecord,
    ciphertext=st.binary(max_size=128),
    nonce=st.binary(min_size=12, max_size=12),
    key_id=st.text(max_size=20),
)


# -- golden fixtures -------------------------------------------------------

def test_genesis_bytes_match_golden():
    assert encoding.encode_block(chain_ops.GENESIS_BLOCK) == (
        GOLDEN / "genesis_block.bin"
    ).read_bytes()
    assert chain_ops.GENESIS_DIGEST.hex() == META["genesis_digest"]


def test_golden_chain_replays_and_verifies():
    chain = read_chain_log(GOLDEN / "golden_chain.log")
    assert chain_ops.verify_chain(chain).ok
    assert [chain_ops.header_digest(b.header).hex() for b in chain.blocks] == META[
        "block_digests"
    ]
    # re-encoding reproduces the log bytes exactly
    raw = (GOLDEN / "golden_chain.log").read_bytes()
    rebuilt = b"MLG1" + b"".join(
        len(encoded).to_bytes(4, "big") + encoded
        for encoded in (encoding.encode_block(b) for b in chain.blocks)
    )
    assert rebuilt == raw


def test_golden_record_bytes():
    fields = META["record_fields"]
    record = PatientRecord(
        username=fields["username"],
        age=fields["age"],
        temperature=fields["temperature"],
        time=fields["time"],
        patient_id=fields["patient_id"],
        extra=dict(fields["extra"]),
    )
    assert encoding.encode_patient_record(record) == (GOLDEN / "record_hanu.bin").read_bytes()


def test_golden_tx_ids():
    chain = read_chain_log(GOLDEN / "golden_chain.log")
    tx_ids = {tx.tx_id.hex() for block in chain.blocks for tx in block.transactions}
    assert set(META["tx_ids"].values()) == tx_ids


# -- oracle cross-checks ---------------------------------------------------

@given(transactions)
def test_transaction_encoding_matches_oracle(tx):
    assert encoding.encode_transaction(tx) == oracle_transaction(tx)


@given(transactions)
def test_transaction_round_trip(tx):
    assert encoding.decode_transaction(encoding.encode_transaction(tx)) == tx


@given(headers)
def test_header_matches_oracle_and_round_trips(header):
    data = encoding.encode_header(header)
    assert data == oracle_header(header)
    assert len(data) == encoding.HEADER_LEN
    prefix = encoding.encode_header_prefix(header)
    assert data == prefix + header.nonce.to_bytes(8, "big")
    assert encoding.decode_header(data) == header


@settings(max_examples=40)
@given(headers, st.lists(transactions, max_size=3))
def test_block_matches_oracle_and_round_trips(header, txs):
    block = Block(header=header, transactions=tuple(txs))
    data = encoding.encode_block(block)
    assert data == oracle_block(block)
    assert encoding.decode_block(data) == block


@given(records)
def test_patient_record_matches_oracle_and_round_trips(record):
    data = encoding.encode_patient_record(record)
    assert data == oracle_patient_record(record)
    decoded = encoding.decode_patient_record(data)
    assert decoded.username == record.username
    assert decoded.extra == dict(sorted(record.extra.items()))
    assert encoding.encode_patient_record(decoded) == data


@given(sealed_records)
def test_sealed_record_matches_oracle_and_round_trips(sealed):
    data = encoding.encode_sealed_record(sealed)
    assert data == oracle_sealed_record(sealed)
    assert encoding.decode_sealed_record(data) == sealed


# -- strictness ------------------------------------------------------------

@given(transactions)
def test_truncation_always_fails(tx):
    data = encoding.encode_transaction(tx)
    with pytest.raises(encoding.ParseError):
        encoding.decode_transaction(data[:-1])


@given(transactions)
def test_trailing_bytes_always_fail(tx):
    data = encoding.encode_transaction(tx)
    with pytest.raises(encoding.ParseError):
        encoding.decode_transaction(data + b"\x00")


def test_bad_role_tag_rejected():
    tx = chain_ops.make_transaction(
        IdentityReg(bytes(32), "patient", "x"), KeyPair.from_seed(bytes(32))
    )
    data = bytearray(encoding.encode_transaction(tx))
    data[1 + 32] = 9  # role tag follows the body tag and the public key
    with pytest.raises(encoding.ParseError):
        encoding.decode_transaction(bytes(data))


def test_field_boundaries_are_unambiguous():
    # moving a character across the username/temperature boundary must
    # change the bytes (length prefixes pin the split)
    a = PatientRecord(username="ab", age=1, temperature="c1", time="2", patient_id=1)
    b = PatientRecord(username="a", age=1, temperature="bc1", time="2", patient_id=1)
    assert encoding.encode_patient_record(a) != encoding.encode_patient_record(b)

    # the same across adjacent extra-map entries
    c = PatientRecord(
        username="u", age=1, temperature="1", time="2", patient_id=1,
        extra={"k": "ab", "l": "c"},
    )
    d = PatientRecord(
        username="u", age=1, temperature="1", time="2", patient_id=1,
        extra={"k": "a", "l": "bc"},
    )
    assert encoding.encode_patient_record(c) != encoding.encode_patient_record(d)


def test_extra_map_is_canonically_sorted():
    x = PatientRecord(
        username="u", age=1, temperature="1", time="2", patient_id=1,
        extra={"b": "2", "a": "1"},
    )
    y = PatientRecord(
        username="u", age=1, temperature="1", time="2", patient_id=1,
        extra={"a": "1", "b": "2"},
    )
    assert encoding.encode_patient_record(x) == encoding.encode_patient_record(y)


def test_out_of_range_integers_rejected():
    header = BlockHeader(
        index=0, prev_hash=bytes(32), tx_root=bytes(32),
        timestamp_ms=0, difficulty_bits=0, nonce=MAX_U64 + 1,
    )
    with pytest.raises(ValueError):
        encoding.encode_header(header)
    record = PatientRecord(
        username="u", age=-1, temperature="1", time="2", patient_id=1
    )
    with pytest.raises(ValueError):
        encoding.encode_patient_record(record)
