#!/usr/bin/env python3
"""Regenerate the golden wire-format fixtures.

Deliberately imports nothing from the package: every byte is produced
with struct, hashlib, and the raw Ed25519/AES-GCM primitives, straight
from the declared layout. Tests then require the package encoders to
reproduce these bytes exactly.

Usage: python3 scripts/gen_golden.py [--out fixtures/golden]
"""

from __future__ import annotations

import argparse
import hashlib
import json
import struct
from pathlib import Path

from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.serialization import (
    Encoding,
    PublicFormat,
)

DIFFICULTY_BITS = 8


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def text(value: str) -> bytes:
    raw = value.encode("utf-8")
    return struct.pack(">I", len(raw)) + raw


def keypair(label: str):
    seed = sha256(f"golden:{label}".encode())
    private = Ed25519PrivateKey.from_private_bytes(seed)
    public = private.public_key().public_bytes(Encoding.Raw, PublicFormat.Raw)
    return seed, private, public


def sign_tx(body: bytes, private: Ed25519PrivateKey) -> bytes:
    tx_id = sha256(body)
    return body + struct.pack(">32s64s", tx_id, private.sign(tx_id))


def header_bytes(index, prev, root, ts, bits, nonce) -> bytes:
    return struct.pack(">Q32s32sQBQ", index, prev, root, ts, bits, nonce)


def meets(digest: bytes, bits: int) -> bool:
    if bits == 0:
        return True
    return (int.from_bytes(digest[:4], "big") >> (32 - bits)) == 0


def mine(index, prev, txs: list[bytes], ts, bits) -> bytes:
    root = sha256(struct.pack(">I", len(txs)) + b"".join(txs))
    prefix = struct.pack(">Q32s32sQB", index, prev, root, ts, bits)
    nonce = 0
    while True:
        if meets(sha256(prefix + struct.pack(">Q", nonce)), bits):
            break
        nonce += 1
    return header_bytes(index, prev, root, ts, bits, nonce) + struct.pack(
        ">I", len(txs)
    ) + b"".join(txs)


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "fixtures" / "golden"))
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    hanu_seed, hanu_priv, hanu_pub = keypair("hanu")
    bob_seed, bob_priv, bob_pub = keypair("drbob")
    hanu_id = sha256(hanu_pub)
    bob_id = sha256(bob_pub)

    # Patient record and its sealed form. Key and nonce fixed so the
    # ciphertext is reproducible.
    record = (
        text("hanu")
        + struct.pack(">Q", 20)
        + text("100")
        + text("20.8")
        + struct.pack(">Q", 52)
        + struct.pack(">I", 1)
        + text("note")
        + text("routine check")
    )
    data_key = bytes(range(32))
    nonce12 = bytes([1] * 12)
    ciphertext = AESGCM(data_key).encrypt(nonce12, record, struct.pack(">Q", 52))
    key_id = hashlib.sha256(b"medledger-key-id" + data_key).hexdigest()[:16]
    sealed = text(key_id) + struct.pack(">12s", nonce12) + struct.pack(">I", len(ciphertext)) + ciphertext
    address = sha256(sealed)

    # Transactions: every kind, both expiry arms.
    reg_hanu = sign_tx(
        struct.pack(">B32sB", 1, hanu_pub, 1) + text("hanu") + struct.pack(">32s", hanu_pub),
        hanu_priv,
    )
    reg_bob = sign_tx(
        struct.pack(">B32sB", 1, bob_pub, 2) + text("drbob") + struct.pack(">32s", bob_pub),
        bob_priv,
    )
    anchor = sign_tx(
        struct.pack(">BQ32s32s", 2, 52, address, hanu_id) + struct.pack(">32s", hanu_pub),
        hanu_priv,
    )
    grant = sign_tx(
        struct.pack(">BQ32sB", 3, 52, bob_id, 1)
        + struct.pack(">BQ", 1, 1_900_000_000_000)
        + struct.pack(">32s", hanu_pub),
        hanu_priv,
    )
    grant_forever = sign_tx(
        struct.pack(">BQ32sB", 3, 52, bob_id, 2)
        + struct.pack(">B", 0)
        + struct.pack(">32s", hanu_pub),
        hanu_priv,
    )
    revoke = sign_tx(
        struct.pack(">BQ32s", 4, 52, bob_id) + struct.pack(">32s", hanu_pub), hanu_priv
    )
    appointment = sign_tx(
        struct.pack(">BQ32sQ", 5, 52, bob_id, 1_750_000_000_000)
        + text("follow-up")
        + struct.pack(">32s", hanu_pub),
        hanu_priv,
    )

    genesis_root = sha256(struct.pack(">I", 0))
    genesis = header_bytes(0, bytes(32), genesis_root, 0, 0, 0) + struct.pack(">I", 0)
    blocks = [genesis]
    prev = sha256(genesis[:89])
    for i, txs in enumerate(
        [[reg_hanu, reg_bob], [anchor, grant], [grant_forever, revoke, appointment]],
        start=1,
    ):
        block = mine(i, prev, txs, 1_700_000_000_000 + i, DIFFICULTY_BITS)
        blocks.append(block)
        prev = sha256(block[:89])

    (out / "genesis_block.bin").write_bytes(genesis)
    (out / "record_hanu.bin").write_bytes(record)
    (out / "sealed_hanu.bin").write_bytes(sealed)
    log = b"MLG1" + b"".join(struct.pack(">I", len(b)) + b for b in blocks)
    (out / "golden_chain.log").write_bytes(log)

    meta = {
        "difficulty_bits": DIFFICULTY_BITS,
        "genesis_digest": sha256(genesis[:89]).hex(),
        "block_digests": [sha256(b[:89]).hex() for b in blocks],
        "tx_ids": {
            "reg_hanu": sha256(reg_hanu[:-96]).hex(),
            "reg_bob": sha256(reg_bob[:-96]).hex(),
            "anchor": sha256(anchor[:-96]).hex(),
            "grant": sha256(grant[:-96]).hex(),
            "grant_forever": sha256(grant_forever[:-96]).hex(),
            "revoke": sha256(revoke[:-96]).hex(),
            "appointment": sha256(appointment[:-96]).hex(),
        },
        "seeds": {"hanu": hanu_seed.hex(), "drbob": bob_seed.hex()},
        "identity_ids": {"hanu": hanu_id.hex(), "drbob": bob_id.hex()},
        "data_key": data_key.hex(),
        "nonce": nonce12.hex(),
        "key_id": key_id,
        "content_address": address.hex(),
        "record_fields": {
            "username": "hanu",
            "age": 20,
            "temperature": "100",
            "time": "20.8",
            "patient_id": 52,
            "extra": {"note": "routine check"},
        },
        "block_timestamps": [0, 1_700_000_000_001, 1_700_000_000_002, 1_700_000_000_003],
    }
    (out / "golden.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    print(f"wrote 5 fixture files to {out}")


if __name__ == "__main__":
    main()
