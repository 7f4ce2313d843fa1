"""Key handling: signing, identity derivation, keypair files."""

from __future__ import annotations

import hashlib
import stat

import pytest

from medledger.keys import (
    KeyPair,
    identity_id,
    load_keypair_file,
    save_keypair_file,
    verify_signature,
)


def test_sign_verify_round_trip():
    keypair = KeyPair.from_seed(bytes(range(32)))
    message = b"attest this"
    signature = keypair.sign(message)
    assert len(signature) == 64
    assert verify_signature(keypair.public_key, signature, message)
    assert not verify_signature(keypair.public_key, signature, message + b"!")
    flipped = bytes([signature[0] ^ 0x01]) + signature[1:]
    assert not verify_signature(keypair.public_key, flipped, message)


def test_seed_determines_keypair():
    a = KeyPair.from_seed(bytes(32))
    b = KeyPair.from_seed(bytes(32))
    assert a.public_key == b.public_key
    assert KeyPair.from_seed(bytes([1]) + bytes(31)).public_key != a.public_key


def test_generate_is_distinct():
    assert KeyPair.generate().public_key != KeyPair.generate().public_key


def test_identity_id_is_pubkey_hash():
    keypair = KeyPair.from_seed(bytes(32))
    assert identity_id(keypair.public_key) == hashlib.sha256(keypair.public_key).digest()


def test_bad_seed_length_rejected():
    with pytest.raises(ValueError):
        KeyPair.from_seed(b"short")


def test_keypair_file_round_trip(tmp_path):
    keypair = KeyPair.generate()
    path = tmp_path / "probe.key"
    save_keypair_file(path, keypair, "provider", "Dr. Probe")
    loaded, role, name = load_keypair_file(path)
    assert loaded.seed == keypair.seed
    assert loaded.public_key == keypair.public_key
    assert (role, name) == ("provider", "Dr. Probe")
    mode = stat.S_IMODE(path.stat().st_mode)
    assert mode & 0o077 == 0, "keypair file must not be group/world readable"
    assert path.read_text().splitlines()[0] == keypair.seed.hex()


def test_keypair_file_rejects_bad_role(tmp_path):
    keypair = KeyPair.generate()
    with pytest.raises(ValueError):
        save_keypair_file(tmp_path / "x.key", keypair, "wizard", "x")
    path = tmp_path / "b.key"
    path.write_text(f"{keypair.seed.hex()}\nwizard\nx\n")
    with pytest.raises(ValueError):
        load_keypair_file(path)


def test_keypair_file_rejects_malformed(tmp_path):
    path = tmp_path / "m.key"
    path.write_text("only-one-line\n")
    with pytest.raises(ValueError):
        load_keypair_file(path)
    path.write_text("nothex\npatient\nname\n")
    with pytest.raises(ValueError):
        load_keypair_file(path)
