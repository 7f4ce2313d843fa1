"""Block chaining, proof-of-work mining, full-chain verification, fork choice.

Chains are immutable values: `append_block` returns a new `Chain` and never
touches the one passed in. All hashing is SHA-256 over the canonical binary
encoding.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from . import encoding
from .keys import KeyPair, verify_signature
from .models import (
    Block,
    BlockHeader,
    Chain,
    MAX_DIFFICULTY_BITS,
    MAX_U64,
    Transaction,
    TxBody,
    ZERO_DIGEST,
)

# Verification failure reasons, stable identifiers used in reports and APIs.
BAD_LINK = "BadLink"
BAD_TX_ROOT = "BadTxRoot"
BAD_POW = "BadPoW"
BAD_SIGNATURE = "BadSignature"
BAD_INDEX = "BadIndex"
BAD_GENESIS = "BadGenesis"
# Used by persisted-log verification when a record cannot be decoded at all.
BAD_ENCODING = "BadEncoding"

# Transaction fault reasons.
BAD_TX_ID = "BadTxId"


class ChainError(Exception):
    """Base class for chain-level failures."""


class RejectBadLink(ChainError):
    pass


class RejectBadPoW(ChainError):
    pass


class RejectBadTx(ChainError):
    pass


class RejectStaleParent(ChainError):
    pass


class NonceExhausted(ChainError):
    pass


class NoCandidates(ChainError):
    pass


class MixedGenesis(ChainError):
    pass


def hash_bytes(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def header_digest(header: BlockHeader) -> bytes:
    return hash_bytes(encoding.encode_header(header))


EMPTY_TX_ROOT = hash_bytes(encoding.encode_tx_list(()))

GENESIS_HEADER = BlockHeader(
    index=0,
    prev_hash=ZERO_DIGEST,
    tx_root=EMPTY_TX_ROOT,
    timestamp_ms=0,
    difficulty_bits=0,
    nonce=0,
)
GENESIS_BLOCK = Block(header=GENESIS_HEADER, transactions=())
GENESIS_DIGEST = header_digest(GENESIS_HEADER)


def new_chain() -> Chain:
    return Chain(blocks=(GENESIS_BLOCK,))


def meets_difficulty(digest: bytes, difficulty_bits: int) -> bool:
    """True iff the first `difficulty_bits` bits of the digest are zero."""
    if not 0 <= difficulty_bits <= MAX_DIFFICULTY_BITS:
        raise ValueError(f"difficulty_bits out of range: {difficulty_bits}")
    if difficulty_bits == 0:
        return True
    prefix = int.from_bytes(digest[:4], "big")
    return prefix >> (32 - difficulty_bits) == 0


def make_transaction(body: TxBody, keypair: KeyPair) -> Transaction:
    """Build a signed transaction: tx_id hashes the body, the signature
    covers tx_id."""
    body_bytes = encoding.encode_tx_body(body, keypair.public_key)
    tx_id = hash_bytes(body_bytes)
    signature = keypair.sign(tx_id)
    return Transaction(body=body, author_pubkey=keypair.public_key, tx_id=tx_id, signature=signature)


# Verified-signature memo. Chain verification is re-run wholesale (tamper
# sweeps, fork adoption), so identical (key, id, sig) triples recur heavily;
# Ed25519 results are immutable facts and safe to cache.
_SIG_CACHE: dict[tuple[bytes, bytes, bytes], bool] = {}
_SIG_CACHE_MAX = 1 << 17


def _signature_ok(tx: Transaction) -> bool:
    key = (tx.author_pubkey, tx.tx_id, tx.signature)
    hit = _SIG_CACHE.get(key)
    if hit is None:
        if len(_SIG_CACHE) >= _SIG_CACHE_MAX:
            _SIG_CACHE.clear()
        hit = verify_signature(tx.author_pubkey, tx.signature, tx.tx_id)
        _SIG_CACHE[key] = hit
    return hit


def transaction_fault(tx: Transaction) -> str | None:
    """None when the transaction is authentic, else the failing check."""
    try:
        body_bytes = encoding.encode_tx_body(tx.body, tx.author_pubkey)
    except ValueError:
        return BAD_TX_ID
    if hash_bytes(body_bytes) != tx.tx_id:
        return BAD_TX_ID
    if not _signature_ok(tx):
        return BAD_SIGNATURE
    return None


def verify_transaction(tx: Transaction) -> bool:
    return transaction_fault(tx) is None


def mine_block(
    parent: BlockHeader,
    txs: Sequence[Transaction],
    difficulty_bits: int,
    timestamp_ms: int,
    nonce_start: int = 0,
) -> Block:
    """Find the smallest nonce >= nonce_start whose header digest meets the
    difficulty, and return the sealed block.

    Deterministic: the same inputs always yield the same block.
    """
    if not txs:
        raise ValueError("refusing to mine an empty block")
    txs = tuple(txs)
    for tx in txs:
        if not verify_transaction(tx):
            raise RejectBadTx(f"invalid transaction {tx.tx_id.hex()}")
    header = BlockHeader(
        index=parent.index + 1,
        prev_hash=header_digest(parent),
        tx_root=hash_bytes(encoding.encode_tx_list(txs)),
        timestamp_ms=timestamp_ms,
        difficulty_bits=difficulty_bits,
        nonce=nonce_start,
    )
    prefix = encoding.encode_header_prefix(header)
    pack_nonce = struct.Struct(">Q").pack
    sha = hashlib.sha256
    nonce = nonce_start
    while nonce <= MAX_U64:
        if meets_difficulty(sha(prefix + pack_nonce(nonce)).digest(), difficulty_bits):
            return Block(header=BlockHeader(
                index=header.index,
                prev_hash=header.prev_hash,
                tx_root=header.tx_root,
                timestamp_ms=header.timestamp_ms,
                difficulty_bits=header.difficulty_bits,
                nonce=nonce,
            ), transactions=txs)
        nonce += 1
    raise NonceExhausted("no nonce in the 64-bit range met the difficulty")


def mining_attempts(block: Block, nonce_start: int = 0) -> int:
    """Nonce attempts a minimal-nonce scan made to seal this block."""
    return block.header.nonce - nonce_start + 1


@dataclass(frozen=True)
class BlockFailure:
    block_index: int
    reason: str


@dataclass(frozen=True)
class VerificationReport:
    ok: bool
    failures: tuple[BlockFailure, ...]

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "failures": [
                {"block_index": f.block_index, "reason": f.reason} for f in self.failures
            ],
        }


def verify_chain(chain: Chain, expected_difficulty_bits: int | None = None) -> VerificationReport:
    """Check every block: genesis constants, index monotonicity, linkage,
    tx root, proof of work and every transaction signature.

    All failures are collected; verification never stops at the first.
    Proof of work is judged at each header's recorded difficulty; pass
    `expected_difficulty_bits` to additionally pin non-genesis headers to
    the deployment difficulty (otherwise a tampered tip could quietly
    lower its own target).
    """
    failures: list[BlockFailure] = []

    def fail(index: int, reason: str) -> None:
        entry = BlockFailure(index, reason)
        if entry not in failures:
            failures.append(entry)

    blocks = chain.blocks
    if not blocks:
        return VerificationReport(ok=False, failures=(BlockFailure(0, BAD_GENESIS),))

    if blocks[0].header != GENESIS_HEADER or blocks[0].transactions:
        fail(0, BAD_GENESIS)

    for i, block in enumerate(blocks):
        header = block.header
        if header.tx_root != hash_bytes(encoding.encode_tx_list(block.transactions)):
            fail(i, BAD_TX_ROOT)
        if i > 0:
            prev = blocks[i - 1].header
            if header.index != prev.index + 1:
                fail(i, BAD_INDEX)
            if header.prev_hash != header_digest(prev):
                fail(i, BAD_LINK)
            if expected_difficulty_bits is not None and header.difficulty_bits != expected_difficulty_bits:
                fail(i, BAD_POW)
            elif not meets_difficulty(header_digest(header), header.difficulty_bits):
                fail(i, BAD_POW)
        for tx in block.transactions:
            if not verify_transaction(tx):
                fail(i, BAD_SIGNATURE)

    return VerificationReport(ok=not failures, failures=tuple(failures))


def append_block(
    chain: Chain,
    block: Block,
    admit: Callable[[Transaction], str | None] | None = None,
) -> Chain:
    """Validate a block against the tip and return the extended chain.

    Structural checks only (link, index, PoW, tx root, signatures, no empty
    block); state-level admission rules are supplied by the caller through
    `admit`, which returns a reject reason or None per transaction.
    """
    tip = chain.tip()
    header = block.header
    if header.prev_hash != header_digest(tip.header):
        if any(header_digest(b.header) == header.prev_hash for b in chain.blocks[:-1]):
            raise RejectStaleParent(
                f"block {header.index} extends a non-tip ancestor"
            )
        raise RejectBadLink(f"block {header.index} does not link to the tip")
    if header.index != tip.header.index + 1:
        raise RejectBadLink(
            f"block index {header.index} does not follow tip index {tip.header.index}"
        )
    if not block.transactions:
        raise RejectBadTx("non-genesis block with empty transaction list")
    if header.tx_root != hash_bytes(encoding.encode_tx_list(block.transactions)):
        raise RejectBadTx("tx_root does not match the transaction list")
    if not meets_difficulty(header_digest(header), header.difficulty_bits):
        raise RejectBadPoW(f"block {header.index} fails its recorded difficulty")
    for tx in block.transactions:
        fault = transaction_fault(tx)
        if fault is not None:
            raise RejectBadTx(f"{fault}: {tx.tx_id.hex()}")
    if admit is not None:
        for tx in block.transactions:
            reason = admit(tx)
            if reason is not None:
                raise RejectBadTx(f"{reason}: {tx.tx_id.hex()}")
    return Chain(blocks=chain.blocks + (block,))


def fork_choice(candidates: Iterable[Chain]) -> Chain:
    """Pick the longest chain; break ties by the lexicographically smallest
    tip digest. Total and deterministic over any candidate ordering."""
    ranked = list(candidates)
    if not ranked:
        raise NoCandidates("fork choice over an empty candidate list")
    genesis_digests = {header_digest(c.blocks[0].header) for c in ranked}
    if len(genesis_digests) != 1:
        raise MixedGenesis("candidates do not share a genesis block")
    return min(ranked, key=lambda c: (-len(c.blocks), header_digest(c.tip().header)))
