"""Single-writer ledger: pending pool, mining commits, append-only log.

All mutations are serialized through one lock; committed chain and state
values are immutable snapshots, so readers never need it. The persistence
file is an append-only log of canonical block bytes, each record prefixed
by a u32 length, with magic bytes `MLG1` at the start; re-reading it
reproduces bit-identical blocks and digests.
"""

from __future__ import annotations

import struct
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Callable

from . import chain as chain_ops
from . import encoding, policy
from .chain import Chain, RejectBadTx, VerificationReport
from .models import Block, Transaction

LOG_MAGIC = b"MLG1"


class LedgerError(Exception):
    pass


class NothingToMine(LedgerError):
    pass


class CorruptLog(LedgerError):
    pass


def now_ms() -> int:
    return int(time.time() * 1000)


def write_chain_log(path: str | Path, chain: Chain) -> None:
    """Write a whole chain as a fresh log file."""
    with open(path, "wb") as fh:
        fh.write(LOG_MAGIC)
        for block in chain.blocks:
            _write_record(fh, block)


def _write_record(fh: BinaryIO, block: Block) -> None:
    data = encoding.encode_block(block)
    fh.write(struct.pack(">I", len(data)))
    fh.write(data)
    fh.flush()


def scan_chain_log(path: str | Path) -> tuple[tuple[Block, ...], str | None]:
    """Walk the log frames, returning the decoded prefix and the reason the
    scan stopped early (None for a clean read). The index of the first bad
    record equals len(decoded prefix)."""
    raw = Path(path).read_bytes()
    if raw[: len(LOG_MAGIC)] != LOG_MAGIC:
        return (), "bad magic bytes"
    blocks: list[Block] = []
    pos = len(LOG_MAGIC)
    while pos < len(raw):
        if pos + 4 > len(raw):
            return tuple(blocks), f"truncated record length at offset {pos}"
        (length,) = struct.unpack(">I", raw[pos : pos + 4])
        pos += 4
        if pos + length > len(raw):
            return tuple(blocks), f"truncated record at offset {pos}"
        try:
            blocks.append(encoding.decode_block(raw[pos : pos + length]))
        except encoding.ParseError as exc:
            return tuple(blocks), f"undecodable block record: {exc}"
        pos += length
    if not blocks:
        return (), "no genesis record"
    return tuple(blocks), None


def read_chain_log(path: str | Path) -> Chain:
    """Decode a persisted chain. Structural decode only; run `verify_chain`
    for integrity judgement."""
    blocks, problem = scan_chain_log(path)
    if problem is not None:
        raise CorruptLog(f"{path}: {problem}")
    return Chain(blocks=blocks)


@dataclass(frozen=True)
class MiningResult:
    block: Block
    attempts: int


class Ledger:
    """Chain plus materialized state plus pending transaction pool.

    `clock` supplies epoch milliseconds and exists so tests can steer
    grant expiry deterministically.
    """

    def __init__(
        self,
        difficulty_bits: int = 12,
        log_path: str | Path | None = None,
        clock: Callable[[], int] = now_ms,
        _chain: Chain | None = None,
    ):
        self.difficulty_bits = difficulty_bits
        self.clock = clock
        self._lock = threading.Lock()
        self._chain = _chain if _chain is not None else chain_ops.new_chain()
        self._state = policy.materialize(self._chain)
        self._pending: dict[bytes, Transaction] = {}
        self._pending_state = self._state.clone()
        self._log_path = Path(log_path) if log_path is not None else None
        self._log_fh: BinaryIO | None = None
        if self._log_path is not None:
            if not self._log_path.exists():
                write_chain_log(self._log_path, self._chain)
            self._log_fh = open(self._log_path, "ab")

    @classmethod
    def open(
        cls,
        log_path: str | Path,
        difficulty_bits: int = 12,
        clock: Callable[[], int] = now_ms,
    ) -> "Ledger":
        """Replay a persisted log. The result must verify; a log that fails
        verification raises CorruptLog."""
        chain = read_chain_log(log_path)
        report = chain_ops.verify_chain(chain)
        if not report.ok:
            first = report.failures[0]
            raise CorruptLog(
                f"{log_path}: verification failed at block {first.block_index}: {first.reason}"
            )
        return cls(difficulty_bits=difficulty_bits, log_path=log_path, clock=clock, _chain=chain)

    # -- snapshots ---------------------------------------------------------

    @property
    def chain(self) -> Chain:
        return self._chain

    @property
    def state(self) -> policy.ChainState:
        """Committed state only; pending transactions are not reflected."""
        return self._state.clone()

    @property
    def state_with_pending(self) -> policy.ChainState:
        return self._pending_state.clone()

    @property
    def pending(self) -> tuple[Transaction, ...]:
        return tuple(self._pending.values())

    def height(self) -> int:
        return self._chain.tip().header.index

    # -- mutations ---------------------------------------------------------

    def submit(self, tx: Transaction) -> bool:
        """Admit a transaction to the pending pool.

        Idempotent on tx_id (a duplicate returns False). Raises RejectBadTx
        when the transaction is unsigned, miscommitted, or inadmissible
        against the state including earlier pending transactions.
        """
        with self._lock:
            fault = chain_ops.transaction_fault(tx)
            if fault is not None:
                raise RejectBadTx(fault)
            if tx.tx_id in self._pending:
                return False
            reason = policy.admit_transaction(self._pending_state, tx, self.clock())
            if reason is not None:
                raise RejectBadTx(reason)
            policy.apply_transaction(self._pending_state, tx, self.height() + 1)
            self._pending[tx.tx_id] = tx
            return True

    def mine(self, timestamp_ms: int | None = None) -> MiningResult:
        """Seal the pending pool into the next block and commit it."""
        with self._lock:
            if not self._pending:
                raise NothingToMine("pending pool is empty")
            txs = tuple(self._pending.values())
            ts = timestamp_ms if timestamp_ms is not None else self.clock()
            block = chain_ops.mine_block(
                self._chain.tip().header, txs, self.difficulty_bits, ts
            )
            self._commit(block, ts)
            self._pending.clear()
            self._pending_state = self._state.clone()
            return MiningResult(block=block, attempts=chain_ops.mining_attempts(block))

    def append(self, block: Block) -> None:
        """Append an externally produced block after full validation."""
        with self._lock:
            self._commit(block, block.header.timestamp_ms)
            for tx in block.transactions:
                self._pending.pop(tx.tx_id, None)
            self._pending_state = self._state.clone()
            for tx in self._pending.values():
                policy.apply_transaction(self._pending_state, tx, self.height() + 1)

    def _commit(self, block: Block, now: int) -> None:
        scratch = self._state.clone()

        def admit(tx: Transaction) -> str | None:
            reason = policy.admit_transaction(scratch, tx, now)
            if reason is None:
                policy.apply_transaction(scratch, tx, block.header.index)
            return reason

        new_chain = chain_ops.append_block(self._chain, block, admit=admit)
        if self._log_fh is not None:
            _write_record(self._log_fh, block)
        self._chain = new_chain
        self._state = scratch

    # -- inspection --------------------------------------------------------

    def verify(self, pin_difficulty: bool = False) -> VerificationReport:
        expected = self.difficulty_bits if pin_difficulty else None
        return chain_ops.verify_chain(self._chain, expected_difficulty_bits=expected)

    def close(self) -> None:
        if self._log_fh is not None:
            self._log_fh.close()
            self._log_fh = None

    def __enter__(self) -> "Ledger":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
