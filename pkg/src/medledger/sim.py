"""Deterministic multi-node validation simulator.

N nodes exchange full-chain announcements over a simulated discrete-time
network with per-pair latency and scheduled partitions. Mining is scripted
(a bounded number of nonce trials per tick), so fork creation and
longest-chain convergence replay identically for the same config, script
and seed: the event log is byte-identical across runs.
"""

from __future__ import annotations

import csv
import hashlib
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

from . import chain as chain_ops
from .chain import Chain, fork_choice, header_digest
from .encoding import encode_header_prefix, encode_tx_list
from .keys import KeyPair
from .models import Block, BlockHeader, Transaction
from .policy import make_registration

EVENT_TX_SUBMITTED = "TxSubmitted"
EVENT_MINED = "MinedBlock"
EVENT_RECEIVED = "ReceivedBlock"
EVENT_REJECTED = "RejectedBlock"
EVENT_REORGED = "Reorged"


class SimError(Exception):
    pass


class BadConfig(SimError):
    pass


class UnknownNode(SimError):
    pass


class InvalidTx(SimError):
    pass


class NotQuiescent(SimError):
    pass


class ScenarioParseError(SimError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class Partition:
    from_tick: int
    to_tick: int
    pairs: frozenset[tuple[int, int]]


@dataclass
class SimConfig:
    n_nodes: int
    difficulty_bits: int = 8
    default_latency: int = 1
    latency: dict[tuple[int, int], int] = field(default_factory=dict)
    partitions: list[Partition] = field(default_factory=list)
    rng_seed: int = 0
    trials_per_tick: int = 4096

    def validate(self) -> None:
        if self.n_nodes < 1:
            raise BadConfig(f"n_nodes must be >= 1, got {self.n_nodes}")
        if not 0 <= self.difficulty_bits <= 32:
            raise BadConfig(f"difficulty_bits out of range: {self.difficulty_bits}")
        if self.default_latency < 1:
            raise BadConfig("latency must be >= 1 tick")
        for pair, lat in self.latency.items():
            if lat < 1:
                raise BadConfig(f"latency for {pair} must be >= 1 tick")
        if self.trials_per_tick < 1:
            raise BadConfig("trials_per_tick must be >= 1")
        for part in self.partitions:
            if part.from_tick < 0 or part.to_tick <= part.from_tick:
                raise BadConfig(
                    f"partition interval [{part.from_tick}, {part.to_tick}) is not well-formed"
                )
            for i, j in part.pairs:
                if not (0 <= i < self.n_nodes and 0 <= j < self.n_nodes) or i == j:
                    raise BadConfig(f"partition pair ({i}, {j}) out of range")

    def latency_for(self, src: int, dst: int) -> int:
        return self.latency.get((src, dst), self.latency.get((dst, src), self.default_latency))


@dataclass(frozen=True)
class SimEvent:
    tick: int
    node_id: int
    kind: str
    detail: str

    def render(self) -> str:
        return f"tick={self.tick} node={self.node_id} event={self.kind} {self.detail}".rstrip()


@dataclass
class _MiningJob:
    txs: tuple[Transaction, ...]
    parent_digest: bytes | None = None
    prefix: bytes = b""
    header: BlockHeader | None = None
    nonce: int = 0


@dataclass
class _Message:
    deliver_tick: int
    seq: int
    src: int
    dst: int
    chain: Chain
    txs: tuple[Transaction, ...]


class SimNode:
    def __init__(self, node_id: int):
        self.node_id = node_id
        self.chain = chain_ops.new_chain()
        self.pool: dict[bytes, Transaction] = {}
        self.mine_queue: deque[int] = deque()
        self.active_job: _MiningJob | None = None
        self.last_announced = chain_ops.GENESIS_DIGEST
        self.synth_counter = 0

    def tip_digest(self) -> bytes:
        return header_digest(self.chain.tip().header)


class SimWorld:
    def __init__(self, config: SimConfig):
        config.validate()
        self.config = config
        self.tick = 0
        self.nodes = [SimNode(i) for i in range(config.n_nodes)]
        self.events: list[SimEvent] = []
        self.inflight: list[_Message] = []
        self._seq = 0
        self._prev_cut: frozenset[tuple[int, int]] = frozenset()

    # -- helpers -----------------------------------------------------------

    def _log(self, tick: int, node_id: int, kind: str, detail: str) -> None:
        self.events.append(SimEvent(tick, node_id, kind, detail))

    def _active_cut(self, tick: int) -> frozenset[tuple[int, int]]:
        pairs: set[tuple[int, int]] = set()
        for part in self.config.partitions:
            if part.from_tick <= tick < part.to_tick:
                pairs.update(part.pairs)
        return frozenset(pairs)

    def _derive_keypair(self, label: str) -> KeyPair:
        seed = hashlib.sha256(f"sim:{self.config.rng_seed}:{label}".encode()).digest()
        return KeyPair.from_seed(seed)

    def _synthesize_reg(self, node: SimNode) -> Transaction:
        node.synth_counter += 1
        label = f"auto:{node.node_id}:{node.synth_counter}"
        name = f"node{node.node_id}-auto{node.synth_counter}"
        return make_registration(self._derive_keypair(label), "patient", name)

    def _send(self, src: int, dst: int, tick: int, cut: frozenset[tuple[int, int]]) -> None:
        pair = (min(src, dst), max(src, dst))
        if pair in cut:
            return
        node = self.nodes[src]
        self._seq += 1
        self.inflight.append(
            _Message(
                deliver_tick=tick + self.config.latency_for(src, dst),
                seq=self._seq,
                src=src,
                dst=dst,
                chain=node.chain,
                txs=tuple(node.pool.values()),
            )
        )

    def _announce(self, node: SimNode, tick: int, cut: frozenset[tuple[int, int]]) -> None:
        tip = node.tip_digest()
        if tip == node.last_announced:
            return
        node.last_announced = tip
        for peer in self.nodes:
            if peer.node_id != node.node_id:
                self._send(node.node_id, peer.node_id, tick, cut)

    def _chain_tx_ids(self, chain: Chain) -> set[bytes]:
        return {tx.tx_id for block in chain.blocks for tx in block.transactions}

    def _deliver(self, msg: _Message, tick: int, cut: frozenset[tuple[int, int]]) -> None:
        pair = (min(msg.src, msg.dst), max(msg.src, msg.dst))
        if pair in cut:
            return
        node = self.nodes[msg.dst]
        for tx in msg.txs:
            if tx.tx_id not in node.pool and chain_ops.verify_transaction(tx):
                node.pool[tx.tx_id] = tx
        received_tip = header_digest(msg.chain.tip().header)
        if received_tip == node.tip_digest():
            return
        report = chain_ops.verify_chain(msg.chain)
        if not report.ok:
            first = report.failures[0]
            self._log(
                tick, node.node_id, EVENT_REJECTED,
                f"from={msg.src} reason={first.reason} block_index={first.block_index}",
            )
            return
        self._log(
            tick, node.node_id, EVENT_RECEIVED,
            f"from={msg.src} index={msg.chain.tip().header.index} digest={received_tip.hex()}",
        )
        winner = fork_choice([node.chain, msg.chain])
        if header_digest(winner.tip().header) == node.tip_digest():
            return
        old = node.chain
        is_extension = winner.blocks[: len(old.blocks)] == old.blocks
        if not is_extension:
            self._log(
                tick, node.node_id, EVENT_REORGED,
                f"from_len={len(old)} to_len={len(winner)}",
            )
        node.chain = winner
        on_chain = self._chain_tx_ids(winner)
        if not is_extension:
            # Transactions stranded on the abandoned branch return to the
            # pool so a later mine can pick them up.
            for block in old.blocks:
                for tx in block.transactions:
                    if tx.tx_id not in on_chain and tx.tx_id not in node.pool:
                        node.pool[tx.tx_id] = tx
        for tx_id in [t for t in node.pool if t in on_chain]:
            del node.pool[tx_id]
        self._announce(node, tick, cut)

    def _mine_tick(self, node: SimNode, tick: int, cut: frozenset[tuple[int, int]]) -> None:
        if node.active_job is None:
            if not node.mine_queue:
                return
            node.mine_queue.popleft()
            txs = tuple(node.pool.values())
            if not txs:
                tx = self._synthesize_reg(node)
                node.pool[tx.tx_id] = tx
                txs = (tx,)
            node.active_job = _MiningJob(txs=txs)
        job = node.active_job
        tip = node.chain.tip().header
        tip_digest = header_digest(tip)
        if job.parent_digest != tip_digest:
            job.parent_digest = tip_digest
            job.header = BlockHeader(
                index=tip.index + 1,
                prev_hash=tip_digest,
                tx_root=chain_ops.hash_bytes(encode_tx_list(job.txs)),
                timestamp_ms=tick,
                difficulty_bits=self.config.difficulty_bits,
                nonce=0,
            )
            job.prefix = encode_header_prefix(job.header)
            job.nonce = 0
        sha = hashlib.sha256
        for _ in range(self.config.trials_per_tick):
            digest = sha(job.prefix + job.nonce.to_bytes(8, "big")).digest()
            if chain_ops.meets_difficulty(digest, self.config.difficulty_bits):
                header = job.header
                block = Block(
                    header=BlockHeader(
                        index=header.index,
                        prev_hash=header.prev_hash,
                        tx_root=header.tx_root,
                        timestamp_ms=header.timestamp_ms,
                        difficulty_bits=header.difficulty_bits,
                        nonce=job.nonce,
                    ),
                    transactions=job.txs,
                )
                node.chain = chain_ops.append_block(node.chain, block)
                self._log(
                    tick, node.node_id, EVENT_MINED,
                    f"index={block.header.index} digest={header_digest(block.header).hex()} "
                    f"attempts={job.nonce + 1}",
                )
                for tx in job.txs:
                    node.pool.pop(tx.tx_id, None)
                node.active_job = None
                self._announce(node, tick, cut)
                return
            job.nonce += 1

    # -- stepping ----------------------------------------------------------

    def step(self) -> list[SimEvent]:
        """Advance one tick; returns the events it produced."""
        tick = self.tick
        start = len(self.events)
        cut = self._active_cut(tick)
        for i, j in sorted(self._prev_cut - cut):
            self._send(i, j, tick, cut)
            self._send(j, i, tick, cut)
        self._prev_cut = cut
        due = sorted((m for m in self.inflight if m.deliver_tick <= tick), key=lambda m: m.seq)
        self.inflight = [m for m in self.inflight if m.deliver_tick > tick]
        for msg in due:
            self._deliver(msg, tick, cut)
        for node in self.nodes:
            self._mine_tick(node, tick, cut)
        self.tick = tick + 1
        return self.events[start:]

    def work_pending(self) -> bool:
        if self.inflight:
            return True
        if any(n.active_job is not None or n.mine_queue for n in self.nodes):
            return True
        # A heal boundary at tick T is witnessed while processing tick T,
        # so the world is not quiescent until that tick has run.
        return any(p.to_tick >= self.tick for p in self.config.partitions)

    def converged(self) -> bool:
        tips = {(len(n.chain), n.tip_digest()) for n in self.nodes}
        return len(tips) == 1

    def inject_invalid_block(self, node_id: int) -> None:
        """Adversarial helper: flood a chain whose tip signature is
        tampered; honest peers must reject it."""
        node = self._node(node_id)
        tx = self._synthesize_reg(node)
        block = chain_ops.mine_block(
            node.chain.tip().header, (tx,), 0, self.tick
        )
        bad_sig = bytes([block.transactions[0].signature[0] ^ 0x01]) + block.transactions[0].signature[1:]
        bad_tx = Transaction(tx.body, tx.author_pubkey, tx.tx_id, bad_sig)
        bad_block = Block(
            header=BlockHeader(
                index=block.header.index,
                prev_hash=block.header.prev_hash,
                tx_root=chain_ops.hash_bytes(encode_tx_list((bad_tx,))),
                timestamp_ms=block.header.timestamp_ms,
                difficulty_bits=block.header.difficulty_bits,
                nonce=block.header.nonce,
            ),
            transactions=(bad_tx,),
        )
        bad_chain = Chain(blocks=node.chain.blocks + (bad_block,))
        cut = self._active_cut(self.tick)
        for peer in self.nodes:
            if peer.node_id == node_id:
                continue
            pair = (min(node_id, peer.node_id), max(node_id, peer.node_id))
            if pair in cut:
                continue
            self._seq += 1
            self.inflight.append(
                _Message(
                    deliver_tick=self.tick + self.config.latency_for(node_id, peer.node_id),
                    seq=self._seq,
                    src=node_id,
                    dst=peer.node_id,
                    chain=bad_chain,
                    txs=(),
                )
            )

    def _node(self, node_id: int) -> SimNode:
        if not 0 <= node_id < len(self.nodes):
            raise UnknownNode(f"no node {node_id}")
        return self.nodes[node_id]


# ---------------------------------------------------------------------------
# Module-level operations

def spawn_network(config: SimConfig) -> SimWorld:
    return SimWorld(config)


def submit_tx(world: SimWorld, node_id: int, tx: Transaction) -> bool:
    """Add a transaction to a node's pending pool. Idempotent on tx_id."""
    node = world._node(node_id)
    if not chain_ops.verify_transaction(tx):
        raise InvalidTx(f"transaction {tx.tx_id.hex()} fails verification")
    if tx.tx_id in node.pool:
        return False
    node.pool[tx.tx_id] = tx
    world._log(world.tick, node_id, EVENT_TX_SUBMITTED, f"tx_id={tx.tx_id.hex()}")
    return True


def queue_mine(world: SimWorld, node_id: int) -> None:
    """Script one block to be mined by this node (drains its pool when the
    job starts; an empty pool gets a synthesized registration)."""
    world._node(node_id).mine_queue.append(1)


def step(world: SimWorld) -> list[SimEvent]:
    return world.step()


def run_until_quiescent(world: SimWorld, max_ticks: int) -> list[SimEvent]:
    """Step until no messages are in flight and no miner is scripted, or
    raise NotQuiescent after max_ticks."""
    if max_ticks <= 0:
        raise ValueError("max_ticks must be positive")
    while True:
        world.step()
        if not world.work_pending():
            return list(world.events)
        if world.tick >= max_ticks:
            raise NotQuiescent(f"work still pending after {max_ticks} ticks")


def converged(world: SimWorld) -> bool:
    return world.converged()


# ---------------------------------------------------------------------------
# Scenario files

@dataclass(frozen=True)
class TxDirective:
    node_id: int
    name: str
    role: str


@dataclass(frozen=True)
class MineDirective:
    node_id: int


Directive = TxDirective | MineDirective


def _parse_group(text: str, line_no: int) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part != ""]
    except ValueError as exc:
        raise ScenarioParseError(line_no, f"bad node list {text!r}") from exc


def parse_scenario(text: str) -> tuple[SimConfig, list[Directive]]:
    """Parse the line-oriented scenario format.

    Directives: `nodes N`, `difficulty B`, `latency L`, `latency I J L`,
    `trials T`, `seed S`, `partition A B from T to T'` (A and B are
    comma-separated node groups), `tx N register NAME [ROLE]`,
    `node N mine`. `#` starts a comment.
    """
    config = SimConfig(n_nodes=1)
    directives: list[Directive] = []
    saw_nodes = False
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        word = parts[0]
        try:
            if word == "nodes" and len(parts) == 2:
                config.n_nodes = int(parts[1])
                saw_nodes = True
            elif word == "difficulty" and len(parts) == 2:
                config.difficulty_bits = int(parts[1])
            elif word == "latency" and len(parts) == 2:
                config.default_latency = int(parts[1])
            elif word == "latency" and len(parts) == 4:
                i, j, lat = int(parts[1]), int(parts[2]), int(parts[3])
                config.latency[(i, j)] = lat
            elif word == "trials" and len(parts) == 2:
                config.trials_per_tick = int(parts[1])
            elif word == "seed" and len(parts) == 2:
                config.rng_seed = int(parts[1])
            elif word == "partition" and len(parts) == 7 and parts[3] == "from" and parts[5] == "to":
                group_a = _parse_group(parts[1], line_no)
                group_b = _parse_group(parts[2], line_no)
                pairs = frozenset(
                    (min(a, b), max(a, b)) for a in group_a for b in group_b if a != b
                )
                if not pairs:
                    raise ScenarioParseError(line_no, "partition cuts no pairs")
                config.partitions.append(
                    Partition(from_tick=int(parts[4]), to_tick=int(parts[6]), pairs=pairs)
                )
            elif word == "tx" and len(parts) >= 4 and parts[2] == "register":
                role = parts[4] if len(parts) == 5 else "patient"
                if len(parts) > 5:
                    raise ScenarioParseError(line_no, f"bad directive: {raw.strip()!r}")
                directives.append(TxDirective(node_id=int(parts[1]), name=parts[3], role=role))
            elif word == "node" and len(parts) == 3 and parts[2] == "mine":
                directives.append(MineDirective(node_id=int(parts[1])))
            else:
                raise ScenarioParseError(line_no, f"bad directive: {raw.strip()!r}")
        except ScenarioParseError:
            raise
        except ValueError as exc:
            raise ScenarioParseError(line_no, f"bad number in {raw.strip()!r}") from exc
    if not saw_nodes:
        raise ScenarioParseError(0, "scenario never declares `nodes N`")
    return config, directives


def build_world(config: SimConfig, directives: list[Directive]) -> SimWorld:
    """Spawn the network and apply the scripted directives."""
    world = spawn_network(config)
    for index, directive in enumerate(directives):
        if isinstance(directive, TxDirective):
            keypair = world._derive_keypair(f"script:{index}")
            tx = make_registration(keypair, directive.role, directive.name)
            submit_tx(world, directive.node_id, tx)
        else:
            queue_mine(world, directive.node_id)
    return world


def run_scenario(
    text: str, seed: int | None = None, max_ticks: int = 10_000
) -> tuple[SimWorld, list[SimEvent]]:
    config, directives = parse_scenario(text)
    if seed is not None:
        config.rng_seed = seed
    world = build_world(config, directives)
    try:
        events = run_until_quiescent(world, max_ticks)
    except NotQuiescent:
        events = list(world.events)
    return world, events


def render_events(events: list[SimEvent]) -> str:
    return "".join(event.render() + "\n" for event in events)


def write_events_csv(events: list[SimEvent], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["tick", "node_id", "event", "detail"])
        for event in events:
            writer.writerow([event.tick, event.node_id, event.kind, event.detail])
