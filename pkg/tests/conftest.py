"""Shared fixtures: deterministic keys, steerable clocks, deployment
factories, and a builder for busy mined chains."""

from __future__ import annotations

import hashlib

import pytest

from medledger import chain as chain_ops
from medledger.deployment import Deployment
from medledger.keys import KeyPair, identity_id
from medledger.models import (
    AccessGrant,
    AccessRevoke,
    Appointment,
    Chain,
    IdentityReg,
    RecordAnchor,
)


def derived_keypair(label: str) -> KeyPair:
    return KeyPair.from_seed(hashlib.sha256(f"test-seed:{label}".encode()).digest())


class FakeClock:
    def __init__(self, start_ms: int = 1_700_000_000_000):
        self.now = start_ms

    def __call__(self) -> int:
        return self.now

    def advance(self, delta_ms: int) -> None:
        self.now += delta_ms


@pytest.fixture
def fake_clock() -> FakeClock:
    return FakeClock()


@pytest.fixture
def make_deployment(tmp_path):
    created: list[Deployment] = []

    def factory(
        difficulty_bits: int = 8,
        auto_mine: bool = True,
        clock=None,
        name: str | None = None,
    ) -> Deployment:
        kwargs = {"clock": clock} if clock is not None else {}
        deployment = Deployment.init_dir(
            tmp_path / (name or f"dep{len(created)}"),
            difficulty_bits=difficulty_bits,
            auto_mine=auto_mine,
            **kwargs,
        )
        created.append(deployment)
        return deployment

    yield factory
    for deployment in created:
        deployment.close()


def build_busy_chain(
    n_blocks: int, txs_per_block: int, difficulty_bits: int, label: str = "busy"
) -> Chain:
    """Mine a deterministic chain mixing every transaction kind.

    Structurally and cryptographically valid; no policy admission is
    applied, which chain-level checks do not require.
    """
    chain = chain_ops.new_chain()
    counter = 0
    for block_i in range(n_blocks):
        txs = []
        for tx_j in range(txs_per_block):
            author = derived_keypair(f"{label}:author:{counter}")
            author_id = identity_id(author.public_key)
            other = identity_id(derived_keypair(f"{label}:other:{counter}").public_key)
            kind = counter % 5
            if kind == 0:
                body = IdentityReg(author.public_key, "patient", f"user-{counter}")
            elif kind == 1:
                body = RecordAnchor(
                    patient_id=counter + 1,
                    content_address=hashlib.sha256(f"blob:{counter}".encode()).digest(),
                    author_id=author_id,
                )
            elif kind == 2:
                expiry = None if counter % 2 else 1_800_000_000_000 + counter
                body = AccessGrant(counter + 1, other, "read_write", expiry)
            elif kind == 3:
                body = AccessRevoke(counter + 1, other)
            else:
                body = Appointment(counter + 1, other, 1_750_000_000_000 + counter, f"slot {counter}")
            txs.append(chain_ops.make_transaction(body, author))
            counter += 1
        block = chain_ops.mine_block(
            chain.tip().header, tuple(txs), difficulty_bits, 1_700_000_000_000 + block_i
        )
        chain = chain_ops.append_block(chain, block)
    return chain
