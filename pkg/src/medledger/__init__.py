"""Blockchain-anchored electronic health record toolkit.

A proof-of-work chain of signed transactions anchors encrypted patient
records held in a content-addressed vault; grants and revocations on the
same chain drive access decisions. Ships with a deterministic multi-node
simulator, an HTTP service, and an operator CLI.
"""

from .chain import (
    Chain,
    VerificationReport,
    fork_choice,
    header_digest,
    mine_block,
    new_chain,
    verify_chain,
)
from .deployment import Deployment
from .keys import KeyPair, identity_id
from .ledger import Ledger
from .models import Block, BlockHeader, PatientRecord, SealedRecord, Transaction
from .policy import ChainState, evaluate_access, materialize
from .vault import BlobStore, Keystore, open_record, seal_record

__version__ = "0.1.0"

__all__ = [
    "Block",
    "BlockHeader",
    "BlobStore",
    "Chain",
    "ChainState",
    "Deployment",
    "KeyPair",
    "Keystore",
    "Ledger",
    "PatientRecord",
    "SealedRecord",
    "Transaction",
    "VerificationReport",
    "evaluate_access",
    "fork_choice",
    "header_digest",
    "identity_id",
    "materialize",
    "mine_block",
    "new_chain",
    "open_record",
    "seal_record",
    "verify_chain",
    "__version__",
]
