"""The L2 pipeline: sequencer block production, batcher, proposer.

All components are gated on the on-chain attestation registry. The
sequencer drains its mempool FIFO into blocks (empty blocks still advance
the height), keeps its attestation fresh via a proactive renewal loop, and
exposes adversary hooks (censorship predicate, metadata corruption) used
only by attack scenarios. The batcher and proposer never call the ledger
unless the registry shows a live record; withholding is a normal outcome,
not an error.

State roots are a running hash chain over applied transaction ids, not a
Merkle trie; the verifier only ever needs equality checks.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Deque, Dict, List, Optional, Tuple

from .crypto import sha256
from .core import SequencerMetadata
from .enclave import Enclave
from . import onchain

__all__ = [
    "DEFAULT_MAX_TXS_PER_BLOCK",
    "DEFAULT_BATCH_SIZE_BLOCKS",
    "LoopAction",
    "NotAuthorizedLocally",
    "Transaction",
    "L2Block",
    "Batch",
    "StateRootCommitment",
    "BlockProduction",
    "SequencerNode",
    "Batcher",
    "BatcherResult",
    "Proposer",
    "genesis_block",
    "compute_block_hash",
    "apply_state",
    "produce_block",
    "candidate_block",
    "collect_metadata",
    "attestation_loop_step",
    "batcher_step",
    "proposer_step",
    "apply_censorship",
]

DEFAULT_MAX_TXS_PER_BLOCK = 100
DEFAULT_BATCH_SIZE_BLOCKS = 5
DEFAULT_RENEWAL_THRESHOLD = 0.2
DEFAULT_RETRY_BACKOFF_S = 60

ZERO32 = b"\x00" * 32


class NotAuthorizedLocally(Exception):
    """Block production is paused until the registry shows a live record."""


class LoopAction(Enum):
    NONE = "None"
    SUBMIT_QUOTE = "SubmitQuote"
    BLOCKED = "Blocked"


@dataclass(frozen=True)
class Transaction:
    tx_id: bytes
    sender: str
    payload_size: int
    submitted_at_ms: int

    def __post_init__(self) -> None:
        if self.payload_size <= 0:
            raise ValueError("payload_size must be positive")


@dataclass(frozen=True)
class L2Block:
    height: int
    parent_hash: bytes
    block_hash: bytes
    state_root: bytes
    l1_origin: bytes
    timestamp: int
    tx_ids: Tuple[bytes, ...]


@dataclass(frozen=True)
class Batch:
    start_height: int
    end_height: int
    compressed_size: int
    sequencer: str


@dataclass(frozen=True)
class StateRootCommitment:
    batch_index: int
    end_height: int
    state_root: bytes


@dataclass(frozen=True)
class BlockProduction:
    block: L2Block
    included: Tuple[Transaction, ...]
    censored: Tuple[Transaction, ...]


def compute_block_hash(
    parent_hash: bytes, tx_ids: Tuple[bytes, ...], state_root: bytes, timestamp: int
) -> bytes:
    return sha256(parent_hash + b"".join(tx_ids) + state_root + timestamp.to_bytes(8, "little"))


def apply_state(parent_root: bytes, tx_ids: Tuple[bytes, ...]) -> bytes:
    root = parent_root
    for tx_id in tx_ids:
        root = sha256(root + tx_id)
    return root


def genesis_block(l1_origin: bytes, timestamp: int) -> L2Block:
    state_root = sha256(b"l2-genesis-state")
    return L2Block(
        height=0,
        parent_hash=ZERO32,
        block_hash=compute_block_hash(ZERO32, (), state_root, timestamp),
        state_root=state_root,
        l1_origin=l1_origin,
        timestamp=timestamp,
        tx_ids=(),
    )


@dataclass
class AttestationState:
    renewal_in_flight: bool = False
    next_retry_at_ms: int = 0
    renewal_threshold: float = DEFAULT_RENEWAL_THRESHOLD
    retry_backoff_s: int = DEFAULT_RETRY_BACKOFF_S


@dataclass
class SequencerNode:
    address: str
    enclave: Enclave
    head: L2Block
    mempool: Deque[Transaction] = field(default_factory=deque)
    blocks_unbatched: Deque[L2Block] = field(default_factory=deque)
    state_root_by_height: Dict[int, bytes] = field(default_factory=dict)
    attestation_state: AttestationState = field(default_factory=AttestationState)
    censorship_filter: Optional[Callable[[Transaction], bool]] = None
    metadata_tamper: Optional[Callable[[SequencerMetadata], SequencerMetadata]] = None
    max_txs_per_block: int = DEFAULT_MAX_TXS_PER_BLOCK

    def __post_init__(self) -> None:
        self.state_root_by_height[self.head.height] = self.head.state_root

    def enqueue(self, tx: Transaction) -> None:
        self.mempool.append(tx)


def produce_block(node: SequencerNode, ledger: onchain.Ledger, now_s: int) -> BlockProduction:
    """Drain up to max_txs_per_block in FIFO order into the next block.

    An empty mempool still yields a (height-advancing) empty block. Raises
    NotAuthorizedLocally without touching the mempool when the registry
    shows no live record for this sequencer.
    """
    if not onchain.is_authorized(ledger, node.address, ledger.block_number):
        raise NotAuthorizedLocally(node.address)
    included: List[Transaction] = []
    censored: List[Transaction] = []
    while node.mempool and len(included) < node.max_txs_per_block:
        tx = node.mempool.popleft()
        if node.censorship_filter is not None and node.censorship_filter(tx):
            censored.append(tx)
            continue
        included.append(tx)
    tx_ids = tuple(tx.tx_id for tx in included)
    state_root = apply_state(node.head.state_root, tx_ids)
    block = L2Block(
        height=node.head.height + 1,
        parent_hash=node.head.block_hash,
        block_hash=compute_block_hash(node.head.block_hash, tx_ids, state_root, now_s),
        state_root=state_root,
        l1_origin=ledger.latest_block_hash,
        timestamp=now_s,
        tx_ids=tx_ids,
    )
    node.head = block
    node.blocks_unbatched.append(block)
    node.state_root_by_height[block.height] = block.state_root
    return BlockProduction(block=block, included=tuple(included), censored=tuple(censored))


def candidate_block(node: SequencerNode, ledger: onchain.Ledger, now_s: int) -> L2Block:
    """Conservative preview of the next block, used as the attested proposal."""
    state_root = node.head.state_root
    return L2Block(
        height=node.head.height + 1,
        parent_hash=node.head.block_hash,
        block_hash=compute_block_hash(node.head.block_hash, (), state_root, now_s),
        state_root=state_root,
        l1_origin=ledger.latest_block_hash,
        timestamp=now_s,
        tx_ids=(),
    )


def collect_metadata(node: SequencerNode, pending: L2Block, now_s: int) -> SequencerMetadata:
    """Assemble quote metadata for the pending block, consuming a fresh nonce.

    The adversary-only metadata hook runs here, modeling a host that feeds
    the enclave corrupted inputs; the enclave will still sign consistently.
    """
    meta = SequencerMetadata(
        block_hash=pending.block_hash,
        block_height=pending.height,
        state_root=pending.state_root,
        l1_origin=pending.l1_origin,
        timestamp=now_s,
        nonce=node.enclave.allocate_nonce(),
        prover_pubkey=node.enclave.prover_pubkey,
    )
    if node.metadata_tamper is not None:
        meta = node.metadata_tamper(meta)
    return meta


def attestation_loop_step(
    node: SequencerNode, ledger: onchain.Ledger, now_ms: int
) -> LoopAction:
    """Decide whether to submit a fresh quote this step.

    Submits when there is no live record, when remaining validity drops
    below the proactive threshold, or when an on-chain renewal demand is
    flagged. At most one renewal stays in flight; while unauthorized with a
    submission pending (or backing off after a rejection) the node is
    Blocked.
    """
    state = node.attestation_state
    record = onchain.current_record(ledger, node.address)
    live = record is not None and record.expiration_block >= ledger.block_number
    if state.renewal_in_flight or now_ms < state.next_retry_at_ms:
        return LoopAction.NONE if live else LoopAction.BLOCKED
    window = ledger.suite.params.policy.validity_window if ledger.suite else 0
    demand = onchain.has_renewal_demand(ledger, node.address)
    needs_quote = not live or demand
    if live and not needs_quote:
        remaining = record.expiration_block - ledger.block_number
        needs_quote = remaining < state.renewal_threshold * window
    return LoopAction.SUBMIT_QUOTE if needs_quote else LoopAction.NONE


def compressed_batch_size(blocks: List[L2Block], payload_by_tx: Dict[bytes, int]) -> int:
    # Stylized calldata size: fixed overhead, per-block header, 10:1 payload
    # compression. Real compression pipelines are out of scope.
    payload = sum(payload_by_tx.get(tx_id, 0) for b in blocks for tx_id in b.tx_ids)
    return 64 + 20 * len(blocks) + payload // 10


@dataclass
class Batcher:
    sequencer: str
    batch_size_blocks: int = DEFAULT_BATCH_SIZE_BLOCKS
    withheld_steps: int = 0


@dataclass(frozen=True)
class BatcherResult:
    submitted: Tuple[onchain.BatchRecord, ...]
    withheld: bool


def batcher_step(
    batcher: Batcher,
    node: SequencerNode,
    ledger: onchain.Ledger,
    payload_by_tx: Dict[bytes, int],
) -> BatcherResult:
    """Publish pending blocks in contiguous batches, or withhold.

    Withholding (no live attestation) leaves the queue untouched and the
    ledger silent; the step simply retries later.
    """
    if not node.blocks_unbatched:
        return BatcherResult(submitted=(), withheld=False)
    if not onchain.is_authorized(ledger, batcher.sequencer, ledger.block_number):
        batcher.withheld_steps += 1
        return BatcherResult(submitted=(), withheld=True)
    submitted: List[onchain.BatchRecord] = []
    while node.blocks_unbatched:
        blocks = []
        while node.blocks_unbatched and len(blocks) < batcher.batch_size_blocks:
            blocks.append(node.blocks_unbatched.popleft())
        batch = Batch(
            start_height=blocks[0].height,
            end_height=blocks[-1].height,
            compressed_size=compressed_batch_size(blocks, payload_by_tx),
            sequencer=batcher.sequencer,
        )
        result = onchain.accept_batch(ledger, batcher.sequencer, batch)
        if isinstance(result, onchain.PublicationRejection):
            # Authorization lapsed mid-step: requeue and withhold.
            for block in reversed(blocks):
                node.blocks_unbatched.appendleft(block)
            batcher.withheld_steps += 1
            return BatcherResult(submitted=tuple(submitted), withheld=True)
        submitted.append(result)
    return BatcherResult(submitted=tuple(submitted), withheld=False)


@dataclass
class Proposer:
    sequencer: str
    _scan_from: int = 0  # batches are committed oldest-first, so scan forward only


def proposer_step(
    proposer: Proposer, node: SequencerNode, ledger: onchain.Ledger
) -> List[onchain.CommitmentRecord]:
    """Commit state roots for published-but-uncommitted batches, oldest first."""
    submitted: List[onchain.CommitmentRecord] = []
    index = proposer._scan_from
    while index < len(ledger.batches):
        batch = ledger.batches[index]
        if batch.committed or batch.sequencer != proposer.sequencer:
            index += 1
            continue
        if not onchain.is_authorized(ledger, proposer.sequencer, ledger.block_number):
            break
        commitment = StateRootCommitment(
            batch_index=batch.index,
            end_height=batch.end_height,
            state_root=node.state_root_by_height[batch.end_height],
        )
        result = onchain.accept_state_root(ledger, proposer.sequencer, commitment)
        if isinstance(result, onchain.PublicationRejection):
            break
        submitted.append(result)
        index += 1
    proposer._scan_from = index
    return submitted


def apply_censorship(
    node: SequencerNode, predicate: Optional[Callable[[Transaction], bool]]
) -> SequencerNode:
    """Install (or clear) the adversarial censorship predicate."""
    node.censorship_filter = predicate
    return node
