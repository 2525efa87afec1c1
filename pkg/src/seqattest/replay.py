"""Trace replay: re-check protocol invariants from the event log alone.

The checkers deliberately share no code with the state machines they audit;
they reconstruct registry and chain state from events and flag the first
violating event per invariant:

* gating_safety      — every published batch and accepted state root is
                       covered by an attestation record live at that block
* replay_safety      — attested nonces are unique and strictly increasing
                       per sequencer
* gas_conservation   — per-event gas sums to the ledger's reported total
* bond_conservation  — each accepted renewal's bond is slashed or refunded
                       exactly once, and supply drops only by burned bonds
* chain_integrity    — L2 heights are gapless and every block hash and
                       state root recomputes from the logged fields
* fifo_honesty       — without censorship, inclusion order equals mempool
                       arrival order
* trace_integrity    — each event's payload hash matches its payload
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence

from .trace import MalformedTrace, payload_digest, validate_event

__all__ = ["InvariantVerdict", "replay", "all_pass", "INVARIANT_NAMES"]

INVARIANT_NAMES = (
    "gating_safety",
    "replay_safety",
    "gas_conservation",
    "bond_conservation",
    "chain_integrity",
    "fifo_honesty",
    "trace_integrity",
)


@dataclass(frozen=True)
class InvariantVerdict:
    name: str
    passed: bool
    first_violation: Optional[int] = None
    detail: Optional[str] = None


def _sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def _recompute_block_hash(payload: Mapping) -> str:
    parent = bytes.fromhex(payload["parent_hash"])
    tx_ids = b"".join(bytes.fromhex(t) for t in payload["tx_ids"])
    state_root = bytes.fromhex(payload["state_root"])
    ts = int(payload["timestamp"]).to_bytes(8, "little")
    return _sha256(parent + tx_ids + state_root + ts).hex()


def replay(trace: Sequence[Mapping]) -> List[InvariantVerdict]:
    """Re-check every invariant against a complete trace.

    Raises MalformedTrace for structurally broken input; verdicts report
    semantic violations.
    """
    if not trace:
        raise MalformedTrace("empty trace")
    for i, event in enumerate(trace):
        validate_event(event, i)
    if trace[0]["event_type"] != "ScenarioStart":
        raise MalformedTrace("trace does not begin with ScenarioStart")
    if trace[-1]["event_type"] != "ScenarioEnd":
        raise MalformedTrace("trace does not end with ScenarioEnd")
    start = trace[0]["payload"]
    end = trace[-1]["payload"]
    censorship_active = bool(start.get("censorship_active", False))

    fail: Dict[str, InvariantVerdict] = {}

    def flag(name: str, index: int, detail: str) -> None:
        if name not in fail:
            fail[name] = InvariantVerdict(name, False, index, detail)

    expiration: Dict[str, int] = {}
    last_nonce: Dict[str, int] = {}
    gas_sum = 0
    open_bonds: Dict[int, int] = {}  # request_id -> bond
    burned = 0
    heights: Dict[str, int] = {}
    roots: Dict[str, str] = {}
    arrival_order: List[str] = []
    inclusion_order: List[str] = []
    censored: set = set()

    for i, event in enumerate(trace):
        etype = event["event_type"]
        payload = event["payload"]
        gas_sum += event["gas"]

        if payload_digest(payload) != event["payload_hash"]:
            flag("trace_integrity", i, f"{etype}: payload hash mismatch")

        if etype == "QuoteAttested":
            actor = event["actor"]
            nonce = int(payload["nonce"])
            if actor in last_nonce and nonce <= last_nonce[actor]:
                flag(
                    "replay_safety",
                    i,
                    f"nonce {nonce} for {actor} does not advance past {last_nonce[actor]}",
                )
            last_nonce[actor] = max(nonce, last_nonce.get(actor, nonce))
            expiration[actor] = int(payload["expiration_block"])
        elif etype in ("BatchPublished", "StateRootProposed"):
            actor = event["actor"]
            block = int(event["block"])
            if actor not in expiration:
                flag("gating_safety", i, f"{etype} by {actor} with no attestation on record")
            elif expiration[actor] < block:
                flag(
                    "gating_safety",
                    i,
                    f"{etype} by {actor} at block {block} after expiration {expiration[actor]}",
                )
        elif etype == "RenewalAccepted":
            open_bonds[int(payload["request_id"])] = int(payload["bond"])
        elif etype in ("BondSlashed", "BondRefunded"):
            request_id = int(payload["request_id"])
            if request_id not in open_bonds:
                flag("bond_conservation", i, f"{etype} without a matching accepted request")
            else:
                bond = open_bonds.pop(request_id)
                if etype == "BondSlashed":
                    burned += bond
        elif etype == "L2BlockProduced":
            actor = event["actor"]
            height = int(payload["height"])
            expected = heights.get(actor, 0) + 1
            if height != expected:
                flag("chain_integrity", i, f"height {height}, expected {expected}")
            heights[actor] = height
            if _recompute_block_hash(payload) != payload["block_hash"]:
                flag("chain_integrity", i, f"block hash mismatch at height {height}")
            prev_root = roots.get(actor)
            if prev_root is not None:
                root = bytes.fromhex(prev_root)
                for tx in payload["tx_ids"]:
                    root = _sha256(root + bytes.fromhex(tx))
                if root.hex() != payload["state_root"]:
                    flag("chain_integrity", i, f"state root mismatch at height {height}")
            roots[actor] = payload["state_root"]
            inclusion_order.extend(payload["tx_ids"])
        elif etype == "TxArrived":
            arrival_order.append(payload["tx_id"])
        elif etype == "TxCensored":
            censored.add(payload["tx_id"])

    if gas_sum != int(end["gas_spent_total"]):
        flag(
            "gas_conservation",
            len(trace) - 1,
            f"event gas sums to {gas_sum}, ledger reports {end['gas_spent_total']}",
        )
    if open_bonds:
        flag(
            "bond_conservation",
            len(trace) - 1,
            f"{len(open_bonds)} accepted bonds never slashed or refunded",
        )
    if burned != int(end["burned_total"]):
        flag(
            "bond_conservation",
            len(trace) - 1,
            f"slashed bonds sum to {burned}, ledger burned {end['burned_total']}",
        )
    if int(end["total_supply"]) != int(start["initial_supply"]) - burned:
        flag(
            "bond_conservation",
            len(trace) - 1,
            "total supply does not equal initial supply minus burns",
        )

    if not censorship_active:
        included_set = set(inclusion_order)
        expected_order = [tx for tx in arrival_order if tx in included_set]
        if inclusion_order != expected_order:
            first_bad = next(
                (k for k, (a, b) in enumerate(zip(inclusion_order, expected_order)) if a != b),
                0,
            )
            flag(
                "fifo_honesty",
                len(trace) - 1,
                f"inclusion order diverges from arrival order at position {first_bad}",
            )

    return [fail.get(name, InvariantVerdict(name, True)) for name in INVARIANT_NAMES]


def all_pass(verdicts: Sequence[InvariantVerdict]) -> bool:
    return all(v.passed for v in verdicts)
