"""Seeded discrete-event simulation of the attested sequencer pipeline.

One Simulation wires together the ledger, provisioning service, enclave,
sequencer, batcher, and proposer, drives them from a single priority queue
keyed by (time in ms, sequence number), and records every ledger and
pipeline event into a trace. The scenario seed fully determines the trace:
all randomness (workload arrivals, network jitter) comes from one seeded
generator, signing is deterministic, and serialization is canonical.

Simulated time is integer milliseconds. L1 blocks advance every 12 s,
L2 production runs every 2 s by default, and wall-clock timestamps are the
ledger genesis time plus elapsed simulated seconds.

Adversaries are injected as scheduled events that flip an enclave tamper
mode, revoke collateral at the provisioning service, install a censorship
predicate or metadata corruption on the node, replay captured quote bytes,
or flood the renewal entry point.
"""

from __future__ import annotations

import heapq
import random
from dataclasses import replace
from typing import Callable, Dict, List, Optional, Tuple

from . import onchain, rollup
from .core import PolicyView, QuoteVersion, TcbStatus, serialize_quote
from .crypto import sha256
from .enclave import TamperMode, generate_quote, measure_and_boot, provision
from .metrics import MetricsReport, compute_metrics
from .pcs import PcsService, PcsUnavailable
from .scenario import AdversaryKind, ScenarioConfig
from .trace import payload_digest

__all__ = [
    "ETH",
    "SEQUENCER_ADDRESS",
    "UnknownKind",
    "Simulation",
    "run_scenario",
    "inject_adversary",
]

ETH = 10**18
SEQUENCER_ADDRESS = "sequencer-0"
DEPLOYER_ADDRESS = "deployer"
BATCHER_ACTOR = "batcher"

# The measured code image is a fixed constant so policy digests and golden
# fixtures stay stable across scenarios.
SEQUENCER_CODE_IMAGE = b"attested-sequencer-build-1"

EV_SCENARIO_START = "ScenarioStart"
EV_SCENARIO_END = "ScenarioEnd"
EV_TX_SUBMITTED = "TxSubmitted"
EV_TX_ARRIVED = "TxArrived"
EV_TX_CENSORED = "TxCensored"
EV_L2_BLOCK_PRODUCED = "L2BlockProduced"
EV_BATCH_WITHHELD = "BatchWithheld"
EV_ADVERSARY_ACTIVATED = "AdversaryActivated"
EV_REPLAY_ATTEMPTED = "ReplayAttempted"


class UnknownKind(Exception):
    pass


class Simulation:
    def __init__(self, cfg: ScenarioConfig) -> None:
        self.cfg = cfg
        self.rng = random.Random(cfg.seed)
        self.duration_ms = cfg.duration_s * 1_000
        self.now_ms = 0
        self._heap: List[Tuple[int, int, Callable[[], None]]] = []
        self._sched_seq = 0
        self._started = False
        self.trace: List[dict] = []
        self._trace_seq = 0
        self._ledger_events_seen = 0

        self.last_quote_bytes: Optional[bytes] = None
        self.payload_by_tx: Dict[bytes, int] = {}
        self.submitted_txs = 0
        self.included_txs = 0
        self.censored_txs = 0

        protocol = cfg.protocol
        genesis_accounts = {DEPLOYER_ADDRESS: 10 * ETH, SEQUENCER_ADDRESS: 10 * ETH}
        for validator in protocol.whitelist:
            genesis_accounts[validator] = 1 * ETH
        self.ledger = onchain.Ledger(genesis_accounts=genesis_accounts)

        self.enclave = measure_and_boot(SEQUENCER_CODE_IMAGE, isv_svn=protocol.min_isv_svn)
        self.pcs = PcsService(
            vendor_mrsigner=self.enclave.mrsigner, qe_min_isv_svn=protocol.min_isv_svn
        )
        provision(self.enclave, self.pcs, self._wall_s())

        policy = PolicyView(
            expected_mrenclave=self.enclave.mrenclave,
            expected_mrsigner=self.enclave.mrsigner,
            min_isv_svn=protocol.min_isv_svn,
            accepted_tcb_statuses=frozenset(
                TcbStatus(s) for s in protocol.accepted_tcb_statuses
            ),
            freshness_drift=protocol.freshness_drift_s,
            validity_window=protocol.validity_window_blocks,
        )
        onchain.deploy_attestation_suite(
            self.ledger,
            onchain.SuiteParams(
                policy=policy,
                whitelist=frozenset(protocol.whitelist),
                required_bond_wei=protocol.bond_wei,
                rate_limit_blocks=protocol.rate_limit_blocks,
                challenge_window_blocks=protocol.challenge_window_blocks,
            ),
            deployer=DEPLOYER_ADDRESS,
        )

        self.node = rollup.SequencerNode(
            address=SEQUENCER_ADDRESS,
            enclave=self.enclave,
            head=rollup.genesis_block(self.ledger.latest_block_hash, self._wall_s()),
            max_txs_per_block=cfg.rollup.max_txs_per_block,
        )
        self.node.attestation_state.renewal_threshold = protocol.renewal_threshold
        self.node.attestation_state.retry_backoff_s = protocol.retry_backoff_s
        self.batcher = rollup.Batcher(
            sequencer=SEQUENCER_ADDRESS, batch_size_blocks=cfg.rollup.batch_size_blocks
        )
        self.proposer = rollup.Proposer(sequencer=SEQUENCER_ADDRESS)

    # ------------------------------------------------------------------
    # time and trace plumbing

    def _wall_s(self) -> int:
        return self.ledger.genesis_time + self.now_ms // 1_000

    def _delay_ms(self, link: str = "default") -> int:
        network = self.cfg.network
        base = network.delay_ms
        if link == "tx" and network.tx_delay_ms is not None:
            base = network.tx_delay_ms
        elif link == "quote" and network.quote_delay_ms is not None:
            base = network.quote_delay_ms
        jitter = network.delay_jitter_ms
        extra = self.rng.randint(0, jitter) if jitter > 0 else 0
        return base + extra

    def schedule(self, at_ms: int, fn: Callable[[], None]) -> None:
        heapq.heappush(self._heap, (at_ms, self._sched_seq, fn))
        self._sched_seq += 1

    def _emit(
        self,
        event_type: str,
        actor: str,
        payload: Optional[dict] = None,
        *,
        gas: int = 0,
        reason: Optional[str] = None,
    ) -> None:
        payload = payload or {}
        self.trace.append(
            {
                "t": self.now_ms,
                "seq": self._trace_seq,
                "block": self.ledger.block_number,
                "event_type": event_type,
                "actor": actor,
                "gas": gas,
                "reason": reason,
                "payload_hash": payload_digest(payload),
                "payload": payload,
            }
        )
        self._trace_seq += 1

    def _drain_ledger_events(self) -> None:
        for event in self.ledger.event_log[self._ledger_events_seen :]:
            self.trace.append(
                {
                    "t": self.now_ms,
                    "seq": self._trace_seq,
                    "block": event.block,
                    "event_type": event.event_type,
                    "actor": event.actor,
                    "gas": event.gas,
                    "reason": event.reason,
                    "payload_hash": event.payload_hash,
                    "payload": dict(event.payload),
                }
            )
            self._trace_seq += 1
        self._ledger_events_seen = len(self.ledger.event_log)

    # ------------------------------------------------------------------
    # component steps

    def _l1_tick(self) -> None:
        self.ledger.advance_block()
        self.schedule(self.now_ms + self.ledger.block_interval_s * 1_000, self._l1_tick)

    def _renewal_cause(self) -> str:
        record = onchain.current_record(self.ledger, self.node.address)
        if record is None:
            return "initial"
        if record.expiration_block < self.ledger.block_number:
            return "expired"
        if onchain.has_renewal_demand(self.ledger, self.node.address):
            return "demand"
        return "threshold"

    def _sequencer_step(self) -> None:
        node = self.node
        action = rollup.attestation_loop_step(node, self.ledger, self.now_ms)
        if action is rollup.LoopAction.SUBMIT_QUOTE:
            self._start_quote_submission(self._renewal_cause())
        if onchain.is_authorized(self.ledger, node.address, self.ledger.block_number):
            production = rollup.produce_block(node, self.ledger, self._wall_s())
            for tx in production.censored:
                self.censored_txs += 1
                self._emit(
                    EV_TX_CENSORED,
                    node.address,
                    {"tx_id": tx.tx_id.hex(), "sender": tx.sender},
                )
            self.included_txs += len(production.included)
            block = production.block
            self._emit(
                EV_L2_BLOCK_PRODUCED,
                node.address,
                {
                    "height": block.height,
                    "parent_hash": block.parent_hash.hex(),
                    "block_hash": block.block_hash.hex(),
                    "state_root": block.state_root.hex(),
                    "l1_origin": block.l1_origin.hex(),
                    "timestamp": block.timestamp,
                    "tx_ids": [t.hex() for t in block.tx_ids],
                },
            )
        self.schedule(self.now_ms + self.cfg.rollup.l2_interval_ms, self._sequencer_step)

    def _start_quote_submission(self, cause: str) -> None:
        node = self.node
        now_s = self._wall_s()
        pending = rollup.candidate_block(node, self.ledger, now_s)
        meta = rollup.collect_metadata(node, pending, now_s)
        quote = generate_quote(
            self.enclave,
            meta,
            now_s,
            version=QuoteVersion(self.cfg.protocol.quote_version),
        )
        quote_bytes = serialize_quote(quote, pad_to=self.cfg.protocol.quote_size_target)
        node.attestation_state.renewal_in_flight = True

        def deliver() -> None:
            try:
                bundle = self.pcs.get_collateral(self.enclave.fmspc)
                onchain.store_collateral(self.ledger, bundle)
            except PcsUnavailable:
                pass  # verify against whatever collateral is already on-chain
            result = onchain.submit_quote(
                self.ledger, node.address, quote_bytes, cause=cause
            )
            node.attestation_state.renewal_in_flight = False
            if isinstance(result, onchain.QuoteRejection):
                node.attestation_state.next_retry_at_ms = (
                    self.now_ms + node.attestation_state.retry_backoff_s * 1_000
                )
            else:
                self.last_quote_bytes = quote_bytes
            self._drain_ledger_events()

        self.schedule(self.now_ms + self._delay_ms("quote"), deliver)

    def _batcher_step(self) -> None:
        result = rollup.batcher_step(self.batcher, self.node, self.ledger, self.payload_by_tx)
        if result.withheld:
            self._emit(
                EV_BATCH_WITHHELD,
                BATCHER_ACTOR,
                {"pending_blocks": len(self.node.blocks_unbatched)},
            )
        self._drain_ledger_events()
        self.schedule(self.now_ms + self.cfg.rollup.batcher_interval_ms, self._batcher_step)

    def _proposer_step(self) -> None:
        rollup.proposer_step(self.proposer, self.node, self.ledger)
        self._drain_ledger_events()
        self.schedule(self.now_ms + self.cfg.rollup.proposer_interval_ms, self._proposer_step)

    # ------------------------------------------------------------------
    # workload

    def _schedule_workload(self) -> None:
        w = self.cfg.workload
        if w.tx_count <= 0:
            return
        if w.arrival == "burst":
            arrivals = [w.burst_at_s * 1_000] * w.tx_count
        else:
            rate = w.rate_per_s if w.rate_per_s is not None else w.tx_count / self.cfg.duration_s
            t = 0.0
            arrivals = []
            for _ in range(w.tx_count):
                t += self.rng.expovariate(rate)
                arrivals.append(t * 1_000)
            # Rescale into the run window so every configured transaction is
            # actually submitted; keeps tx accounting exact.
            horizon = self.duration_ms * 0.95
            last = arrivals[-1]
            if last > horizon:
                arrivals = [a * horizon / last for a in arrivals]
        for i, at in enumerate(arrivals):
            at_ms = min(int(at), self.duration_ms - 1)
            sender = f"user-{i % w.senders}"
            tx_id = sha256(
                b"tx:" + self.cfg.seed.to_bytes(8, "little") + i.to_bytes(8, "little")
            )
            self.schedule(at_ms, self._make_tx_submitter(tx_id, sender, w.payload_bytes))

    def _make_tx_submitter(self, tx_id: bytes, sender: str, size: int) -> Callable[[], None]:
        def submit() -> None:
            self.submitted_txs += 1
            self.payload_by_tx[tx_id] = size
            self._emit(
                EV_TX_SUBMITTED,
                sender,
                {"tx_id": tx_id.hex(), "sender": sender, "payload_size": size},
            )
            delay = self._delay_ms("tx")

            def arrive() -> None:
                self.node.enqueue(
                    rollup.Transaction(
                        tx_id=tx_id,
                        sender=sender,
                        payload_size=size,
                        submitted_at_ms=self.now_ms,
                    )
                )
                self._emit(EV_TX_ARRIVED, sender, {"tx_id": tx_id.hex(), "sender": sender})

            self.schedule(self.now_ms + delay, arrive)

        return submit

    # ------------------------------------------------------------------
    # adversaries

    def inject_adversary(self, kind, start_time_s: int = 0, params: Optional[dict] = None) -> None:
        """Schedule an adversary before the run starts."""
        if self._started:
            raise RuntimeError("adversaries must be injected before the scenario starts")
        if not isinstance(kind, AdversaryKind):
            try:
                kind = AdversaryKind(kind)
            except ValueError:
                raise UnknownKind(f"unknown adversary kind {kind!r}")
        params = dict(params or {})
        start_ms = start_time_s * 1_000
        handler = {
            AdversaryKind.FORGED_QUOTE: self._adv_tamper(TamperMode.FORGE_SIGNATURE),
            AdversaryKind.STALE_QUOTE: self._adv_tamper(TamperMode.STALE_TIMESTAMP),
            AdversaryKind.MEASUREMENT_SWAP: self._adv_tamper(TamperMode.WRONG_MEASUREMENT),
            AdversaryKind.METADATA_TAMPER: self._adv_metadata_tamper,
            AdversaryKind.REVOKED_COLLATERAL: self._adv_revoke,
            AdversaryKind.REPLAY_QUOTE: self._adv_replay,
            AdversaryKind.CENSORSHIP: self._adv_censorship,
            AdversaryKind.SPURIOUS_RENEWAL_SPAM: self._adv_renewal_spam,
        }[kind]
        self.schedule(start_ms, lambda: handler(kind, params))

    def _announce(self, kind: AdversaryKind, detail: dict) -> None:
        self._emit(EV_ADVERSARY_ACTIVATED, "adversary", {"kind": kind.value, **detail})

    def _adv_tamper(self, mode: TamperMode):
        def activate(kind: AdversaryKind, params: dict) -> None:
            self.enclave.tamper_mode = mode
            self._announce(kind, {"tamper_mode": mode.value})

        return activate

    def _adv_metadata_tamper(self, kind: AdversaryKind, params: dict) -> None:
        mode = params.get("mode", "l1_origin")
        if mode == "l1_origin":
            bogus = sha256(b"bogus-l1-origin")
            self.node.metadata_tamper = lambda meta: replace(meta, l1_origin=bogus)
        elif mode == "height":
            self.node.metadata_tamper = lambda meta: replace(
                meta, block_height=max(0, meta.block_height - 1)
            )
        else:
            raise UnknownKind(f"metadata_tamper mode {mode!r}")
        self._announce(kind, {"mode": mode})

    def _adv_revoke(self, kind: AdversaryKind, params: dict) -> None:
        serial = self.enclave.pck_cert_ref
        self.pcs.revoke(serial, self._wall_s())
        self._announce(kind, {"revoked_serial": serial})

    def _adv_replay(self, kind: AdversaryKind, params: dict) -> None:
        # Resubmit the last accepted quote's exact bytes once, as soon as
        # there is something to replay.
        if self.last_quote_bytes is None:
            self.schedule(self.now_ms + 2_000, lambda: self._adv_replay(kind, params))
            return
        self._announce(kind, {})
        self._emit(EV_REPLAY_ATTEMPTED, "adversary", {"target": self.node.address})
        onchain.submit_quote(
            self.ledger, self.node.address, self.last_quote_bytes, cause="replay-attack"
        )
        self._drain_ledger_events()

    def _adv_censorship(self, kind: AdversaryKind, params: dict) -> None:
        senders = params.get("senders")
        if senders is None:
            fraction = float(params.get("fraction", 0.5))
            count = int(self.cfg.workload.senders * fraction)
            senders = [f"user-{i}" for i in range(count)]
        censored = frozenset(senders)
        rollup.apply_censorship(self.node, lambda tx: tx.sender in censored)
        self._announce(kind, {"censored_senders": sorted(censored)})

    def _adv_renewal_spam(self, kind: AdversaryKind, params: dict) -> None:
        interval_s = int(params.get("spam_interval_s", 60))
        spammers = int(params.get("spammers", 5))
        reason = str(params.get("reason", "SUSPICIOUS_ACTIVITY"))
        self._announce(kind, {"spam_interval_s": interval_s, "spammers": spammers})
        counter = {"i": 0}

        def spam() -> None:
            requester = f"spammer-{counter['i'] % spammers}"
            counter["i"] += 1
            onchain.request_fresh_attestation(
                self.ledger,
                onchain.RenewalRequest(
                    requester=requester,
                    reason=reason,
                    bond=self.cfg.protocol.bond_wei,
                    at_block=self.ledger.block_number,
                ),
            )
            self._drain_ledger_events()
            self.schedule(self.now_ms + interval_s * 1_000, spam)

        spam()
        for key in ("whitelisted_request_at_s", "whitelisted_second_request_at_s"):
            if key in params:
                self.schedule(int(params[key]) * 1_000, self._whitelisted_renewal_request)

    def _whitelisted_renewal_request(self) -> None:
        whitelist = self.cfg.protocol.whitelist
        requester = whitelist[0] if whitelist else "validator-0"
        onchain.request_fresh_attestation(
            self.ledger,
            onchain.RenewalRequest(
                requester=requester,
                reason=onchain.RenewalReason.SUSPICIOUS_ACTIVITY,
                bond=self.cfg.protocol.bond_wei,
                at_block=self.ledger.block_number,
            ),
        )
        self._drain_ledger_events()

    # ------------------------------------------------------------------
    # run loop

    def run(self) -> Tuple[List[dict], MetricsReport]:
        if self._started:
            raise RuntimeError("simulation already ran")
        cfg = self.cfg
        self._emit(
            EV_SCENARIO_START,
            "simnet",
            {
                "name": cfg.name,
                "seed": cfg.seed,
                "duration_s": cfg.duration_s,
                "adversary": cfg.adversary.kind.value if cfg.adversary else None,
                "censorship_active": bool(
                    cfg.adversary and cfg.adversary.kind is AdversaryKind.CENSORSHIP
                ),
                "initial_supply": self.ledger.initial_supply,
                "genesis_time": self.ledger.genesis_time,
                "validity_window_blocks": cfg.protocol.validity_window_blocks,
                "renewal_threshold": cfg.protocol.renewal_threshold,
                "quote_size_target": cfg.protocol.quote_size_target,
            },
        )
        self._drain_ledger_events()  # deployment happened during setup

        if cfg.adversary is not None:
            self.inject_adversary(
                cfg.adversary.kind, cfg.adversary.start_time_s, dict(cfg.adversary.params)
            )
        self._schedule_workload()
        self.schedule(self.ledger.block_interval_s * 1_000, self._l1_tick)
        self.schedule(cfg.rollup.l2_interval_ms, self._sequencer_step)
        self.schedule(cfg.rollup.batcher_interval_ms, self._batcher_step)
        self.schedule(cfg.rollup.proposer_interval_ms, self._proposer_step)
        self._started = True

        while self._heap and self._heap[0][0] <= self.duration_ms:
            t, _, fn = heapq.heappop(self._heap)
            self.now_ms = t
            fn()
        self.now_ms = self.duration_ms
        self._drain_ledger_events()
        self._emit(
            EV_SCENARIO_END,
            "simnet",
            {
                "block_number": self.ledger.block_number,
                "gas_spent_total": self.ledger.gas_spent_total,
                "initial_supply": self.ledger.initial_supply,
                "total_supply": self.ledger.total_supply,
                "burned_total": self.ledger.burned_total,
                "submitted_txs": self.submitted_txs,
                "included_txs": self.included_txs,
                "censored_txs": self.censored_txs,
            },
        )
        return self.trace, compute_metrics(self.trace)


def run_scenario(cfg: ScenarioConfig) -> Tuple[List[dict], MetricsReport]:
    """Run a scenario to completion; identical configs yield identical traces."""
    return Simulation(cfg).run()


def inject_adversary(sim: Simulation, kind, params: Optional[dict] = None, *, start_time_s: int = 0):
    """Module-level convenience mirroring Simulation.inject_adversary."""
    sim.inject_adversary(kind, start_time_s, params)
