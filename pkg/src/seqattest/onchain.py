"""Deterministic L1 ledger and the attestation contract suite.

The suite is modeled as one deterministic state machine with internal
routing rather than a bytecode VM: an entry-point verifier that parses and
routes quotes by version, per-version quote verifiers, collateral DAOs, an
attestation registry gating publication, and renewal economics (whitelist,
rate limit, bond slash/refund). Gas is charged per the calibrated model in
:mod:`seqattest.gas` where the reference tables apply; batch and proposal
transactions use simple stylized costs (they are not part of the calibrated
tables).

Protocol verdicts (quote rejections, renewal rejections, unauthorized
publications) are returned as values and logged as events; contract misuse
(deploying twice, publishing before deployment, referencing a missing
batch) raises typed exceptions.

Verification order for submitted quotes, first failure wins: parse,
version routing, collateral lookup and PCK validity/revocation, signature
and report-data binding, TCB status and security version, measurement
against policy, timestamp freshness, nonce replay, metadata consistency
(height must advance, L1 origin must be a known L1 block hash).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Mapping, Optional, Union

from . import gas as gasmod
from .core import (
    CollateralBundle,
    PckCertificate,
    PolicyView,
    Quote,
    QuoteParseError,
    QuoteParseErrorKind,
    QuoteVersion,
    SequencerMetadata,
    compute_report_data,
    parse_quote,
    quote_hash,
    verify_quote_signature,
)
from .crypto import sha256
from .trace import payload_digest

__all__ = [
    "GENESIS_TIME",
    "L1_BLOCK_INTERVAL_S",
    "DEFAULT_VALIDITY_WINDOW_BLOCKS",
    "DEFAULT_FRESHNESS_DRIFT_S",
    "DEFAULT_RATE_LIMIT_BLOCKS",
    "DEFAULT_REQUIRED_BOND_WEI",
    "DEFAULT_CHALLENGE_WINDOW_BLOCKS",
    "OnchainError",
    "NotDeployed",
    "AlreadyDeployed",
    "UnknownBatch",
    "RejectReason",
    "RenewalReason",
    "RenewalRejectReason",
    "LedgerEvent",
    "Ledger",
    "AttestationRecord",
    "RenewalRequest",
    "RenewalOutcome",
    "QuoteRejection",
    "PublicationRejection",
    "SuiteParams",
    "AttestationSuite",
    "DeploymentReceipt",
    "deploy_attestation_suite",
    "store_collateral",
    "get_stored_collateral",
    "submit_quote",
    "set_quote_verifier",
    "is_authorized",
    "current_record",
    "has_renewal_demand",
    "request_fresh_attestation",
    "accept_batch",
    "accept_state_root",
    "commitment_status",
    "evaluate_quote_checks",
    "export_event_log_jsonl",
    "verify_gas",
]

GENESIS_TIME = 1_700_000_000
L1_BLOCK_INTERVAL_S = 12

DEFAULT_VALIDITY_WINDOW_BLOCKS = 1_200  # 4 hours of 12 s blocks
DEFAULT_FRESHNESS_DRIFT_S = 60
DEFAULT_RATE_LIMIT_BLOCKS = 150  # 30 minutes
DEFAULT_REQUIRED_BOND_WEI = 10**17  # 0.1 ETH
DEFAULT_CHALLENGE_WINDOW_BLOCKS = 50_400  # 7 days of 12 s blocks

# Stylized publication costs; not covered by the calibrated tables.
BATCH_BASE_GAS = 21_000
BATCH_CALLDATA_GAS_PER_BYTE = 16
PROPOSAL_GAS = 86_000

EV_CONTRACT_DEPLOYED = "ContractDeployed"
EV_VERIFIER_SET = "VerifierSet"
EV_COLLATERAL_STORED = "CollateralStored"
EV_QUOTE_ATTESTED = "QuoteAttested"
EV_QUOTE_REJECTED = "QuoteRejected"
EV_RENEWAL_ACCEPTED = "RenewalAccepted"
EV_RENEWAL_REJECTED = "RenewalRejected"
EV_BOND_SLASHED = "BondSlashed"
EV_BOND_REFUNDED = "BondRefunded"
EV_BATCH_PUBLISHED = "BatchPublished"
EV_BATCH_REJECTED = "BatchRejected"
EV_STATE_ROOT_PROPOSED = "StateRootProposed"
EV_STATE_ROOT_REJECTED = "StateRootRejected"


class OnchainError(Exception):
    pass


class NotDeployed(OnchainError):
    pass


class AlreadyDeployed(OnchainError):
    pass


class UnknownBatch(OnchainError):
    pass


class RejectReason(str, Enum):
    PARSE_ERROR = "ParseError"
    UNKNOWN_VERSION = "UnknownVersion"
    BAD_SIGNATURE = "BadSignature"
    REVOKED_PCK = "RevokedPck"
    TCB_NOT_ACCEPTED = "TcbNotAccepted"
    MEASUREMENT_MISMATCH = "MeasurementMismatch"
    METADATA_MISMATCH = "MetadataMismatch"
    STALE_TIMESTAMP = "StaleTimestamp"
    NONCE_REPLAYED = "NonceReplayed"


class RenewalReason(str, Enum):
    SUSPICIOUS_ACTIVITY = "SUSPICIOUS_ACTIVITY"
    CONFIG_CHANGE = "CONFIG_CHANGE"
    OTHER = "OTHER"


class RenewalRejectReason(str, Enum):
    NOT_WHITELISTED = "NotWhitelisted"
    RATE_LIMITED = "RateLimited"
    BAD_REASON = "BadReason"
    WRONG_BOND = "WrongBond"


@dataclass(frozen=True)
class LedgerEvent:
    block: int
    event_type: str
    actor: str
    gas: int
    reason: Optional[str]
    payload_hash: str
    payload: Mapping


@dataclass(frozen=True)
class AttestationRecord:
    sequencer: str
    quote_hash: bytes
    expiration_block: int
    last_nonce: int
    attested_metadata: SequencerMetadata


@dataclass(frozen=True)
class RenewalRequest:
    requester: str
    reason: Union[RenewalReason, str]
    bond: int
    at_block: int


@dataclass(frozen=True)
class QuoteRejection:
    reason: RejectReason
    detail: str


@dataclass(frozen=True)
class PublicationRejection:
    reason: str
    detail: str


@dataclass(frozen=True)
class RenewalOutcome:
    accepted: bool
    reject_reason: Optional[RenewalRejectReason] = None
    slashed: bool = False
    request_id: Optional[int] = None


@dataclass(frozen=True)
class SuiteParams:
    policy: PolicyView
    whitelist: frozenset = frozenset()
    required_bond_wei: int = DEFAULT_REQUIRED_BOND_WEI
    rate_limit_blocks: int = DEFAULT_RATE_LIMIT_BLOCKS
    challenge_window_blocks: int = DEFAULT_CHALLENGE_WINDOW_BLOCKS
    gas_model: gasmod.GasModel = field(default_factory=gasmod.GasModel)


@dataclass
class BatchRecord:
    index: int
    sequencer: str
    start_height: int
    end_height: int
    compressed_size: int
    published_block: int
    committed: bool = False


@dataclass
class CommitmentRecord:
    index: int
    sequencer: str
    batch_index: int
    end_height: int
    state_root: bytes
    submitted_block: int
    final_at_block: int


class Ledger:
    """Single serialized L1 state machine: blocks, balances, event log."""

    def __init__(
        self,
        *,
        genesis_accounts: Optional[Mapping[str, int]] = None,
        genesis_time: int = GENESIS_TIME,
        block_interval_s: int = L1_BLOCK_INTERVAL_S,
    ) -> None:
        self.block_number = 0
        self.genesis_time = genesis_time
        self.block_time = genesis_time
        self.block_interval_s = block_interval_s
        self.accounts: Dict[str, int] = dict(genesis_accounts or {})
        if any(v < 0 for v in self.accounts.values()):
            raise ValueError("genesis balances must be non-negative")
        self.initial_supply = sum(self.accounts.values())
        self.burned_total = 0
        self.gas_spent_total = 0
        self.event_log: List[LedgerEvent] = []
        self.suite: Optional[AttestationSuite] = None
        self.batches: List[BatchRecord] = []
        self.commitments: List[CommitmentRecord] = []
        self._last_batched_end: Dict[str, int] = {}
        genesis_hash = sha256(b"l1-genesis")
        self._block_hashes: List[bytes] = [genesis_hash]
        self._block_hash_set = {genesis_hash}

    @property
    def total_supply(self) -> int:
        return sum(self.accounts.values())

    def advance_block(self) -> None:
        self.block_number += 1
        self.block_time += self.block_interval_s
        prev = self._block_hashes[-1]
        h = sha256(b"l1-block:" + self.block_number.to_bytes(8, "little") + prev)
        self._block_hashes.append(h)
        self._block_hash_set.add(h)

    @property
    def latest_block_hash(self) -> bytes:
        return self._block_hashes[-1]

    def block_hash(self, number: int) -> bytes:
        return self._block_hashes[number]

    def has_block_hash(self, h: bytes) -> bool:
        return h in self._block_hash_set

    def balance(self, address: str) -> int:
        return self.accounts.get(address, 0)

    def _debit(self, address: str, amount: int) -> None:
        if self.accounts.get(address, 0) < amount:
            raise OnchainError(f"insufficient balance for {address}")
        self.accounts[address] -= amount

    def _credit(self, address: str, amount: int) -> None:
        self.accounts[address] = self.accounts.get(address, 0) + amount

    def _burn_escrowed(self, amount: int) -> None:
        self.burned_total += amount

    def emit(
        self,
        event_type: str,
        actor: str,
        *,
        gas: int = 0,
        reason: Optional[str] = None,
        payload: Optional[Mapping] = None,
    ) -> LedgerEvent:
        payload = dict(payload or {})
        event = LedgerEvent(
            block=self.block_number,
            event_type=event_type,
            actor=actor,
            gas=gas,
            reason=reason,
            payload_hash=payload_digest(payload),
            payload=payload,
        )
        self.event_log.append(event)
        self.gas_spent_total += gas
        return event


class AttestationSuite:
    """State of the deployed contract suite (registry, routing, collateral)."""

    def __init__(self, params: SuiteParams, deployed_at_block: int) -> None:
        self.params = params
        self.gas_model = params.gas_model
        self.deployed_at_block = deployed_at_block
        self.verifier_routing: Dict[QuoteVersion, str] = {
            QuoteVersion.V3: "V3 Verifier",
            QuoteVersion.V4: "V4 Verifier",
        }
        self.records: Dict[str, AttestationRecord] = {}
        self.last_nonce: Dict[str, int] = {}
        self.last_attested_height: Dict[str, int] = {}
        self.renewal_demand: set = set()
        self.last_request_block: Optional[int] = None
        self._cert_by_serial: Dict[str, PckCertificate] = {}
        self._latest_bundle_by_fmspc: Dict[bytes, CollateralBundle] = {}
        self._renewal_request_counter = 0

    def known_sequencers(self) -> set:
        return set(self.records) | set(self.last_nonce)


@dataclass(frozen=True)
class DeploymentReceipt:
    block: int
    per_contract_gas: Mapping[str, int]
    total_gas: int


def _require_suite(ledger: Ledger) -> AttestationSuite:
    if ledger.suite is None:
        raise NotDeployed("attestation suite is not deployed on this ledger")
    return ledger.suite


def deploy_attestation_suite(
    ledger: Ledger,
    params: Optional[SuiteParams] = None,
    *,
    deployer: str = "deployer",
) -> DeploymentReceipt:
    """Deploy all ten contracts, charging the calibrated per-contract gas."""
    if ledger.suite is not None:
        raise AlreadyDeployed("suite already deployed")
    if params is None:
        raise OnchainError("deployment requires suite parameters (policy at minimum)")
    suite = AttestationSuite(params, ledger.block_number)
    per_contract = dict(params.gas_model.deploy_costs)
    for name, cost in per_contract.items():
        ledger.emit(
            EV_CONTRACT_DEPLOYED,
            deployer,
            gas=cost,
            payload={"contract": name},
        )
    ledger.suite = suite
    return DeploymentReceipt(
        block=ledger.block_number,
        per_contract_gas=per_contract,
        total_gas=sum(per_contract.values()),
    )


def store_collateral(
    ledger: Ledger, bundle: CollateralBundle, *, actor: str = "collateral-retriever"
) -> str:
    """Persist a collateral snapshot on-chain; latest snapshot per fmspc wins."""
    suite = _require_suite(ledger)
    suite._cert_by_serial[bundle.pck_cert.serial] = bundle.pck_cert
    suite._latest_bundle_by_fmspc[bundle.tcb_info.fmspc] = bundle
    collateral_id = bundle.tcb_info.fmspc.hex()
    ledger.emit(
        EV_COLLATERAL_STORED,
        actor,
        payload={
            "collateral_id": collateral_id,
            "pck_serial": bundle.pck_cert.serial,
            "tcb_status": bundle.tcb_info.status.value,
            "crl_size": len(bundle.crl.revoked_serials),
        },
    )
    return collateral_id


def get_stored_collateral(ledger: Ledger, fmspc: bytes) -> Optional[CollateralBundle]:
    suite = _require_suite(ledger)
    return suite._latest_bundle_by_fmspc.get(fmspc)


def evaluate_quote_checks(
    quote: Quote,
    cert: Optional[PckCertificate],
    bundle: Optional[CollateralBundle],
    policy: PolicyView,
    *,
    now_s: int,
    last_nonce: Optional[int],
    last_height: Optional[int],
    l1_origin_known: Optional[Callable[[bytes], bool]],
) -> Optional[QuoteRejection]:
    """Post-parse verification shared by the ledger and the offline verifier.

    Returns None on acceptance, otherwise the first failing check. Baseline
    arguments (last nonce, last attested height) come from the registry
    on-chain and from the policy file offline.
    """
    if cert is None or bundle is None:
        return QuoteRejection(
            RejectReason.REVOKED_PCK, f"no trusted collateral for PCK {quote.collateral_ref!r}"
        )
    if quote.collateral_ref in bundle.crl.revoked_serials:
        return QuoteRejection(RejectReason.REVOKED_PCK, "PCK serial is on the CRL")
    if not cert.not_before <= now_s <= cert.not_after:
        return QuoteRejection(RejectReason.REVOKED_PCK, "PCK certificate outside validity window")
    if quote.body.report_data != compute_report_data(quote.metadata):
        return QuoteRejection(
            RejectReason.BAD_SIGNATURE, "report data does not commit to the metadata"
        )
    if not verify_quote_signature(quote, cert.subject_pubkey):
        return QuoteRejection(RejectReason.BAD_SIGNATURE, "signature verification failed")
    if bundle.tcb_info.status not in policy.accepted_tcb_statuses:
        return QuoteRejection(
            RejectReason.TCB_NOT_ACCEPTED, f"TCB status {bundle.tcb_info.status.value}"
        )
    min_svn = max(policy.min_isv_svn, bundle.qe_identity.min_isv_svn)
    if quote.body.isv_svn < min_svn:
        return QuoteRejection(
            RejectReason.TCB_NOT_ACCEPTED,
            f"isv_svn {quote.body.isv_svn} below required {min_svn}",
        )
    if quote.body.mrenclave != policy.expected_mrenclave:
        return QuoteRejection(RejectReason.MEASUREMENT_MISMATCH, "mrenclave mismatch")
    if quote.body.mrsigner != policy.expected_mrsigner:
        return QuoteRejection(RejectReason.MEASUREMENT_MISMATCH, "mrsigner mismatch")
    if abs(quote.metadata.timestamp - now_s) > policy.freshness_drift:
        return QuoteRejection(
            RejectReason.STALE_TIMESTAMP,
            f"timestamp {quote.metadata.timestamp} vs verification time {now_s}",
        )
    if last_nonce is not None and quote.metadata.nonce <= last_nonce:
        return QuoteRejection(
            RejectReason.NONCE_REPLAYED,
            f"nonce {quote.metadata.nonce} <= last attested {last_nonce}",
        )
    if last_height is not None and quote.metadata.block_height <= last_height:
        return QuoteRejection(
            RejectReason.METADATA_MISMATCH,
            f"block height {quote.metadata.block_height} does not advance past {last_height}",
        )
    if l1_origin_known is not None and not l1_origin_known(quote.metadata.l1_origin):
        return QuoteRejection(RejectReason.METADATA_MISMATCH, "unknown L1 origin reference")
    return None


def submit_quote(
    ledger: Ledger,
    sequencer: str,
    quote_bytes: bytes,
    *,
    cause: str = "external",
) -> Union[AttestationRecord, QuoteRejection]:
    """Verify a serialized quote and, on success, write the registry record.

    Accepted submissions charge the size-calibrated verification gas and
    extend authorization by one validity window. Rejections emit a
    QuoteRejected event with a typed reason and charge no gas.
    """
    suite = _require_suite(ledger)
    qhash = quote_hash(quote_bytes).hex()

    def reject(reason: RejectReason, detail: str) -> QuoteRejection:
        rejection = QuoteRejection(reason, detail)
        ledger.emit(
            EV_QUOTE_REJECTED,
            sequencer,
            reason=reason.value,
            payload={"quote_hash": qhash, "detail": detail, "size": len(quote_bytes)},
        )
        return rejection

    try:
        quote = parse_quote(quote_bytes)
    except QuoteParseError as exc:
        if exc.kind is QuoteParseErrorKind.UNKNOWN_VERSION:
            return reject(RejectReason.UNKNOWN_VERSION, str(exc))
        return reject(RejectReason.PARSE_ERROR, str(exc))

    if quote.header.version not in suite.verifier_routing:
        return reject(
            RejectReason.UNKNOWN_VERSION,
            f"no verifier registered for version {int(quote.header.version)}",
        )

    cert = suite._cert_by_serial.get(quote.collateral_ref)
    bundle = suite._latest_bundle_by_fmspc.get(cert.fmspc) if cert else None
    rejection = evaluate_quote_checks(
        quote,
        cert,
        bundle,
        suite.params.policy,
        now_s=ledger.block_time,
        last_nonce=suite.last_nonce.get(sequencer),
        last_height=suite.last_attested_height.get(sequencer),
        l1_origin_known=ledger.has_block_hash,
    )
    if rejection is not None:
        return reject(rejection.reason, rejection.detail)

    gas = suite.gas_model.verify_gas(len(quote_bytes))
    record = AttestationRecord(
        sequencer=sequencer,
        quote_hash=quote_hash(quote_bytes),
        expiration_block=ledger.block_number + suite.params.policy.validity_window,
        last_nonce=quote.metadata.nonce,
        attested_metadata=quote.metadata,
    )
    suite.records[sequencer] = record
    suite.last_nonce[sequencer] = quote.metadata.nonce
    suite.last_attested_height[sequencer] = quote.metadata.block_height
    suite.renewal_demand.discard(sequencer)
    ledger.emit(
        EV_QUOTE_ATTESTED,
        sequencer,
        gas=gas,
        payload={
            "quote_hash": qhash,
            "expiration_block": record.expiration_block,
            "nonce": quote.metadata.nonce,
            "block_height": quote.metadata.block_height,
            "size": len(quote_bytes),
            "version": int(quote.header.version),
            "cause": cause,
        },
    )
    return record


def set_quote_verifier(
    ledger: Ledger, version: QuoteVersion, *, actor: str = "governance"
) -> LedgerEvent:
    """Register (or replace) the verifier routed for a quote version."""
    suite = _require_suite(ledger)
    suite.verifier_routing[version] = f"V{int(version)} Verifier"
    return ledger.emit(
        EV_VERIFIER_SET,
        actor,
        gas=suite.gas_model.set_verifier_cost,
        payload={"version": int(version)},
    )


def is_authorized(ledger: Ledger, sequencer: str, at_block: int) -> bool:
    if ledger.suite is None:
        return False
    record = ledger.suite.records.get(sequencer)
    return record is not None and record.expiration_block >= at_block


def current_record(ledger: Ledger, sequencer: str) -> Optional[AttestationRecord]:
    if ledger.suite is None:
        return None
    return ledger.suite.records.get(sequencer)


def has_renewal_demand(ledger: Ledger, sequencer: str) -> bool:
    if ledger.suite is None:
        return False
    return sequencer in ledger.suite.renewal_demand


def request_fresh_attestation(ledger: Ledger, req: RenewalRequest) -> RenewalOutcome:
    """External renewal trigger with whitelist, rate limit, and bond economics.

    The bond is escrowed on acceptance and slashed (burned) when the live
    attestation still has more than half its validity window remaining,
    refunded otherwise. Accepted requests flag every known sequencer for
    renewal; the flag clears when a fresh quote is accepted.
    """
    suite = _require_suite(ledger)

    def reject(reason: RenewalRejectReason, detail: str) -> RenewalOutcome:
        ledger.emit(
            EV_RENEWAL_REJECTED,
            req.requester,
            reason=reason.value,
            payload={"detail": detail, "at_block": req.at_block},
        )
        return RenewalOutcome(accepted=False, reject_reason=reason)

    if req.requester not in suite.params.whitelist:
        return reject(RenewalRejectReason.NOT_WHITELISTED, "requester not whitelisted")
    if (
        suite.last_request_block is not None
        and req.at_block - suite.last_request_block < suite.params.rate_limit_blocks
    ):
        return reject(
            RenewalRejectReason.RATE_LIMITED,
            f"last external request at block {suite.last_request_block}",
        )
    try:
        reason_code = RenewalReason(req.reason)
    except ValueError:
        return reject(RenewalRejectReason.BAD_REASON, f"unknown reason code {req.reason!r}")
    if req.bond != suite.params.required_bond_wei:
        return reject(
            RenewalRejectReason.WRONG_BOND,
            f"bond {req.bond} != required {suite.params.required_bond_wei}",
        )
    if ledger.balance(req.requester) < req.bond:
        return reject(RenewalRejectReason.WRONG_BOND, "requester cannot fund the bond")

    suite.last_request_block = req.at_block
    suite._renewal_request_counter += 1
    request_id = suite._renewal_request_counter
    ledger._debit(req.requester, req.bond)

    remaining = 0
    window = suite.params.policy.validity_window
    for record in suite.records.values():
        remaining = max(remaining, record.expiration_block - req.at_block)
    slashed = remaining * 2 > window

    suite.renewal_demand |= suite.known_sequencers()
    ledger.emit(
        EV_RENEWAL_ACCEPTED,
        req.requester,
        payload={
            "request_id": request_id,
            "reason_code": reason_code.value,
            "bond": req.bond,
            "remaining_blocks": remaining,
            "slashed": slashed,
        },
    )
    if slashed:
        ledger._burn_escrowed(req.bond)
        ledger.emit(
            EV_BOND_SLASHED,
            req.requester,
            payload={"request_id": request_id, "bond": req.bond},
        )
    else:
        ledger._credit(req.requester, req.bond)
        ledger.emit(
            EV_BOND_REFUNDED,
            req.requester,
            payload={"request_id": request_id, "bond": req.bond},
        )
    return RenewalOutcome(accepted=True, slashed=slashed, request_id=request_id)


def accept_batch(
    ledger: Ledger, sequencer: str, batch
) -> Union[BatchRecord, PublicationRejection]:
    """Record batch calldata iff the sequencer holds a live attestation."""
    _require_suite(ledger)
    if not is_authorized(ledger, sequencer, ledger.block_number):
        ledger.emit(
            EV_BATCH_REJECTED,
            sequencer,
            reason="NotAuthorized",
            payload={
                "start_height": batch.start_height,
                "end_height": batch.end_height,
            },
        )
        return PublicationRejection("NotAuthorized", "no live attestation record")
    last_end = ledger._last_batched_end.get(sequencer)
    if last_end is not None and batch.start_height != last_end + 1:
        raise OnchainError(
            f"non-contiguous batch range for {sequencer}: "
            f"{batch.start_height} after {last_end}"
        )
    record = BatchRecord(
        index=len(ledger.batches),
        sequencer=sequencer,
        start_height=batch.start_height,
        end_height=batch.end_height,
        compressed_size=batch.compressed_size,
        published_block=ledger.block_number,
    )
    ledger.batches.append(record)
    ledger._last_batched_end[sequencer] = batch.end_height
    gas = BATCH_BASE_GAS + BATCH_CALLDATA_GAS_PER_BYTE * batch.compressed_size
    ledger.emit(
        EV_BATCH_PUBLISHED,
        sequencer,
        gas=gas,
        payload={
            "batch_index": record.index,
            "start_height": record.start_height,
            "end_height": record.end_height,
            "compressed_size": record.compressed_size,
        },
    )
    return record


def accept_state_root(
    ledger: Ledger, sequencer: str, commitment
) -> Union[CommitmentRecord, PublicationRejection]:
    """Accept a state-root commitment for a published batch.

    The commitment enters PENDING and becomes FINAL once the challenge
    window has elapsed; dispute content is not modeled.
    """
    suite = _require_suite(ledger)
    if not 0 <= commitment.batch_index < len(ledger.batches):
        raise UnknownBatch(f"batch {commitment.batch_index} does not exist")
    if not is_authorized(ledger, sequencer, ledger.block_number):
        ledger.emit(
            EV_STATE_ROOT_REJECTED,
            sequencer,
            reason="NotAuthorized",
            payload={"batch_index": commitment.batch_index},
        )
        return PublicationRejection("NotAuthorized", "no live attestation record")
    batch = ledger.batches[commitment.batch_index]
    record = CommitmentRecord(
        index=len(ledger.commitments),
        sequencer=sequencer,
        batch_index=commitment.batch_index,
        end_height=batch.end_height,
        state_root=commitment.state_root,
        submitted_block=ledger.block_number,
        final_at_block=ledger.block_number + suite.params.challenge_window_blocks,
    )
    ledger.commitments.append(record)
    batch.committed = True
    ledger.emit(
        EV_STATE_ROOT_PROPOSED,
        sequencer,
        gas=PROPOSAL_GAS,
        payload={
            "commitment_index": record.index,
            "batch_index": record.batch_index,
            "end_height": record.end_height,
            "state_root": record.state_root.hex(),
            "final_at_block": record.final_at_block,
        },
    )
    return record


def commitment_status(ledger: Ledger, commitment_index: int, at_block: Optional[int] = None) -> str:
    at_block = ledger.block_number if at_block is None else at_block
    record = ledger.commitments[commitment_index]
    return "FINAL" if at_block >= record.final_at_block else "PENDING"


def export_event_log_jsonl(ledger: Ledger) -> List[str]:
    """On-chain event log in its wire schema, one JSON object per line."""
    lines = []
    for event in ledger.event_log:
        lines.append(
            json.dumps(
                {
                    "block": event.block,
                    "event_type": event.event_type,
                    "actor": event.actor,
                    "gas": event.gas,
                    "reason": event.reason,
                    "payload_hash": event.payload_hash,
                },
                sort_keys=True,
                separators=(",", ":"),
            )
        )
    return lines


def verify_gas(quote_size_bytes: int) -> int:
    return gasmod.verify_gas(quote_size_bytes)
