"""Ledger and attestation contract suite state machines."""

from dataclasses import replace

import pytest

from conftest import SEQ, VALIDATOR, build_world, make_quote_bytes
from seqattest.core import (
    QuoteVersion,
    TcbStatus,
    parse_quote,
    serialize_quote,
)
from seqattest.enclave import TamperMode
from seqattest.gas import SET_VERIFIER_GAS
from seqattest.onchain import (
    AlreadyDeployed,
    AttestationRecord,
    Ledger,
    NotDeployed,
    PublicationRejection,
    QuoteRejection,
    RejectReason,
    RenewalRejectReason,
    RenewalRequest,
    SuiteParams,
    UnknownBatch,
    accept_batch,
    accept_state_root,
    commitment_status,
    current_record,
    deploy_attestation_suite,
    has_renewal_demand,
    is_authorized,
    request_fresh_attestation,
    set_quote_verifier,
    store_collateral,
    submit_quote,
    export_event_log_jsonl,
)
from seqattest.rollup import Batch, StateRootCommitment


def advance(ledger, blocks):
    for _ in range(blocks):
        ledger.advance_block()


class TestDeployment:
    def test_per_contract_gas_and_total(self, world):
        deploys = [e for e in world.ledger.event_log if e.event_type == "ContractDeployed"]
        assert len(deploys) == 10
        by_name = {e.payload["contract"]: e.gas for e in deploys}
        assert by_name["PCCS Router"] == 2_352_196
        assert by_name["Verification"] == 322_250
        assert sum(by_name.values()) == 23_731_965

    def test_deploy_twice(self, world):
        with pytest.raises(AlreadyDeployed):
            deploy_attestation_suite(world.ledger, SuiteParams(policy=world.policy))

    def test_ops_require_deployment(self, world):
        bare = Ledger()
        with pytest.raises(NotDeployed):
            store_collateral(bare, world.pcs.get_collateral(world.enclave.fmspc))
        with pytest.raises(NotDeployed):
            submit_quote(bare, SEQ, b"\x03" + b"\x00" * 600)
        with pytest.raises(NotDeployed):
            set_quote_verifier(bare, QuoteVersion.V4)


class TestCollateral:
    def test_store_then_read_identical(self, world):
        bundle = world.pcs.get_collateral(world.enclave.fmspc)
        store_collateral(world.ledger, bundle)
        from seqattest.onchain import get_stored_collateral

        assert get_stored_collateral(world.ledger, world.enclave.fmspc) == bundle

    def test_latest_snapshot_wins_both_events_logged(self, world):
        fmspc = world.enclave.fmspc
        first = world.pcs.get_collateral(fmspc)
        store_collateral(world.ledger, first)
        world.pcs.set_tcb_status(fmspc, TcbStatus.OUT_OF_DATE, world.ledger.block_time)
        second = world.pcs.get_collateral(fmspc)
        store_collateral(world.ledger, second)
        from seqattest.onchain import get_stored_collateral

        assert get_stored_collateral(world.ledger, fmspc) == second
        stored_events = [
            e for e in world.ledger.event_log if e.event_type == "CollateralStored"
        ]
        assert len(stored_events) == 2


class TestSubmitQuote:
    def test_honest_4kb_quote_accepted_with_table_gas(self, world):
        data = make_quote_bytes(world)
        assert len(data) == 4_096
        record = submit_quote(world.ledger, SEQ, data)
        assert isinstance(record, AttestationRecord)
        assert record.expiration_block == world.ledger.block_number + 1_200
        event = world.ledger.event_log[-1]
        assert event.event_type == "QuoteAttested"
        assert event.gas == 12_690_007

    def test_garbage_bytes_parse_error(self, world):
        result = submit_quote(world.ledger, SEQ, b"\x03\x00garbage")
        assert isinstance(result, QuoteRejection)
        assert result.reason is RejectReason.PARSE_ERROR

    def test_unknown_version_byte(self, world):
        data = bytearray(make_quote_bytes(world))
        data[0] = 9
        result = submit_quote(world.ledger, SEQ, bytes(data))
        assert result.reason is RejectReason.UNKNOWN_VERSION

    def test_forged_signature(self, world):
        world.enclave.tamper_mode = TamperMode.FORGE_SIGNATURE
        result = submit_quote(world.ledger, SEQ, make_quote_bytes(world))
        assert result.reason is RejectReason.BAD_SIGNATURE

    def test_broken_report_data_binding(self, world):
        data = make_quote_bytes(world)
        quote = parse_quote(data)
        mutated = replace(quote, metadata=replace(quote.metadata, timestamp=quote.metadata.timestamp + 1))
        result = submit_quote(world.ledger, SEQ, serialize_quote(mutated, pad_to=4_096))
        assert result.reason is RejectReason.BAD_SIGNATURE

    def test_revoked_pck(self, world):
        world.pcs.revoke(world.enclave.pck_cert_ref, world.ledger.block_time)
        result = submit_quote(world.ledger, SEQ, make_quote_bytes(world))
        assert result.reason is RejectReason.REVOKED_PCK

    def test_unknown_collateral_ref(self, world):
        data = make_quote_bytes(world, store=False)  # nothing stored on-chain
        result = submit_quote(world.ledger, SEQ, data)
        assert result.reason is RejectReason.REVOKED_PCK

    def test_tcb_not_accepted(self, world):
        world.pcs.set_tcb_status(
            world.enclave.fmspc, TcbStatus.OUT_OF_DATE, world.ledger.block_time
        )
        result = submit_quote(world.ledger, SEQ, make_quote_bytes(world))
        assert result.reason is RejectReason.TCB_NOT_ACCEPTED

    def test_measurement_mismatch(self, world):
        world.enclave.tamper_mode = TamperMode.WRONG_MEASUREMENT
        result = submit_quote(world.ledger, SEQ, make_quote_bytes(world))
        assert result.reason is RejectReason.MEASUREMENT_MISMATCH

    def test_stale_timestamp(self, world):
        world.enclave.tamper_mode = TamperMode.STALE_TIMESTAMP
        result = submit_quote(world.ledger, SEQ, make_quote_bytes(world))
        assert result.reason is RejectReason.STALE_TIMESTAMP

    def test_nonce_replay_exact_bytes(self, world):
        data = make_quote_bytes(world)
        assert isinstance(submit_quote(world.ledger, SEQ, data), AttestationRecord)
        result = submit_quote(world.ledger, SEQ, data)
        assert result.reason is RejectReason.NONCE_REPLAYED

    def test_nonce_replay_persists_across_renewals(self, world):
        first = make_quote_bytes(world)
        submit_quote(world.ledger, SEQ, first)
        advance(world.ledger, 5)
        world.node.head = replace(world.node.head, height=world.node.head.height + 5)
        second = make_quote_bytes(world)
        assert isinstance(submit_quote(world.ledger, SEQ, second), AttestationRecord)
        result = submit_quote(world.ledger, SEQ, first)
        assert result.reason is RejectReason.NONCE_REPLAYED

    def test_height_regression_is_metadata_mismatch(self, world):
        submit_quote(world.ledger, SEQ, make_quote_bytes(world, height=5))
        result = submit_quote(world.ledger, SEQ, make_quote_bytes(world, height=5))
        assert result.reason is RejectReason.METADATA_MISMATCH

    def test_unknown_l1_origin_is_metadata_mismatch(self, world):
        from seqattest.crypto import sha256

        result = submit_quote(
            world.ledger, SEQ, make_quote_bytes(world, l1_origin=sha256(b"not-an-l1-block"))
        )
        assert result.reason is RejectReason.METADATA_MISMATCH

    def test_genesis_quote_any_height_is_baseline(self, world):
        record = submit_quote(world.ledger, SEQ, make_quote_bytes(world, height=777))
        assert isinstance(record, AttestationRecord)
        assert record.attested_metadata.block_height == 777

    def test_rejections_charge_no_gas_and_leave_registry_untouched(self, world):
        before = world.ledger.gas_spent_total
        submit_quote(world.ledger, SEQ, b"\x04!!!")
        assert world.ledger.gas_spent_total == before
        assert current_record(world.ledger, SEQ) is None


class TestVerifierRouting:
    def test_set_quote_verifier_gas(self, world):
        event = set_quote_verifier(world.ledger, QuoteVersion.V4)
        assert event.gas == SET_VERIFIER_GAS == 4_544_335

    def test_replacing_charges_again(self, world):
        before = world.ledger.gas_spent_total
        set_quote_verifier(world.ledger, QuoteVersion.V4)
        set_quote_verifier(world.ledger, QuoteVersion.V4)
        assert world.ledger.gas_spent_total - before == 2 * SET_VERIFIER_GAS


class TestAuthorization:
    def test_authorized_after_acceptance(self, world):
        submit_quote(world.ledger, SEQ, make_quote_bytes(world))
        assert is_authorized(world.ledger, SEQ, world.ledger.block_number)

    def test_expires_after_window(self, world):
        record = submit_quote(world.ledger, SEQ, make_quote_bytes(world))
        assert is_authorized(world.ledger, SEQ, record.expiration_block)
        assert not is_authorized(world.ledger, SEQ, record.expiration_block + 1)

    def test_unknown_sequencer(self, world):
        assert not is_authorized(world.ledger, "nobody", 0)


class TestRenewalEconomics:
    def bond(self, world):
        return world.ledger.suite.params.required_bond_wei

    def test_not_whitelisted(self, world):
        outcome = request_fresh_attestation(
            world.ledger,
            RenewalRequest("stranger", "SUSPICIOUS_ACTIVITY", self.bond(world), 0),
        )
        assert not outcome.accepted
        assert outcome.reject_reason is RenewalRejectReason.NOT_WHITELISTED

    def test_slash_above_half_window(self, world):
        submit_quote(world.ledger, SEQ, make_quote_bytes(world))
        supply_before = world.ledger.total_supply
        outcome = request_fresh_attestation(
            world.ledger,
            RenewalRequest(VALIDATOR, "SUSPICIOUS_ACTIVITY", self.bond(world), world.ledger.block_number),
        )
        assert outcome.accepted and outcome.slashed
        assert world.ledger.total_supply == supply_before - self.bond(world)
        assert world.ledger.burned_total == self.bond(world)
        assert has_renewal_demand(world.ledger, SEQ)

    def test_refund_below_half_window(self, world):
        submit_quote(world.ledger, SEQ, make_quote_bytes(world))
        advance(world.ledger, 700)  # remaining 500 of 1200 < 50%
        balance_before = world.ledger.balance(VALIDATOR)
        supply_before = world.ledger.total_supply
        outcome = request_fresh_attestation(
            world.ledger,
            RenewalRequest(VALIDATOR, "CONFIG_CHANGE", self.bond(world), world.ledger.block_number),
        )
        assert outcome.accepted and not outcome.slashed
        assert world.ledger.balance(VALIDATOR) == balance_before
        assert world.ledger.total_supply == supply_before

    def test_rate_limited(self, world):
        submit_quote(world.ledger, SEQ, make_quote_bytes(world))
        advance(world.ledger, 700)
        first = request_fresh_attestation(
            world.ledger,
            RenewalRequest(VALIDATOR, "SUSPICIOUS_ACTIVITY", self.bond(world), world.ledger.block_number),
        )
        assert first.accepted
        advance(world.ledger, 50)  # 10 simulated minutes < 30-minute limit
        second = request_fresh_attestation(
            world.ledger,
            RenewalRequest(VALIDATOR, "SUSPICIOUS_ACTIVITY", self.bond(world), world.ledger.block_number),
        )
        assert second.reject_reason is RenewalRejectReason.RATE_LIMITED

    def test_bad_reason(self, world):
        outcome = request_fresh_attestation(
            world.ledger, RenewalRequest(VALIDATOR, "BECAUSE", self.bond(world), 0)
        )
        assert outcome.reject_reason is RenewalRejectReason.BAD_REASON

    def test_wrong_bond(self, world):
        outcome = request_fresh_attestation(
            world.ledger, RenewalRequest(VALIDATOR, "OTHER", self.bond(world) - 1, 0)
        )
        assert outcome.reject_reason is RenewalRejectReason.WRONG_BOND

    def test_demand_cleared_by_fresh_quote(self, world):
        submit_quote(world.ledger, SEQ, make_quote_bytes(world, height=1))
        request_fresh_attestation(
            world.ledger,
            RenewalRequest(VALIDATOR, "SUSPICIOUS_ACTIVITY", self.bond(world), world.ledger.block_number),
        )
        assert has_renewal_demand(world.ledger, SEQ)
        submit_quote(world.ledger, SEQ, make_quote_bytes(world, height=2))
        assert not has_renewal_demand(world.ledger, SEQ)


class TestPublicationGating:
    def batch(self, start=1, end=3):
        return Batch(start_height=start, end_height=end, compressed_size=400, sequencer=SEQ)

    def test_accept_batch_when_authorized(self, world):
        submit_quote(world.ledger, SEQ, make_quote_bytes(world))
        record = accept_batch(world.ledger, SEQ, self.batch())
        assert record.index == 0
        assert world.ledger.event_log[-1].event_type == "BatchPublished"

    def test_reject_batch_without_attestation(self, world):
        result = accept_batch(world.ledger, SEQ, self.batch())
        assert isinstance(result, PublicationRejection)
        assert world.ledger.event_log[-1].event_type == "BatchRejected"

    def test_reject_batch_after_expiration(self, world):
        record = submit_quote(world.ledger, SEQ, make_quote_bytes(world))
        advance(world.ledger, record.expiration_block - world.ledger.block_number + 1)
        result = accept_batch(world.ledger, SEQ, self.batch())
        assert isinstance(result, PublicationRejection)

    def test_state_root_pending_then_final_after_challenge_window(self, world):
        submit_quote(world.ledger, SEQ, make_quote_bytes(world))
        accept_batch(world.ledger, SEQ, self.batch())
        from seqattest.crypto import sha256

        commitment = StateRootCommitment(batch_index=0, end_height=3, state_root=sha256(b"sr"))
        record = accept_state_root(world.ledger, SEQ, commitment)
        assert commitment_status(world.ledger, 0) == "PENDING"
        # 7 days at 12 s/block.
        assert record.final_at_block - record.submitted_block == 50_400
        assert commitment_status(world.ledger, 0, at_block=record.submitted_block + 50_399) == "PENDING"
        assert commitment_status(world.ledger, 0, at_block=record.submitted_block + 50_400) == "FINAL"

    def test_state_root_unknown_batch(self, world):
        submit_quote(world.ledger, SEQ, make_quote_bytes(world))
        from seqattest.crypto import sha256

        with pytest.raises(UnknownBatch):
            accept_state_root(
                world.ledger,
                SEQ,
                StateRootCommitment(batch_index=5, end_height=3, state_root=sha256(b"sr")),
            )

    def test_state_root_rejected_when_unauthorized(self, world):
        submit_quote(world.ledger, SEQ, make_quote_bytes(world))
        accept_batch(world.ledger, SEQ, self.batch())
        record = current_record(world.ledger, SEQ)
        advance(world.ledger, record.expiration_block - world.ledger.block_number + 1)
        from seqattest.crypto import sha256

        result = accept_state_root(
            world.ledger,
            SEQ,
            StateRootCommitment(batch_index=0, end_height=3, state_root=sha256(b"sr")),
        )
        assert isinstance(result, PublicationRejection)


class TestLedgerAccounting:
    def test_gas_conservation(self, world):
        submit_quote(world.ledger, SEQ, make_quote_bytes(world))
        set_quote_verifier(world.ledger, QuoteVersion.V3)
        accept_batch(world.ledger, SEQ, Batch(1, 3, 400, SEQ))
        assert world.ledger.gas_spent_total == sum(e.gas for e in world.ledger.event_log)

    def test_block_time_strictly_increases(self, world):
        times = []
        for _ in range(10):
            times.append(world.ledger.block_time)
            world.ledger.advance_block()
        assert times == sorted(set(times))

    def test_event_log_export_schema(self, world):
        import json

        submit_quote(world.ledger, SEQ, make_quote_bytes(world))
        lines = export_event_log_jsonl(world.ledger)
        assert len(lines) == len(world.ledger.event_log)
        for line in lines:
            event = json.loads(line)
            assert set(event) == {"block", "event_type", "actor", "gas", "reason", "payload_hash"}

    def test_determinism_identical_op_sequences(self):
        def run():
            world = build_world()
            submit_quote(world.ledger, SEQ, make_quote_bytes(world))
            accept_batch(world.ledger, SEQ, Batch(1, 3, 400, SEQ))
            return export_event_log_jsonl(world.ledger)

        assert run() == run()


class TestBatchContiguity:
    def test_non_contiguous_range_is_a_caller_error(self, world):
        from seqattest.onchain import OnchainError

        submit_quote(world.ledger, SEQ, make_quote_bytes(world))
        accept_batch(world.ledger, SEQ, Batch(1, 3, 400, SEQ))
        with pytest.raises(OnchainError):
            accept_batch(world.ledger, SEQ, Batch(5, 6, 400, SEQ))

    def test_unfunded_whitelisted_requester_cannot_bond(self):
        world = build_world(whitelist=(VALIDATOR, "poor-validator"))
        outcome = request_fresh_attestation(
            world.ledger,
            RenewalRequest(
                "poor-validator",
                "SUSPICIOUS_ACTIVITY",
                world.ledger.suite.params.required_bond_wei,
                0,
            ),
        )
        assert outcome.reject_reason is RenewalRejectReason.WRONG_BOND
