"""Shared fixtures: a deployed ledger with a provisioned enclave."""

from __future__ import annotations

from types import SimpleNamespace

import pytest

from seqattest.core import PolicyView, TcbStatus, serialize_quote
from seqattest.enclave import measure_and_boot, provision
from seqattest.onchain import (
    GENESIS_TIME,
    Ledger,
    SuiteParams,
    deploy_attestation_suite,
    store_collateral,
)
from seqattest.pcs import PcsService
from seqattest.rollup import collect_metadata, genesis_block, SequencerNode
from seqattest.enclave import generate_quote

ETH = 10**18
SEQ = "sequencer-0"
VALIDATOR = "validator-0"

TEST_IMAGE = b"test-sequencer-image-1"


def build_world(*, whitelist=(VALIDATOR,), validity_window=1_200, freshness_drift=60):
    enclave = measure_and_boot(TEST_IMAGE)
    pcs = PcsService(vendor_mrsigner=enclave.mrsigner)
    provision(enclave, pcs, GENESIS_TIME)
    policy = PolicyView(
        expected_mrenclave=enclave.mrenclave,
        expected_mrsigner=enclave.mrsigner,
        min_isv_svn=1,
        accepted_tcb_statuses=frozenset({TcbStatus.UP_TO_DATE}),
        freshness_drift=freshness_drift,
        validity_window=validity_window,
    )
    ledger = Ledger(
        genesis_accounts={
            "deployer": 10 * ETH,
            SEQ: 10 * ETH,
            VALIDATOR: 1 * ETH,
        }
    )
    deploy_attestation_suite(
        ledger,
        SuiteParams(policy=policy, whitelist=frozenset(whitelist)),
    )
    node = SequencerNode(
        address=SEQ,
        enclave=enclave,
        head=genesis_block(ledger.latest_block_hash, ledger.block_time),
    )
    return SimpleNamespace(
        enclave=enclave, pcs=pcs, policy=policy, ledger=ledger, node=node
    )


def make_quote_bytes(world, *, height=None, l1_origin=None, pad=4_096, store=True):
    """Generate a submittable quote for the world's enclave at ledger time."""
    ledger = world.ledger
    now = ledger.block_time
    if store:
        store_collateral(ledger, world.pcs.get_collateral(world.enclave.fmspc))
    node = world.node
    from seqattest.rollup import candidate_block

    pending = candidate_block(node, ledger, now)
    meta = collect_metadata(node, pending, now)
    if height is not None:
        from dataclasses import replace

        meta = replace(meta, block_height=height)
    if l1_origin is not None:
        from dataclasses import replace

        meta = replace(meta, l1_origin=l1_origin)
    quote = generate_quote(world.enclave, meta, now)
    return serialize_quote(quote, pad_to=pad)


@pytest.fixture
def world():
    return build_world()
