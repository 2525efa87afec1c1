#!/usr/bin/env python3
"""Regenerate the golden fixtures under fixtures/.

Everything is derived from fixed seeds, so rerunning this script must be a
no-op on a clean checkout; the test suite enforces that.
"""

from __future__ import annotations

import json
from pathlib import Path

from seqattest.core import SequencerMetadata, compute_report_data, serialize_quote
from seqattest.crypto import sha256
from seqattest.enclave import TamperMode, generate_quote, measure_and_boot, provision
from seqattest.onchain import GENESIS_TIME
from seqattest.pcs import PcsService
from seqattest.simnet import SEQUENCER_CODE_IMAGE

ROOT = Path(__file__).resolve().parent.parent / "fixtures"

FIXTURE_NOW = GENESIS_TIME + 100
L1_GENESIS_HASH = sha256(b"l1-genesis")


def fresh_enclave_and_pcs():
    enclave = measure_and_boot(SEQUENCER_CODE_IMAGE)
    pcs = PcsService(vendor_mrsigner=enclave.mrsigner)
    provision(enclave, pcs, GENESIS_TIME)
    return enclave, pcs


def fixture_metadata(enclave) -> SequencerMetadata:
    return SequencerMetadata(
        block_hash=sha256(b"fixture-l2-block-1"),
        block_height=1,
        state_root=sha256(b"fixture-state-root-1"),
        l1_origin=L1_GENESIS_HASH,
        timestamp=FIXTURE_NOW,
        nonce=enclave.allocate_nonce(),
        prover_pubkey=enclave.prover_pubkey,
    )


def main() -> None:
    (ROOT / "quotes").mkdir(parents=True, exist_ok=True)
    (ROOT / "collateral").mkdir(parents=True, exist_ok=True)
    (ROOT / "policy").mkdir(parents=True, exist_ok=True)

    enclave, pcs = fresh_enclave_and_pcs()
    honest = generate_quote(enclave, fixture_metadata(enclave), FIXTURE_NOW)
    (ROOT / "quotes" / "honest.bin").write_bytes(serialize_quote(honest, pad_to=4096))

    enclave2, pcs2 = fresh_enclave_and_pcs()
    enclave2.tamper_mode = TamperMode.FORGE_SIGNATURE
    forged = generate_quote(enclave2, fixture_metadata(enclave2), FIXTURE_NOW)
    (ROOT / "quotes" / "forged_sig.bin").write_bytes(serialize_quote(forged, pad_to=4096))

    bundle = pcs.get_collateral(enclave.fmspc)
    with (ROOT / "collateral" / "collateral.json").open("w") as fh:
        json.dump(bundle.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")

    pcs2.revoke(enclave2.pck_cert_ref, FIXTURE_NOW)
    revoked = pcs2.get_collateral(enclave2.fmspc)
    with (ROOT / "collateral" / "collateral_revoked.json").open("w") as fh:
        json.dump(revoked.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")

    policy = {
        "expected_mrenclave": enclave.mrenclave.hex(),
        "expected_mrsigner": enclave.mrsigner.hex(),
        "min_isv_svn": 1,
        "accepted_tcb_statuses": ["UpToDate"],
        "freshness_drift_s": 60,
        "validity_window_blocks": 1200,
        "now_s": FIXTURE_NOW,
        "last_nonce": 0,
        "last_attested_height": None,
        "known_l1_origins": [L1_GENESIS_HASH.hex()],
    }
    with (ROOT / "policy" / "policy.json").open("w") as fh:
        json.dump(policy, fh, indent=2, sort_keys=True)
        fh.write("\n")

    # Reference vector for the report-data commitment, frozen from an
    # independent reference implementation of the layout.
    golden_meta = SequencerMetadata(
        block_hash=bytes(range(32)),
        block_height=7,
        state_root=bytes(range(32, 64)),
        l1_origin=bytes(range(64, 96)),
        timestamp=1_700_000_123,
        nonce=42,
        prover_pubkey=bytes.fromhex("04" + "ab" * 64),
    )
    golden = {
        "metadata": {
            "block_hash": golden_meta.block_hash.hex(),
            "block_height": golden_meta.block_height,
            "state_root": golden_meta.state_root.hex(),
            "l1_origin": golden_meta.l1_origin.hex(),
            "timestamp": golden_meta.timestamp,
            "nonce": golden_meta.nonce,
            "prover_pubkey": golden_meta.prover_pubkey.hex(),
        },
        "report_data": compute_report_data(golden_meta).hex(),
    }
    with (ROOT / "report_data_golden.json").open("w") as fh:
        json.dump(golden, fh, indent=2, sort_keys=True)
        fh.write("\n")

    print(f"fixtures written under {ROOT}")


if __name__ == "__main__":
    main()
