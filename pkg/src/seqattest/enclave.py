"""Simulated TEE runtime for the sequencer.

An enclave is measured at boot (mrenclave = hash of the code image),
provisioned with an attestation key whose public half gets certified by the
provisioning service, and then produces quotes over sequencer metadata.
Tamper modes let adversarial scenarios produce specific defects; a
compromised host can observe whatever it wants but can never alter quote
contents, which is the property the verifier suite relies on.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

from . import crypto
from .core import (
    AttestationKeyType,
    Quote,
    QuoteHeader,
    QuoteVersion,
    ReportBody,
    SequencerMetadata,
    TcbStatus,
    canonical_signing_bytes,
    compute_report_data,
)

__all__ = [
    "STALE_OFFSET_S",
    "TamperMode",
    "Enclave",
    "EnclaveError",
    "EmptyImage",
    "Unprovisioned",
    "measure_and_boot",
    "provision",
    "generate_quote",
    "derive_mrsigner",
    "derive_fmspc",
]

# Stale quotes lag real time by this much; far beyond any sane freshness
# drift so the verifier is guaranteed to reject them.
STALE_OFFSET_S = 3_600

QE_VENDOR_ID = crypto.sha256(b"simulated-qe-vendor")[:16]


class TamperMode(Enum):
    NONE = "None"
    WRONG_MEASUREMENT = "WrongMeasurement"
    STALE_TIMESTAMP = "StaleTimestamp"
    REUSE_NONCE = "ReuseNonce"
    FORGE_SIGNATURE = "ForgeSignature"
    COMPROMISED_HOST = "CompromisedHost"


class EnclaveError(Exception):
    pass


class EmptyImage(EnclaveError):
    pass


class Unprovisioned(EnclaveError):
    pass


def derive_mrsigner(vendor_seed: str) -> bytes:
    return crypto.sha256(b"vendor-signing-identity:" + vendor_seed.encode())


def derive_fmspc(platform_seed: str) -> bytes:
    return crypto.sha256(b"platform-fmspc:" + platform_seed.encode())[:6]


@dataclass
class Enclave:
    code_image: bytes
    mrenclave: bytes
    mrsigner: bytes
    isv_svn: int
    fmspc: bytes
    tamper_mode: TamperMode = TamperMode.NONE
    attestation_keypair: Optional[crypto.KeyPair] = None
    pck_cert_ref: Optional[str] = None
    provision_count: int = 0
    _nonce_counter: int = field(default=0, repr=False)
    _last_quoted_nonce: Optional[int] = field(default=None, repr=False)

    @property
    def provisioned(self) -> bool:
        return self.attestation_keypair is not None

    @property
    def prover_pubkey(self) -> bytes:
        if self.attestation_keypair is None:
            raise Unprovisioned("enclave has no attestation key yet")
        return self.attestation_keypair.public_bytes

    def allocate_nonce(self) -> int:
        """Hand out the next metadata nonce (consumed, strictly increasing)."""
        self._nonce_counter += 1
        return self._nonce_counter


def measure_and_boot(
    code_image: bytes,
    *,
    vendor_seed: str = "vendor-0",
    platform_seed: str = "platform-0",
    isv_svn: int = 1,
) -> Enclave:
    """Measure a code image and return an unprovisioned enclave."""
    if not code_image:
        raise EmptyImage("cannot boot an empty code image")
    return Enclave(
        code_image=code_image,
        mrenclave=crypto.sha256(code_image),
        mrsigner=derive_mrsigner(vendor_seed),
        isv_svn=isv_svn,
        fmspc=derive_fmspc(platform_seed),
    )


def provision(enclave: Enclave, pcs, now: int) -> Enclave:
    """Install a fresh attestation key and have the PCS certify it.

    Calling again rotates the key and records the new certificate serial;
    previously issued serials stay valid until explicitly revoked.
    """
    enclave.provision_count += 1
    seed = b"attestation-key:" + enclave.fmspc + enclave.provision_count.to_bytes(4, "little")
    keypair = crypto.KeyPair.from_seed(seed)
    cert = pcs.issue_pck(enclave.fmspc, keypair.public_bytes, now)
    enclave.attestation_keypair = keypair
    enclave.pck_cert_ref = cert.serial
    return enclave


def _forged_signature(message: bytes) -> bytes:
    # Deterministic garbage so adversarial traces stay reproducible; fails
    # verification with overwhelming probability.
    half = crypto.sha256(b"forged-signature:" + message)
    return half + crypto.sha256(half)


def generate_quote(
    enclave: Enclave,
    meta: SequencerMetadata,
    now: int,
    *,
    version: QuoteVersion = QuoteVersion.V4,
) -> Quote:
    """Produce a quote over the given metadata at simulated time ``now``.

    Honest mode stamps the quote with the current time and expects a fresh
    nonce from the enclave's own counter. Tamper modes inject exactly one
    defect each; a compromised host yields a byte-identical honest quote.
    """
    if enclave.attestation_keypair is None or enclave.pck_cert_ref is None:
        raise Unprovisioned("provision the enclave before quoting")

    mode = enclave.tamper_mode
    timestamp = now
    if mode is TamperMode.STALE_TIMESTAMP:
        timestamp = max(0, now - STALE_OFFSET_S)

    nonce = meta.nonce
    if mode is TamperMode.REUSE_NONCE and enclave._last_quoted_nonce is not None:
        nonce = enclave._last_quoted_nonce
    elif enclave._last_quoted_nonce is not None and nonce <= enclave._last_quoted_nonce:
        raise EnclaveError(
            f"nonce {nonce} not fresh (last quoted {enclave._last_quoted_nonce})"
        )

    meta = replace(meta, timestamp=timestamp, nonce=nonce)

    mrenclave = enclave.mrenclave
    if mode is TamperMode.WRONG_MEASUREMENT:
        mrenclave = mrenclave[:-1] + bytes([mrenclave[-1] ^ 0x01])

    header = QuoteHeader(
        version=version,
        attestation_key_type=AttestationKeyType.ECDSA_P256_SIM,
        qe_vendor_id=QE_VENDOR_ID,
    )
    body = ReportBody(
        mrenclave=mrenclave,
        mrsigner=enclave.mrsigner,
        isv_svn=enclave.isv_svn,
        tcb_status=TcbStatus.UP_TO_DATE,
        report_data=compute_report_data(meta),
    )
    message = canonical_signing_bytes(header, body, meta)
    if mode is TamperMode.FORGE_SIGNATURE:
        signature = _forged_signature(message)
    else:
        signature = enclave.attestation_keypair.sign(message)

    enclave._last_quoted_nonce = nonce
    return Quote(
        header=header,
        body=body,
        metadata=meta,
        collateral_ref=enclave.pck_cert_ref,
        signature=signature,
    )
