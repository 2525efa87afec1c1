"""Simulated provisioning certification service.

The root of trust for platform certificates. Issues PCK certificates,
maintains a monotone CRL (serials are never un-revoked), tracks TCB status
per platform, and hands out internally consistent collateral snapshots.
Deliberately centralized; the simulated outage flag is the only failure
mode. Collateral is re-fetched and re-stored on-chain at every quote
submission, so revocations and TCB downgrades take effect at the next
attestation attempt.
"""

from __future__ import annotations

from typing import Dict, Optional

from . import crypto
from .core import (
    CertRevocationList,
    CollateralBundle,
    PckCertificate,
    QeIdentity,
    TcbInfo,
    TcbStatus,
)

__all__ = [
    "CERT_LIFETIME_S",
    "PcsError",
    "PcsUnavailable",
    "UnknownSerial",
    "UnknownFmspc",
    "PcsService",
]

CERT_LIFETIME_S = 30 * 86_400


class PcsError(Exception):
    pass


class PcsUnavailable(PcsError):
    """Raised while the simulated outage flag is set."""


class UnknownSerial(PcsError):
    pass


class UnknownFmspc(PcsError):
    pass


class PcsService:
    def __init__(
        self,
        *,
        vendor_mrsigner: bytes,
        qe_min_isv_svn: int = 1,
        cert_lifetime_s: int = CERT_LIFETIME_S,
        root_seed: bytes = b"pcs-root",
    ) -> None:
        self.root_key = crypto.KeyPair.from_seed(root_seed)
        self.root_id = "pcs-root-" + crypto.sha256(self.root_key.public_bytes)[:4].hex()
        self.cert_lifetime_s = cert_lifetime_s
        self.outage = False
        self._qe_identity = QeIdentity(mrsigner=vendor_mrsigner, min_isv_svn=qe_min_isv_svn)
        self._issued: Dict[str, PckCertificate] = {}
        self._latest_by_fmspc: Dict[bytes, str] = {}
        self._revoked: set = set()
        self._crl_issued_at = 0
        self._tcb_by_fmspc: Dict[bytes, TcbInfo] = {}
        self._serial_counter = 0

    def _require_online(self) -> None:
        if self.outage:
            raise PcsUnavailable("provisioning service outage")

    def issue_pck(self, fmspc: bytes, subject_pubkey: bytes, now: int) -> PckCertificate:
        """Certify a platform key; serials are unique and never reused."""
        self._require_online()
        self._serial_counter += 1
        cert = PckCertificate(
            serial=f"pck-{self._serial_counter:06d}",
            fmspc=fmspc,
            subject_pubkey=subject_pubkey,
            issuer_id=self.root_id,
            not_before=now,
            not_after=now + self.cert_lifetime_s,
        )
        self._issued[cert.serial] = cert
        self._latest_by_fmspc[fmspc] = cert.serial
        self._tcb_by_fmspc.setdefault(
            fmspc,
            TcbInfo(fmspc=fmspc, status=TcbStatus.UP_TO_DATE, next_update=now + self.cert_lifetime_s),
        )
        return cert

    def revoke(self, serial: str, now: int) -> CertRevocationList:
        """Add a serial to the CRL; idempotent, never undone."""
        if serial not in self._issued:
            raise UnknownSerial(serial)
        self._revoked.add(serial)
        self._crl_issued_at = now
        return self.current_crl()

    def set_tcb_status(self, fmspc: bytes, status: TcbStatus, now: int) -> TcbInfo:
        info = TcbInfo(fmspc=fmspc, status=status, next_update=now + self.cert_lifetime_s)
        self._tcb_by_fmspc[fmspc] = info
        return info

    def current_crl(self) -> CertRevocationList:
        return CertRevocationList(
            issuer_id=self.root_id,
            revoked_serials=frozenset(self._revoked),
            issued_at=self._crl_issued_at,
        )

    def cert(self, serial: str) -> Optional[PckCertificate]:
        return self._issued.get(serial)

    def get_collateral(self, fmspc: bytes) -> CollateralBundle:
        """Consistent snapshot of cert + CRL + TCB + QE identity for a platform."""
        self._require_online()
        serial = self._latest_by_fmspc.get(fmspc)
        tcb = self._tcb_by_fmspc.get(fmspc)
        if serial is None and tcb is None:
            raise UnknownFmspc(fmspc.hex())
        if serial is None:
            raise UnknownFmspc(f"{fmspc.hex()} has TCB info but no issued certificate")
        return CollateralBundle(
            pck_cert=self._issued[serial],
            crl=self.current_crl(),
            tcb_info=tcb,
            qe_identity=self._qe_identity,
        )
