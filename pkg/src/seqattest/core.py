"""Quote and collateral domain types plus their canonical wire format.

Everything here is pure: no clock, no I/O, no ledger state. A quote binds a
code measurement and sequencer runtime metadata (block hash, height, state
root, L1 origin, timestamp, nonce, prover key) to a platform-certified
signing key. The verifier needs plaintext access to the metadata, so it is
carried in clear inside the quote body and additionally committed to by a
32-byte report-data digest.

Wire layout (little-endian integers, u16 length prefixes on variable
fields, zero padding up to a declared total length):

    offset  size  field
    0       1     version (3 or 4)
    1       1     attestation key type (0 = simulated ECDSA-P256)
    2       16    QE vendor id
    18      4     total length (u32, includes padding)
    22      32    mrenclave
    54      32    mrsigner
    86      2     isv_svn (u16)
    88      1     tcb status
    89      32    report data
    121     32    block hash
    153     8     block height (u64)
    161     32    state root
    193     32    l1 origin
    225     8     timestamp (u64, seconds)
    233     8     nonce (u64)
    241     ...   prover pubkey (u16 length + bytes)
    ...     ...   collateral ref (u16 length + utf-8 bytes)
    ...     ...   signature (u16 length + bytes)
    ...     ...   zero padding to total length

The signature covers the canonical concatenation of header, body, and
metadata fields (the layout above minus the total-length word, the
collateral ref, the signature itself, and padding).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import Optional

from . import crypto

__all__ = [
    "MIN_QUOTE_SIZE",
    "MAX_QUOTE_SIZE",
    "DEFAULT_QUOTE_SIZE",
    "QuoteVersion",
    "AttestationKeyType",
    "TcbStatus",
    "SequencerMetadata",
    "QuoteHeader",
    "ReportBody",
    "Quote",
    "PckCertificate",
    "CertRevocationList",
    "TcbInfo",
    "QeIdentity",
    "CollateralBundle",
    "PolicyView",
    "QuoteParseError",
    "QuoteParseErrorKind",
    "QuoteEncodeError",
    "compute_report_data",
    "canonical_signing_bytes",
    "serialize_quote",
    "parse_quote",
    "verify_quote_signature",
    "quote_hash",
]

MIN_QUOTE_SIZE = 512
MAX_QUOTE_SIZE = 10_240
DEFAULT_QUOTE_SIZE = 4_096

DIGEST_SIZE = 32
FMSPC_SIZE = 6
QE_VENDOR_ID_SIZE = 16

_U16_MAX = 0xFFFF
_U64_MAX = 0xFFFFFFFFFFFFFFFF

# Offsets of the fixed-size prelude (see module docstring).
_TOTAL_LEN_OFFSET = 18
_FIXED_PRELUDE_END = 241


class QuoteVersion(IntEnum):
    V3 = 3
    V4 = 4


class AttestationKeyType(IntEnum):
    ECDSA_P256_SIM = 0


class TcbStatus(str, Enum):
    """Platform security-patch level as reported by provisioning collateral."""

    UP_TO_DATE = "UpToDate"
    OUT_OF_DATE = "OutOfDate"
    REVOKED = "Revoked"
    CONFIGURATION_NEEDED = "ConfigurationNeeded"


_TCB_WIRE = {status: i for i, status in enumerate(TcbStatus)}
_TCB_FROM_WIRE = {i: status for status, i in _TCB_WIRE.items()}


class QuoteParseErrorKind(str, Enum):
    TRUNCATED = "Truncated"
    UNKNOWN_VERSION = "UnknownVersion"
    BAD_LENGTH_PREFIX = "BadLengthPrefix"
    BAD_FIELD = "BadField"


class QuoteParseError(Exception):
    """Typed parse failure; the only exception parse_quote may raise."""

    def __init__(self, kind: QuoteParseErrorKind, message: str) -> None:
        super().__init__(f"{kind.value}: {message}")
        self.kind = kind


class QuoteEncodeError(Exception):
    """Quote content does not fit the requested serialized size."""


def _check_digest(name: str, value: bytes) -> None:
    if not isinstance(value, bytes) or len(value) != DIGEST_SIZE:
        raise ValueError(f"{name} must be {DIGEST_SIZE} bytes")


def _check_u64(name: str, value: int) -> None:
    if not isinstance(value, int) or not 0 <= value <= _U64_MAX:
        raise ValueError(f"{name} must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class SequencerMetadata:
    """Runtime values the sequencer commits to in each quote.

    The nonce is strictly increasing per sequencer identity; the registry
    enforces that at verification time.
    """

    block_hash: bytes
    block_height: int
    state_root: bytes
    l1_origin: bytes
    timestamp: int
    nonce: int
    prover_pubkey: bytes

    def __post_init__(self) -> None:
        _check_digest("block_hash", self.block_hash)
        _check_digest("state_root", self.state_root)
        _check_digest("l1_origin", self.l1_origin)
        _check_u64("block_height", self.block_height)
        _check_u64("timestamp", self.timestamp)
        _check_u64("nonce", self.nonce)
        if not self.prover_pubkey or len(self.prover_pubkey) > _U16_MAX:
            raise ValueError("prover_pubkey must be 1..65535 bytes")


@dataclass(frozen=True)
class QuoteHeader:
    version: QuoteVersion
    attestation_key_type: AttestationKeyType = AttestationKeyType.ECDSA_P256_SIM
    qe_vendor_id: bytes = b"\x00" * QE_VENDOR_ID_SIZE

    def __post_init__(self) -> None:
        if len(self.qe_vendor_id) != QE_VENDOR_ID_SIZE:
            raise ValueError(f"qe_vendor_id must be {QE_VENDOR_ID_SIZE} bytes")


@dataclass(frozen=True)
class ReportBody:
    mrenclave: bytes
    mrsigner: bytes
    isv_svn: int
    tcb_status: TcbStatus
    report_data: bytes

    def __post_init__(self) -> None:
        _check_digest("mrenclave", self.mrenclave)
        _check_digest("mrsigner", self.mrsigner)
        _check_digest("report_data", self.report_data)
        if not 0 <= self.isv_svn <= _U16_MAX:
            raise ValueError("isv_svn must be an unsigned 16-bit integer")


@dataclass(frozen=True)
class Quote:
    """Signed attestation evidence. Padding is a serialization concern only."""

    header: QuoteHeader
    body: ReportBody
    metadata: SequencerMetadata
    collateral_ref: str
    signature: bytes

    def __post_init__(self) -> None:
        if len(self.collateral_ref.encode()) > _U16_MAX:
            raise ValueError("collateral_ref too long")
        if len(self.signature) > _U16_MAX:
            raise ValueError("signature too long")


@dataclass(frozen=True)
class PckCertificate:
    serial: str
    fmspc: bytes
    subject_pubkey: bytes
    issuer_id: str
    not_before: int
    not_after: int

    def __post_init__(self) -> None:
        if len(self.fmspc) != FMSPC_SIZE:
            raise ValueError(f"fmspc must be {FMSPC_SIZE} bytes")


@dataclass(frozen=True)
class CertRevocationList:
    issuer_id: str
    revoked_serials: frozenset
    issued_at: int


@dataclass(frozen=True)
class TcbInfo:
    fmspc: bytes
    status: TcbStatus
    next_update: int


@dataclass(frozen=True)
class QeIdentity:
    mrsigner: bytes
    min_isv_svn: int


@dataclass(frozen=True)
class CollateralBundle:
    """Snapshot of the verification material for one platform (fmspc)."""

    pck_cert: PckCertificate
    crl: CertRevocationList
    tcb_info: TcbInfo
    qe_identity: QeIdentity

    @property
    def pck_revoked(self) -> bool:
        return self.pck_cert.serial in self.crl.revoked_serials

    def to_json_dict(self) -> dict:
        return {
            "pck_cert": {
                "serial": self.pck_cert.serial,
                "fmspc": self.pck_cert.fmspc.hex(),
                "subject_pubkey": self.pck_cert.subject_pubkey.hex(),
                "issuer_id": self.pck_cert.issuer_id,
                "not_before": self.pck_cert.not_before,
                "not_after": self.pck_cert.not_after,
            },
            "crl": {
                "issuer_id": self.crl.issuer_id,
                "revoked_serials": sorted(self.crl.revoked_serials),
                "issued_at": self.crl.issued_at,
            },
            "tcb_info": {
                "fmspc": self.tcb_info.fmspc.hex(),
                "status": self.tcb_info.status.value,
                "next_update": self.tcb_info.next_update,
            },
            "qe_identity": {
                "mrsigner": self.qe_identity.mrsigner.hex(),
                "min_isv_svn": self.qe_identity.min_isv_svn,
            },
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "CollateralBundle":
        cert = data["pck_cert"]
        crl = data["crl"]
        tcb = data["tcb_info"]
        qe = data["qe_identity"]
        return cls(
            pck_cert=PckCertificate(
                serial=cert["serial"],
                fmspc=bytes.fromhex(cert["fmspc"]),
                subject_pubkey=bytes.fromhex(cert["subject_pubkey"]),
                issuer_id=cert["issuer_id"],
                not_before=cert["not_before"],
                not_after=cert["not_after"],
            ),
            crl=CertRevocationList(
                issuer_id=crl["issuer_id"],
                revoked_serials=frozenset(crl["revoked_serials"]),
                issued_at=crl["issued_at"],
            ),
            tcb_info=TcbInfo(
                fmspc=bytes.fromhex(tcb["fmspc"]),
                status=TcbStatus(tcb["status"]),
                next_update=tcb["next_update"],
            ),
            qe_identity=QeIdentity(
                mrsigner=bytes.fromhex(qe["mrsigner"]),
                min_isv_svn=qe["min_isv_svn"],
            ),
        )


@dataclass(frozen=True)
class PolicyView:
    """What the on-chain verifier accepts. UpToDate is always accepted."""

    expected_mrenclave: bytes
    expected_mrsigner: bytes
    min_isv_svn: int
    accepted_tcb_statuses: frozenset
    freshness_drift: int
    validity_window: int

    def __post_init__(self) -> None:
        _check_digest("expected_mrenclave", self.expected_mrenclave)
        _check_digest("expected_mrsigner", self.expected_mrsigner)
        object.__setattr__(
            self,
            "accepted_tcb_statuses",
            frozenset(self.accepted_tcb_statuses) | {TcbStatus.UP_TO_DATE},
        )
        if self.freshness_drift < 0 or self.validity_window <= 0:
            raise ValueError("freshness_drift must be >= 0 and validity_window > 0")


def _lp32(data: bytes) -> bytes:
    return struct.pack("<I", len(data)) + data


def compute_report_data(meta: SequencerMetadata) -> bytes:
    """Commitment to the metadata: sha256 over length-prefixed fields.

    Fields are concatenated in declaration order, each prefixed with its
    u32 byte length; integers are encoded as u64 little-endian. Any
    single-field change alters the digest.
    """
    buf = (
        _lp32(meta.block_hash)
        + _lp32(struct.pack("<Q", meta.block_height))
        + _lp32(meta.state_root)
        + _lp32(meta.l1_origin)
        + _lp32(struct.pack("<Q", meta.timestamp))
        + _lp32(struct.pack("<Q", meta.nonce))
        + _lp32(meta.prover_pubkey)
    )
    return crypto.sha256(buf)


def _encode_header_prefix(header: QuoteHeader) -> bytes:
    return (
        struct.pack("<BB", int(header.version), int(header.attestation_key_type))
        + header.qe_vendor_id
    )


def _encode_body_and_metadata(body: ReportBody, meta: SequencerMetadata) -> bytes:
    return (
        body.mrenclave
        + body.mrsigner
        + struct.pack("<HB", body.isv_svn, _TCB_WIRE[body.tcb_status])
        + body.report_data
        + meta.block_hash
        + struct.pack("<Q", meta.block_height)
        + meta.state_root
        + meta.l1_origin
        + struct.pack("<QQ", meta.timestamp, meta.nonce)
        + struct.pack("<H", len(meta.prover_pubkey))
        + meta.prover_pubkey
    )


def canonical_signing_bytes(
    header: QuoteHeader, body: ReportBody, meta: SequencerMetadata
) -> bytes:
    """The exact bytes an attestation key signs: header || body || metadata."""
    return _encode_header_prefix(header) + _encode_body_and_metadata(body, meta)


def serialize_quote(quote: Quote, pad_to: Optional[int] = None) -> bytes:
    """Encode a quote, zero-padding to ``pad_to`` (at least MIN_QUOTE_SIZE).

    With ``pad_to=None`` the output is padded only up to the mandatory
    minimum. Raises QuoteEncodeError when the content cannot fit the
    requested or maximum size.
    """
    ref = quote.collateral_ref.encode()
    content = (
        _encode_header_prefix(quote.header)
        + b"\x00\x00\x00\x00"  # total length backfilled below
        + _encode_body_and_metadata(quote.body, quote.metadata)
        + struct.pack("<H", len(ref))
        + ref
        + struct.pack("<H", len(quote.signature))
        + quote.signature
    )
    total = max(len(content), MIN_QUOTE_SIZE)
    if pad_to is not None:
        if pad_to > MAX_QUOTE_SIZE:
            raise QuoteEncodeError(f"pad target {pad_to} exceeds {MAX_QUOTE_SIZE}")
        if len(content) > pad_to:
            raise QuoteEncodeError(
                f"content ({len(content)} bytes) exceeds pad target {pad_to}"
            )
        total = max(total, pad_to)
    if total > MAX_QUOTE_SIZE:
        raise QuoteEncodeError(f"quote content exceeds {MAX_QUOTE_SIZE} bytes")
    out = bytearray(content)
    out[_TOTAL_LEN_OFFSET : _TOTAL_LEN_OFFSET + 4] = struct.pack("<I", total)
    out.extend(b"\x00" * (total - len(content)))
    return bytes(out)


class _Reader:
    def __init__(self, data: bytes, limit: int) -> None:
        self._data = data
        self._limit = limit
        self._pos = _FIXED_PRELUDE_END

    def take(self, n: int, what: str) -> bytes:
        if self._pos + n > self._limit:
            raise QuoteParseError(
                QuoteParseErrorKind.BAD_LENGTH_PREFIX,
                f"{what} extends past declared quote length",
            )
        chunk = self._data[self._pos : self._pos + n]
        self._pos += n
        return chunk

    def take_lp16(self, what: str) -> bytes:
        (length,) = struct.unpack("<H", self.take(2, f"{what} length"))
        return self.take(length, what)


def parse_quote(data: bytes) -> Quote:
    """Decode quote bytes; total over arbitrary input.

    Raises QuoteParseError and nothing else: Truncated for short input,
    UnknownVersion for an unrecognized version byte, BadLengthPrefix for
    inconsistent framing, BadField for out-of-range field encodings.
    """
    if len(data) == 0:
        raise QuoteParseError(QuoteParseErrorKind.TRUNCATED, "empty input")
    version_byte = data[0]
    if version_byte not in (QuoteVersion.V3, QuoteVersion.V4):
        raise QuoteParseError(
            QuoteParseErrorKind.UNKNOWN_VERSION, f"version byte {version_byte}"
        )
    if len(data) < _TOTAL_LEN_OFFSET + 4:
        raise QuoteParseError(QuoteParseErrorKind.TRUNCATED, "header incomplete")
    ak_byte = data[1]
    if ak_byte != AttestationKeyType.ECDSA_P256_SIM:
        raise QuoteParseError(
            QuoteParseErrorKind.BAD_FIELD, f"attestation key type {ak_byte}"
        )
    qe_vendor_id = data[2:_TOTAL_LEN_OFFSET]
    (total,) = struct.unpack("<I", data[_TOTAL_LEN_OFFSET : _TOTAL_LEN_OFFSET + 4])
    if total < MIN_QUOTE_SIZE or total > MAX_QUOTE_SIZE:
        raise QuoteParseError(
            QuoteParseErrorKind.BAD_LENGTH_PREFIX,
            f"declared length {total} outside [{MIN_QUOTE_SIZE}, {MAX_QUOTE_SIZE}]",
        )
    if len(data) < total:
        raise QuoteParseError(
            QuoteParseErrorKind.TRUNCATED,
            f"declared length {total}, got {len(data)} bytes",
        )
    if len(data) > total:
        raise QuoteParseError(
            QuoteParseErrorKind.BAD_LENGTH_PREFIX,
            f"{len(data) - total} trailing bytes past declared length",
        )

    mrenclave = data[22:54]
    mrsigner = data[54:86]
    (isv_svn,) = struct.unpack("<H", data[86:88])
    tcb_byte = data[88]
    if tcb_byte not in _TCB_FROM_WIRE:
        raise QuoteParseError(QuoteParseErrorKind.BAD_FIELD, f"tcb status {tcb_byte}")
    report_data = data[89:121]
    block_hash = data[121:153]
    (block_height,) = struct.unpack("<Q", data[153:161])
    state_root = data[161:193]
    l1_origin = data[193:225]
    timestamp, nonce = struct.unpack("<QQ", data[225:241])

    reader = _Reader(data, total)
    prover_pubkey = reader.take_lp16("prover pubkey")
    collateral_ref_bytes = reader.take_lp16("collateral ref")
    signature = reader.take_lp16("signature")

    try:
        return Quote(
            header=QuoteHeader(
                version=QuoteVersion(version_byte),
                attestation_key_type=AttestationKeyType(ak_byte),
                qe_vendor_id=qe_vendor_id,
            ),
            body=ReportBody(
                mrenclave=mrenclave,
                mrsigner=mrsigner,
                isv_svn=isv_svn,
                tcb_status=_TCB_FROM_WIRE[tcb_byte],
                report_data=report_data,
            ),
            metadata=SequencerMetadata(
                block_hash=block_hash,
                block_height=block_height,
                state_root=state_root,
                l1_origin=l1_origin,
                timestamp=timestamp,
                nonce=nonce,
                prover_pubkey=prover_pubkey,
            ),
            collateral_ref=collateral_ref_bytes.decode("utf-8", errors="strict"),
            signature=signature,
        )
    except (ValueError, UnicodeDecodeError) as exc:
        raise QuoteParseError(QuoteParseErrorKind.BAD_FIELD, str(exc)) from exc


def verify_quote_signature(quote: Quote, signer_pubkey: bytes) -> bool:
    """True iff the signature is valid over the canonical quote bytes."""
    message = canonical_signing_bytes(quote.header, quote.body, quote.metadata)
    return crypto.verify(signer_pubkey, message, quote.signature)


def quote_hash(quote_bytes: bytes) -> bytes:
    """Registry identifier for a submitted quote: sha256 of the wire bytes."""
    return crypto.sha256(quote_bytes)
