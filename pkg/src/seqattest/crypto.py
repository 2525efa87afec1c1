"""Deterministic signing primitives.

Attestation keys are ECDSA over P-256 with RFC 6979 deterministic nonces,
so a fixed (key, message) pair always yields identical signature bytes and
simulation traces stay byte-reproducible. Signatures travel as raw
``r || s`` (64 bytes); public keys as X9.62 uncompressed points (65 bytes).
"""

from __future__ import annotations

import hashlib

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.asymmetric import ec
from cryptography.hazmat.primitives.asymmetric.utils import (
    decode_dss_signature,
    encode_dss_signature,
)
from cryptography.hazmat.primitives.serialization import Encoding, PublicFormat

_CURVE = ec.SECP256R1()
# Group order of P-256; scalars must be in [1, order - 1].
_CURVE_ORDER = 0xFFFFFFFF00000000FFFFFFFFFFFFFFFFBCE6FAADA7179E84F3B9CAC2FC632551

SIGNATURE_SIZE = 64
PUBLIC_KEY_SIZE = 65

_SIG_ALGO = ec.ECDSA(hashes.SHA256(), deterministic_signing=True)


def _seed_to_scalar(seed: bytes) -> int:
    """Hash a seed into a nonzero scalar, re-hashing on the (negligible) miss."""
    counter = 0
    while True:
        digest = hashlib.sha256(seed + counter.to_bytes(4, "little")).digest()
        scalar = int.from_bytes(digest, "big") % _CURVE_ORDER
        if scalar != 0:
            return scalar
        counter += 1


class KeyPair:
    """An attestation signing key with a stable wire-format public key."""

    def __init__(self, private_key: ec.EllipticCurvePrivateKey) -> None:
        self._private_key = private_key
        self._public_bytes = private_key.public_key().public_bytes(
            Encoding.X962, PublicFormat.UncompressedPoint
        )

    @classmethod
    def from_seed(cls, seed: bytes) -> "KeyPair":
        return cls(ec.derive_private_key(_seed_to_scalar(seed), _CURVE))

    @property
    def public_bytes(self) -> bytes:
        return self._public_bytes

    def sign(self, message: bytes) -> bytes:
        der = self._private_key.sign(message, _SIG_ALGO)
        r, s = decode_dss_signature(der)
        return r.to_bytes(32, "big") + s.to_bytes(32, "big")


def verify(public_bytes: bytes, message: bytes, signature: bytes) -> bool:
    """Check a raw r||s signature; malformed inputs verify as False."""
    if len(signature) != SIGNATURE_SIZE:
        return False
    try:
        public_key = ec.EllipticCurvePublicKey.from_encoded_point(_CURVE, public_bytes)
        r = int.from_bytes(signature[:32], "big")
        s = int.from_bytes(signature[32:], "big")
        public_key.verify(encode_dss_signature(r, s), message, ec.ECDSA(hashes.SHA256()))
        return True
    except (InvalidSignature, ValueError):
        return False


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()
