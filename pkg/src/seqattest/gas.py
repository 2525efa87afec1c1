"""Calibrated gas-cost model for the attestation contract suite.

Three cost groups, reproduced exactly from the reference deployment
measurements:

* one-time deployment cost per contract (ten contracts),
* recurring per-attestation costs as a two-transaction split
  (verify-and-attest at the 4 KiB reference quote size, plus registering a
  quote verifier),
* total verification gas as a function of quote size, calibrated at seven
  points from 512 B to 10 KiB with linear interpolation in between.

The size curve's 4 KiB total (12,690,007) and the two-transaction split
total (12,558,394) disagree by 131,613 gas in the source measurements; both
are kept verbatim rather than reconciled. Ledger charging for quote
submission follows the size curve; the split is exposed separately.

Fee figures (GWei) are carried as metadata only; all accounting is in gas
units.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Mapping, Tuple

__all__ = [
    "GasError",
    "SizeOutOfRange",
    "GasModel",
    "DEPLOY_COSTS",
    "DEPLOY_TOTAL_GAS",
    "SET_VERIFIER_GAS",
    "ATTEST_TX_GAS_4KB",
    "RECURRING_TOTAL_GAS_4KB",
    "VERIFY_GAS_POINTS",
    "verify_gas",
]


class GasError(Exception):
    pass


class SizeOutOfRange(GasError):
    pass


# (contract, deploy gas, observed fee in GWei, role)
DEPLOY_TABLE: Tuple[Tuple[str, int, float, str], ...] = (
    ("PCCS Router", 2_352_196, 13.77, "Manages access to collaterals"),
    ("DCAP Attestation", 3_296_655, 12.21, "Entry point contract to submit a quote"),
    ("V3 Verifier", 3_696_655, 7.56, "Verifies V3 quotes"),
    ("V4 Verifier", 4_650_134, 12.79, "Verifies V4 quotes"),
    ("PCS DAO", 2_014_168, 9.77, "Manages provisioning service certificates"),
    ("PCK DAO", 2_928_849, 16.22, "Stores PCK keys"),
    ("FMSPC TCB DAO", 2_339_367, 33.11, "Manages TCB status"),
    ("Enclave ID DAO", 1_693_126, 30.48, "Manages enclave identities"),
    ("DAO Storage", 438_565, 27.93, "Stores attestation data"),
    ("Verification", 322_250, 26.12, "Checks sequencer attestation"),
)

DEPLOY_COSTS: Mapping[str, int] = {name: gas for name, gas, _, _ in DEPLOY_TABLE}
DEPLOY_TOTAL_GAS = 23_731_965
assert sum(DEPLOY_COSTS.values()) == DEPLOY_TOTAL_GAS

# Recurring two-transaction split, measured at the 4 KiB reference size.
ATTEST_TX_GAS_4KB = 8_014_059
SET_VERIFIER_GAS = 4_544_335
RECURRING_TOTAL_GAS_4KB = 12_558_394
assert ATTEST_TX_GAS_4KB + SET_VERIFIER_GAS == RECURRING_TOTAL_GAS_4KB

# (quote size in bytes, total verification gas, observed fee in GWei)
VERIFY_GAS_TABLE: Tuple[Tuple[int, int, float], ...] = (
    (512, 8_636_467, 14.03),
    (1_024, 9_136_467, 14.20),
    (2_048, 10_407_443, 14.15),
    (4_096, 12_690_007, 15.12),
    (6_144, 13_820_092, 14.60),
    (8_192, 14_550_541, 15.50),
    (10_240, 15_199_581, 17.40),
)

VERIFY_GAS_POINTS: Tuple[Tuple[int, int], ...] = tuple(
    (size, gas) for size, gas, _ in VERIFY_GAS_TABLE
)

MIN_CALIBRATED_SIZE = VERIFY_GAS_POINTS[0][0]
MAX_CALIBRATED_SIZE = VERIFY_GAS_POINTS[-1][0]


@dataclass(frozen=True)
class GasModel:
    """Gas charges used by the on-chain suite. Defaults are the calibrated tables."""

    deploy_costs: Mapping[str, int] = field(default_factory=lambda: dict(DEPLOY_COSTS))
    set_verifier_cost: int = SET_VERIFIER_GAS
    attest_tx_cost_4kb: int = ATTEST_TX_GAS_4KB
    verify_cost_points: Tuple[Tuple[int, int], ...] = VERIFY_GAS_POINTS

    def __post_init__(self) -> None:
        sizes = [s for s, _ in self.verify_cost_points]
        gases = [g for _, g in self.verify_cost_points]
        if sizes != sorted(sizes) or len(set(sizes)) != len(sizes):
            raise ValueError("verify_cost_points sizes must be strictly increasing")
        if gases != sorted(gases):
            raise ValueError("verify_cost_points must be monotone nondecreasing in size")

    def deploy_total(self) -> int:
        return sum(self.deploy_costs.values())

    def verify_gas(self, quote_size_bytes: int) -> int:
        """Verification gas for a quote of the given serialized size.

        Exact at calibration points; linear interpolation between adjacent
        points; raises SizeOutOfRange outside the calibrated span.
        """
        points = self.verify_cost_points
        lo, hi = points[0][0], points[-1][0]
        if not lo <= quote_size_bytes <= hi:
            raise SizeOutOfRange(
                f"quote size {quote_size_bytes} outside calibrated range [{lo}, {hi}]"
            )
        for (s0, g0), (s1, g1) in zip(points, points[1:]):
            if s0 <= quote_size_bytes <= s1:
                return g0 + (g1 - g0) * (quote_size_bytes - s0) // (s1 - s0)
        raise AssertionError("unreachable: size within bounds but no segment matched")

    def recurring_split(self) -> Dict[str, int]:
        """The two recurring attestation transactions at the 4 KiB reference size."""
        return {
            "verify_and_attest": self.attest_tx_cost_4kb,
            "set_quote_verifier": self.set_verifier_cost,
        }


_DEFAULT_MODEL = GasModel()


def verify_gas(quote_size_bytes: int) -> int:
    """Module-level convenience using the calibrated default model."""
    return _DEFAULT_MODEL.verify_gas(quote_size_bytes)
