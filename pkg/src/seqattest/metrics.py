"""Pure trace-to-report reduction.

Every number in the report is recomputed from the event trace alone, so
recomputation is idempotent and the report can be audited against the
trace. Latency quantiles use the nearest-rank method.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Mapping, Sequence, Tuple

from .trace import MalformedTrace, validate_event

__all__ = ["LatencyStats", "MetricsReport", "compute_metrics"]

# Quote attestation causes that count as renewals (vs. first authorization).
RENEWAL_CAUSES = ("threshold", "demand", "expired")


@dataclass(frozen=True)
class LatencyStats:
    count: int
    mean_ms: float
    p50_ms: float
    p95_ms: float

    @classmethod
    def from_samples(cls, samples: Sequence[int]) -> "LatencyStats":
        if not samples:
            return cls(count=0, mean_ms=0.0, p50_ms=0.0, p95_ms=0.0)
        ordered = sorted(samples)
        n = len(ordered)

        def rank(q: float) -> float:
            idx = min(n, max(1, math.ceil(q * n)))
            return float(ordered[idx - 1])

        return cls(
            count=n,
            mean_ms=sum(ordered) / n,
            p50_ms=rank(0.50),
            p95_ms=rank(0.95),
        )

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "mean_ms": self.mean_ms,
            "p50_ms": self.p50_ms,
            "p95_ms": self.p95_ms,
        }


@dataclass(frozen=True)
class MetricsReport:
    duration_s: int
    tps: float
    latency_l2: LatencyStats
    latency_l1: LatencyStats
    gas_by_category: Mapping[str, int]
    renewals: int
    renewal_causes: Mapping[str, int]
    rejections: Mapping[str, int]
    inclusion_rate: Mapping[str, float]
    submitted_txs: int
    included_txs: int
    censored_txs: int
    pending_txs: int
    slashes: int = 0
    refunds: int = 0
    withheld_batch_steps: int = 0

    def to_json_dict(self) -> dict:
        return {
            "duration_s": self.duration_s,
            "tps": self.tps,
            "latency": {
                "submit_to_l2_inclusion": self.latency_l2.to_dict(),
                "submit_to_l1_batch": self.latency_l1.to_dict(),
            },
            "gas": dict(self.gas_by_category),
            "renewals": self.renewals,
            "renewal_causes": dict(self.renewal_causes),
            "rejections": dict(self.rejections),
            "inclusion_rate": dict(self.inclusion_rate),
            "transactions": {
                "submitted": self.submitted_txs,
                "included": self.included_txs,
                "censored": self.censored_txs,
                "pending": self.pending_txs,
            },
            "bonds": {"slashes": self.slashes, "refunds": self.refunds},
            "withheld_batch_steps": self.withheld_batch_steps,
        }

    def to_csv_rows(self) -> List[Tuple[str, str, str]]:
        rows: List[Tuple[str, str, str]] = [("tps", "", repr(self.tps))]
        for name, stats in (
            ("latency_submit_to_l2_ms", self.latency_l2),
            ("latency_submit_to_l1_ms", self.latency_l1),
        ):
            for key, value in sorted(stats.to_dict().items()):
                rows.append((name, key, repr(value)))
        for key in sorted(self.gas_by_category):
            rows.append(("gas", key, str(self.gas_by_category[key])))
        rows.append(("renewals", "count", str(self.renewals)))
        for key in sorted(self.renewal_causes):
            rows.append(("renewals", key, str(self.renewal_causes[key])))
        for key in sorted(self.rejections):
            rows.append(("rejections", key, str(self.rejections[key])))
        for key in sorted(self.inclusion_rate):
            rows.append(("inclusion_rate", key, repr(self.inclusion_rate[key])))
        for key, value in (
            ("submitted", self.submitted_txs),
            ("included", self.included_txs),
            ("censored", self.censored_txs),
            ("pending", self.pending_txs),
        ):
            rows.append(("transactions", key, str(value)))
        rows.append(("bonds", "slashes", str(self.slashes)))
        rows.append(("bonds", "refunds", str(self.refunds)))
        rows.append(("withheld_batch_steps", "", str(self.withheld_batch_steps)))
        return rows


_REJECTION_EVENTS = {
    "QuoteRejected",
    "RenewalRejected",
    "BatchRejected",
    "StateRootRejected",
}


def compute_metrics(trace: Sequence[Mapping]) -> MetricsReport:
    """Reduce a complete trace into a MetricsReport.

    Raises MalformedTrace when the trace is empty, missing its start/end
    markers, or contains events without the required fields.
    """
    if not trace:
        raise MalformedTrace("empty trace")
    for i, event in enumerate(trace):
        validate_event(event, i)
    if trace[0]["event_type"] != "ScenarioStart":
        raise MalformedTrace("trace does not begin with ScenarioStart")
    if trace[-1]["event_type"] != "ScenarioEnd":
        raise MalformedTrace("trace does not end with ScenarioEnd")

    duration_s = int(trace[0]["payload"]["duration_s"])

    submit_t: Dict[str, int] = {}
    sender_of: Dict[str, str] = {}
    submitted_per_sender: Dict[str, int] = {}
    included_per_sender: Dict[str, int] = {}
    inclusion_t: Dict[str, int] = {}
    height_of_tx: Dict[str, int] = {}
    batch_t_by_height: Dict[int, int] = {}
    censored: set = set()
    gas_by_category: Dict[str, int] = {
        "deploy": 0,
        "attest": 0,
        "renewal": 0,
        "batch": 0,
        "proposal": 0,
    }
    renewal_causes: Dict[str, int] = {}
    rejections: Dict[str, int] = {}
    slashes = 0
    refunds = 0
    withheld = 0

    for event in trace:
        etype = event["event_type"]
        payload = event["payload"]
        if etype == "TxSubmitted":
            tx = payload["tx_id"]
            submit_t[tx] = event["t"]
            sender_of[tx] = payload["sender"]
            submitted_per_sender[payload["sender"]] = (
                submitted_per_sender.get(payload["sender"], 0) + 1
            )
        elif etype == "TxCensored":
            censored.add(payload["tx_id"])
        elif etype == "L2BlockProduced":
            for tx in payload["tx_ids"]:
                inclusion_t[tx] = event["t"]
                height_of_tx[tx] = payload["height"]
                sender = sender_of.get(tx)
                if sender is not None:
                    included_per_sender[sender] = included_per_sender.get(sender, 0) + 1
        elif etype == "BatchPublished":
            for height in range(payload["start_height"], payload["end_height"] + 1):
                batch_t_by_height.setdefault(height, event["t"])
            gas_by_category["batch"] += event["gas"]
        elif etype == "StateRootProposed":
            gas_by_category["proposal"] += event["gas"]
        elif etype in ("ContractDeployed", "VerifierSet"):
            gas_by_category["deploy"] += event["gas"]
        elif etype == "QuoteAttested":
            cause = payload.get("cause", "external")
            if cause in RENEWAL_CAUSES:
                gas_by_category["renewal"] += event["gas"]
                renewal_causes[cause] = renewal_causes.get(cause, 0) + 1
            else:
                gas_by_category["attest"] += event["gas"]
        elif etype in _REJECTION_EVENTS:
            reason = event["reason"] or "Unknown"
            rejections[reason] = rejections.get(reason, 0) + 1
        elif etype == "BondSlashed":
            slashes += 1
        elif etype == "BondRefunded":
            refunds += 1
        elif etype == "BatchWithheld":
            withheld += 1

    latency_l2 = [inclusion_t[tx] - submit_t[tx] for tx in inclusion_t if tx in submit_t]
    latency_l1 = [
        batch_t_by_height[height_of_tx[tx]] - submit_t[tx]
        for tx in inclusion_t
        if tx in submit_t and height_of_tx[tx] in batch_t_by_height
    ]

    submitted = len(submit_t)
    included = len(inclusion_t)
    inclusion_rate = {
        sender: included_per_sender.get(sender, 0) / count
        for sender, count in sorted(submitted_per_sender.items())
    }
    return MetricsReport(
        duration_s=duration_s,
        tps=included / duration_s if duration_s > 0 else 0.0,
        latency_l2=LatencyStats.from_samples(latency_l2),
        latency_l1=LatencyStats.from_samples(latency_l1),
        gas_by_category=gas_by_category,
        renewals=sum(renewal_causes.values()),
        renewal_causes=renewal_causes,
        rejections=rejections,
        inclusion_rate=inclusion_rate,
        submitted_txs=submitted,
        included_txs=included,
        censored_txs=len(censored),
        pending_txs=submitted - included - len(censored),
        slashes=slashes,
        refunds=refunds,
        withheld_batch_steps=withheld,
    )
