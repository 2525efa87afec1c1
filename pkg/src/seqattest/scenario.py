"""Scenario configuration: typed key-tree files, overrides, bundled scenarios.

Config files are TOML restricted to a flat key tree whose dotted paths
match the ScenarioConfig field names (e.g. ``protocol.validity_window_blocks``).
Overrides are ``dotted.path=value`` strings applied on top of the file
before validation. Validation is strict: unknown keys and out-of-range
values produce InvalidConfig with one diagnostic per offending field.

The seed fully determines a scenario's trace.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Tuple

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

from . import onchain
from .core import DEFAULT_QUOTE_SIZE, TcbStatus

__all__ = [
    "InvalidConfig",
    "AdversaryKind",
    "WorkloadConfig",
    "AdversaryConfig",
    "ProtocolConfig",
    "NetworkConfig",
    "RollupTimingConfig",
    "ScenarioConfig",
    "load_config_file",
    "parse_config",
    "apply_overrides",
    "bundled_scenario_names",
    "bundled_scenario_path",
    "resolve_scenario",
]

# The workload grid the simulator is normally exercised with; values outside
# the grid (including zero) are legal.
TX_COUNT_GRID = (10, 50, 100, 200, 300, 500, 1000)
PAYLOAD_GRID = (100, 300, 500, 1000, 2000, 3000, 5000)


class InvalidConfig(Exception):
    def __init__(self, errors: List[str]) -> None:
        super().__init__("; ".join(errors))
        self.errors = errors


class AdversaryKind(str, Enum):
    FORGED_QUOTE = "forged_quote"
    REPLAY_QUOTE = "replay_quote"
    STALE_QUOTE = "stale_quote"
    REVOKED_COLLATERAL = "revoked_collateral"
    MEASUREMENT_SWAP = "measurement_swap"
    METADATA_TAMPER = "metadata_tamper"
    CENSORSHIP = "censorship"
    SPURIOUS_RENEWAL_SPAM = "renewal_spam"


@dataclass(frozen=True)
class WorkloadConfig:
    tx_count: int = 100
    payload_bytes: int = 500
    arrival: str = "poisson"  # "poisson" | "burst"
    rate_per_s: Optional[float] = None  # poisson only; default tx_count/duration
    burst_at_s: int = 0
    senders: int = 10


@dataclass(frozen=True)
class AdversaryConfig:
    kind: AdversaryKind
    start_time_s: int = 0
    params: Mapping[str, object] = field(default_factory=dict)


@dataclass(frozen=True)
class ProtocolConfig:
    validity_window_blocks: int = onchain.DEFAULT_VALIDITY_WINDOW_BLOCKS
    renewal_threshold: float = 0.2
    rate_limit_blocks: int = onchain.DEFAULT_RATE_LIMIT_BLOCKS
    bond_wei: int = onchain.DEFAULT_REQUIRED_BOND_WEI
    quote_size_target: int = DEFAULT_QUOTE_SIZE
    quote_version: int = 4
    freshness_drift_s: int = onchain.DEFAULT_FRESHNESS_DRIFT_S
    min_isv_svn: int = 1
    accepted_tcb_statuses: Tuple[str, ...] = (TcbStatus.UP_TO_DATE.value,)
    whitelist: Tuple[str, ...] = ("validator-0",)
    challenge_window_blocks: int = onchain.DEFAULT_CHALLENGE_WINDOW_BLOCKS
    retry_backoff_s: int = 60


@dataclass(frozen=True)
class NetworkConfig:
    """Per-hop delay: fixed at delay_ms, or uniform over [delay, delay+jitter].

    The two modeled links (client → sequencer mempool, sequencer → L1
    submission) can override the shared default individually.
    """

    delay_ms: int = 50
    delay_jitter_ms: int = 0
    tx_delay_ms: Optional[int] = None
    quote_delay_ms: Optional[int] = None


@dataclass(frozen=True)
class RollupTimingConfig:
    l2_interval_ms: int = 2_000
    max_txs_per_block: int = 100
    batch_size_blocks: int = 5
    batcher_interval_ms: int = 10_000
    proposer_interval_ms: int = 12_000


@dataclass(frozen=True)
class ScenarioConfig:
    name: str = "scenario"
    seed: int = 0
    duration_s: int = 600
    workload: WorkloadConfig = field(default_factory=WorkloadConfig)
    adversary: Optional[AdversaryConfig] = None
    protocol: ProtocolConfig = field(default_factory=ProtocolConfig)
    network: NetworkConfig = field(default_factory=NetworkConfig)
    rollup: RollupTimingConfig = field(default_factory=RollupTimingConfig)

    def with_seed(self, seed: int) -> "ScenarioConfig":
        return replace(self, seed=seed)


_SECTION_FIELDS = {
    "workload": WorkloadConfig,
    "adversary": AdversaryConfig,
    "protocol": ProtocolConfig,
    "network": NetworkConfig,
    "rollup": RollupTimingConfig,
}
_TOP_LEVEL_SCALARS = {"name", "seed", "duration_s"}


def _build_section(cls, raw: Mapping, where: str, errors: List[str]):
    fields = set(cls.__dataclass_fields__)
    kwargs = {}
    for key, value in raw.items():
        if key not in fields:
            errors.append(f"{where}.{key}: unknown key")
            continue
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except TypeError as exc:
        errors.append(f"{where}: {exc}")
        return None


def parse_config(raw: Mapping, *, name_hint: str = "scenario") -> ScenarioConfig:
    """Validate a parsed key tree into a ScenarioConfig or raise InvalidConfig."""
    errors: List[str] = []
    if not isinstance(raw, Mapping):
        raise InvalidConfig(["config root must be a table"])

    for key in raw:
        if key not in _TOP_LEVEL_SCALARS and key not in _SECTION_FIELDS:
            errors.append(f"{key}: unknown key")

    name = raw.get("name", name_hint)
    seed = raw.get("seed", 0)
    duration_s = raw.get("duration_s", 600)
    if not isinstance(name, str):
        errors.append("name: must be a string")
    if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2**64:
        errors.append("seed: must be an unsigned 64-bit integer")
    if not isinstance(duration_s, int) or isinstance(duration_s, bool) or duration_s <= 0:
        errors.append("duration_s: must be a positive integer")

    workload = WorkloadConfig()
    if "workload" in raw:
        w = raw["workload"]
        if not isinstance(w, Mapping):
            errors.append("workload: must be a table")
        else:
            built = _build_section(WorkloadConfig, {**w}, "workload", errors)
            if built is not None:
                workload = built

    adversary = None
    if "adversary" in raw:
        a = raw["adversary"]
        if not isinstance(a, Mapping):
            errors.append("adversary: must be a table")
        else:
            a = dict(a)
            kind_raw = a.pop("kind", None)
            kind = None
            try:
                kind = AdversaryKind(kind_raw)
            except ValueError:
                errors.append(
                    f"adversary.kind: unknown kind {kind_raw!r} "
                    f"(expected one of {[k.value for k in AdversaryKind]})"
                )
            start_time_s = a.pop("start_time_s", 0)
            if not isinstance(start_time_s, int) or isinstance(start_time_s, bool) or start_time_s < 0:
                errors.append("adversary.start_time_s: must be a non-negative integer")
                start_time_s = 0
            params = a.pop("params", {})
            if not isinstance(params, Mapping):
                errors.append("adversary.params: must be a table")
                params = {}
            for key in a:
                errors.append(f"adversary.{key}: unknown key")
            if kind is not None:
                adversary = AdversaryConfig(
                    kind=kind, start_time_s=start_time_s, params=dict(params)
                )

    protocol = ProtocolConfig()
    if "protocol" in raw:
        p = raw["protocol"]
        if not isinstance(p, Mapping):
            errors.append("protocol: must be a table")
        else:
            p = dict(p)
            for tuple_key in ("accepted_tcb_statuses", "whitelist"):
                if tuple_key in p and isinstance(p[tuple_key], list):
                    p[tuple_key] = tuple(p[tuple_key])
            built = _build_section(ProtocolConfig, p, "protocol", errors)
            if built is not None:
                protocol = built

    network = NetworkConfig()
    if "network" in raw:
        n = raw["network"]
        if not isinstance(n, Mapping):
            errors.append("network: must be a table")
        else:
            built = _build_section(NetworkConfig, {**n}, "network", errors)
            if built is not None:
                network = built

    rollup_timing = RollupTimingConfig()
    if "rollup" in raw:
        r = raw["rollup"]
        if not isinstance(r, Mapping):
            errors.append("rollup: must be a table")
        else:
            built = _build_section(RollupTimingConfig, {**r}, "rollup", errors)
            if built is not None:
                rollup_timing = built

    # Range checks once the shapes are in place.
    if isinstance(workload, WorkloadConfig):
        if workload.tx_count < 0:
            errors.append("workload.tx_count: must be >= 0")
        if workload.payload_bytes <= 0:
            errors.append("workload.payload_bytes: must be > 0")
        if workload.arrival not in ("poisson", "burst"):
            errors.append("workload.arrival: must be 'poisson' or 'burst'")
        if workload.senders <= 0:
            errors.append("workload.senders: must be > 0")
        if workload.rate_per_s is not None and workload.rate_per_s <= 0:
            errors.append("workload.rate_per_s: must be > 0 when set")
    if protocol.validity_window_blocks <= 0:
        errors.append("protocol.validity_window_blocks: must be > 0")
    if not 0 < protocol.renewal_threshold < 1:
        errors.append("protocol.renewal_threshold: must be in (0, 1)")
    if protocol.quote_version not in (3, 4):
        errors.append("protocol.quote_version: must be 3 or 4")
    if not 512 <= protocol.quote_size_target <= 10_240:
        errors.append("protocol.quote_size_target: must be within [512, 10240]")
    if network.delay_ms < 0 or network.delay_jitter_ms < 0:
        errors.append("network delays must be non-negative")
    for link_field in ("tx_delay_ms", "quote_delay_ms"):
        value = getattr(network, link_field)
        if value is not None and value < 0:
            errors.append(f"network.{link_field}: must be non-negative")
    for status in protocol.accepted_tcb_statuses:
        if status not in {s.value for s in TcbStatus}:
            errors.append(f"protocol.accepted_tcb_statuses: unknown status {status!r}")

    if errors:
        raise InvalidConfig(errors)
    return ScenarioConfig(
        name=name,
        seed=seed,
        duration_s=duration_s,
        workload=workload,
        adversary=adversary,
        protocol=protocol,
        network=network,
        rollup=rollup_timing,
    )


def _parse_override_value(raw: str):
    lowered = raw.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        pass
    return raw


def apply_overrides(tree: Dict, overrides: List[str]) -> Dict:
    """Apply ``dotted.path=value`` overrides onto a parsed key tree."""
    for item in overrides:
        if "=" not in item:
            raise InvalidConfig([f"override {item!r}: expected dotted.path=value"])
        path, _, raw_value = item.partition("=")
        keys = path.strip().split(".")
        if not all(keys):
            raise InvalidConfig([f"override {item!r}: empty path segment"])
        node = tree
        for key in keys[:-1]:
            node = node.setdefault(key, {})
            if not isinstance(node, dict):
                raise InvalidConfig([f"override {item!r}: {key} is not a table"])
        node[keys[-1]] = _parse_override_value(raw_value.strip())
    return tree


def load_config_file(path: Path) -> Dict:
    try:
        with open(path, "rb") as fh:
            return _toml.load(fh)
    except FileNotFoundError:
        raise InvalidConfig([f"config file not found: {path}"])
    except _toml.TOMLDecodeError as exc:
        raise InvalidConfig([f"config file {path}: {exc}"])


def _scenarios_dir() -> Path:
    return Path(__file__).parent / "scenarios"


def bundled_scenario_names() -> List[str]:
    return sorted(p.stem for p in _scenarios_dir().glob("*.toml"))


def bundled_scenario_path(name: str) -> Optional[Path]:
    candidate = _scenarios_dir() / f"{name}.toml"
    return candidate if candidate.is_file() else None


def resolve_scenario(ref: str) -> Path:
    """Resolve a CLI config reference: a filesystem path or a bundled name."""
    path = Path(ref)
    if path.is_file():
        return path
    bundled = bundled_scenario_path(ref)
    if bundled is not None:
        return bundled
    raise InvalidConfig(
        [f"no such config file or bundled scenario: {ref!r} "
         f"(bundled: {', '.join(bundled_scenario_names())})"]
    )
