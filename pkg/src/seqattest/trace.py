"""Trace file plumbing: canonical JSON-lines events.

Every event carries the on-chain log fields (block, event_type, actor, gas,
reason, payload_hash) plus the simulated time, a sequence number, and the
full payload object so a written trace can be replayed and re-checked
without the original process state. Serialization is canonical (sorted
keys, fixed separators), which is what makes identical runs byte-identical.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Iterable, List, Mapping

__all__ = [
    "MalformedTrace",
    "REQUIRED_EVENT_FIELDS",
    "canonical_json",
    "payload_digest",
    "event_line",
    "write_trace",
    "read_trace",
    "validate_event",
]

REQUIRED_EVENT_FIELDS = (
    "t",
    "seq",
    "block",
    "event_type",
    "actor",
    "gas",
    "reason",
    "payload_hash",
    "payload",
)


class MalformedTrace(Exception):
    pass


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def payload_digest(payload: Mapping) -> str:
    return hashlib.sha256(canonical_json(payload).encode()).hexdigest()


def validate_event(event: Mapping, index: int) -> None:
    missing = [f for f in REQUIRED_EVENT_FIELDS if f not in event]
    if missing:
        raise MalformedTrace(f"event {index} missing fields: {', '.join(missing)}")
    if not isinstance(event["payload"], dict):
        raise MalformedTrace(f"event {index} payload is not an object")


def event_line(event: Mapping) -> str:
    return canonical_json(event)


def write_trace(path, trace: Iterable[Mapping]) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for event in trace:
            fh.write(event_line(event))
            fh.write("\n")


def read_trace(path) -> List[dict]:
    events: List[dict] = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for i, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                event = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedTrace(f"line {i + 1}: invalid JSON ({exc})") from exc
            if not isinstance(event, dict):
                raise MalformedTrace(f"line {i + 1}: event is not an object")
            validate_event(event, i)
            events.append(event)
    return events
