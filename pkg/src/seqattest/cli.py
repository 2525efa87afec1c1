"""Command-line entry point.

    seqattest run --config <path|name> --out <dir> [--set key=value]...
    seqattest verify-quote --quote <path> --collateral <path> --policy <path>
    seqattest gas-table --sizes 512,1024,...
    seqattest list-scenarios

Exit codes: 0 success / ACCEPT, 1 invariant violation or REJECT,
2 bad configuration or unreadable input. The environment variable
SIM_SEED, when set, overrides the scenario seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import List, Optional

from . import onchain
from .core import (
    CollateralBundle,
    PolicyView,
    QuoteParseError,
    QuoteParseErrorKind,
    TcbStatus,
    parse_quote,
)
from .gas import SizeOutOfRange, verify_gas
from .metrics import MetricsReport
from .replay import all_pass, replay
from .scenario import (
    InvalidConfig,
    apply_overrides,
    bundled_scenario_names,
    load_config_file,
    parse_config,
    resolve_scenario,
)
from .simnet import run_scenario
from .trace import write_trace

__all__ = ["main"]


def _eprint(*args) -> None:
    print(*args, file=sys.stderr)


def cmd_run(config_ref: str, out_dir: str, overrides: List[str]) -> int:
    try:
        path = resolve_scenario(config_ref)
        tree = load_config_file(path)
        tree = apply_overrides(tree, overrides)
        env_seed = os.environ.get("SIM_SEED")
        if env_seed is not None:
            try:
                tree["seed"] = int(env_seed)
            except ValueError:
                raise InvalidConfig([f"SIM_SEED: not an integer: {env_seed!r}"])
        cfg = parse_config(tree, name_hint=path.stem)
    except InvalidConfig as exc:
        for error in exc.errors:
            _eprint(f"config error: {error}")
        return 2

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    trace, report = run_scenario(cfg)
    write_trace(out / "trace.jsonl", trace)
    _write_metrics(out, report)

    verdicts = replay(trace)
    for verdict in verdicts:
        status = "pass" if verdict.passed else f"FAIL at event {verdict.first_violation}: {verdict.detail}"
        print(f"invariant {verdict.name}: {status}")
    if not all_pass(verdicts):
        return 1
    print(f"scenario {cfg.name}: ok ({len(trace)} events)")
    return 0


def _write_metrics(out: Path, report: MetricsReport) -> None:
    with (out / "metrics.json").open("w", encoding="utf-8") as fh:
        json.dump(report.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    with (out / "metrics.csv").open("w", encoding="utf-8") as fh:
        fh.write("metric,key,value\n")
        for metric, key, value in report.to_csv_rows():
            fh.write(f"{metric},{key},{value}\n")


def _load_policy(path: Path) -> dict:
    with path.open("r", encoding="utf-8") as fh:
        return json.load(fh)


def cmd_verify_quote(quote_path: str, collateral_path: str, policy_path: str) -> int:
    try:
        quote_bytes = Path(quote_path).read_bytes()
        with Path(collateral_path).open("r", encoding="utf-8") as fh:
            bundle = CollateralBundle.from_json_dict(json.load(fh))
        raw_policy = _load_policy(Path(policy_path))
        policy = PolicyView(
            expected_mrenclave=bytes.fromhex(raw_policy["expected_mrenclave"]),
            expected_mrsigner=bytes.fromhex(raw_policy["expected_mrsigner"]),
            min_isv_svn=int(raw_policy.get("min_isv_svn", 0)),
            accepted_tcb_statuses=frozenset(
                TcbStatus(s) for s in raw_policy.get("accepted_tcb_statuses", [])
            ),
            freshness_drift=int(raw_policy.get("freshness_drift_s", 60)),
            validity_window=int(raw_policy.get("validity_window_blocks", 1200)),
        )
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        _eprint(f"error: cannot load inputs: {exc}")
        return 2

    try:
        quote = parse_quote(quote_bytes)
    except QuoteParseError as exc:
        reason = (
            onchain.RejectReason.UNKNOWN_VERSION
            if exc.kind is QuoteParseErrorKind.UNKNOWN_VERSION
            else onchain.RejectReason.PARSE_ERROR
        )
        print(f"REJECT:{reason.value}")
        return 1

    # Offline verification: registry baselines come from the policy file.
    now_s = raw_policy.get("now_s")
    known_origins = raw_policy.get("known_l1_origins")
    origin_set = (
        {bytes.fromhex(h) for h in known_origins} if known_origins is not None else None
    )
    cert = bundle.pck_cert if bundle.pck_cert.serial == quote.collateral_ref else None
    rejection = onchain.evaluate_quote_checks(
        quote,
        cert,
        bundle if cert is not None else None,
        policy,
        now_s=int(now_s) if now_s is not None else quote.metadata.timestamp,
        last_nonce=raw_policy.get("last_nonce"),
        last_height=raw_policy.get("last_attested_height"),
        l1_origin_known=(lambda h: h in origin_set) if origin_set is not None else None,
    )
    if rejection is not None:
        print(f"REJECT:{rejection.reason.value}")
        return 1
    print("ACCEPT")
    return 0


def cmd_gas_table(sizes_arg: str) -> int:
    try:
        sizes = [int(s) for s in sizes_arg.split(",") if s.strip()]
    except ValueError:
        _eprint(f"error: --sizes must be a comma-separated list of integers: {sizes_arg!r}")
        return 2
    if not sizes:
        _eprint("error: --sizes is empty")
        return 2
    rows = []
    for size in sizes:
        try:
            rows.append((size, verify_gas(size)))
        except SizeOutOfRange as exc:
            _eprint(f"error: {exc}")
            return 2
    for size, gas in rows:
        print(f"{size},{gas}")
    return 0


def cmd_list_scenarios() -> int:
    for name in bundled_scenario_names():
        print(name)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seqattest",
        description="Attested rollup sequencer simulator and offline quote verifier.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario and export trace + metrics")
    p_run.add_argument("--config", required=True, help="config file path or bundled scenario name")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a config key (dotted path), repeatable",
    )

    p_verify = sub.add_parser("verify-quote", help="verify a serialized quote offline")
    p_verify.add_argument("--quote", required=True)
    p_verify.add_argument("--collateral", required=True)
    p_verify.add_argument("--policy", required=True)

    p_gas = sub.add_parser("gas-table", help="print size,gas rows from the calibrated model")
    p_gas.add_argument("--sizes", required=True, help="comma-separated quote sizes in bytes")

    sub.add_parser("list-scenarios", help="list bundled scenario names")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args.config, args.out, args.overrides)
    if args.command == "verify-quote":
        return cmd_verify_quote(args.quote, args.collateral, args.policy)
    if args.command == "gas-table":
        return cmd_gas_table(args.sizes)
    if args.command == "list-scenarios":
        return cmd_list_scenarios()
    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
