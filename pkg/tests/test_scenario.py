"""Config parsing, overrides, and bundled scenario resolution."""

import pytest

from seqattest.scenario import (
    AdversaryKind,
    InvalidConfig,
    ScenarioConfig,
    apply_overrides,
    bundled_scenario_names,
    bundled_scenario_path,
    load_config_file,
    parse_config,
    resolve_scenario,
)

BUNDLED = [
    "censorship",
    "forged_quote",
    "honest_24h",
    "measurement_swap",
    "metadata_tamper",
    "renewal_spam",
    "replay_attack",
    "revoked_collateral",
    "stale_quote",
]


class TestParse:
    def test_minimal(self):
        cfg = parse_config({"seed": 42, "duration_s": 100})
        assert cfg.seed == 42
        assert cfg.adversary is None
        assert cfg.protocol.validity_window_blocks == 1_200

    def test_zero_tx_count_is_valid(self):
        cfg = parse_config({"workload": {"tx_count": 0}})
        assert cfg.workload.tx_count == 0

    def test_unknown_top_level_key(self):
        with pytest.raises(InvalidConfig) as exc:
            parse_config({"sneed": 1})
        assert any("sneed" in e for e in exc.value.errors)

    def test_unknown_section_key(self):
        with pytest.raises(InvalidConfig) as exc:
            parse_config({"workload": {"tx_shape": "spiky"}})
        assert any("workload.tx_shape" in e for e in exc.value.errors)

    def test_unknown_adversary_kind(self):
        with pytest.raises(InvalidConfig) as exc:
            parse_config({"adversary": {"kind": "quantum_rewind"}})
        assert any("adversary.kind" in e for e in exc.value.errors)

    def test_multiple_field_diagnostics(self):
        with pytest.raises(InvalidConfig) as exc:
            parse_config(
                {
                    "seed": -1,
                    "duration_s": 0,
                    "workload": {"payload_bytes": 0},
                    "protocol": {"quote_version": 7},
                }
            )
        assert len(exc.value.errors) == 4

    def test_adversary_params(self):
        cfg = parse_config(
            {
                "adversary": {
                    "kind": "censorship",
                    "start_time_s": 5,
                    "params": {"fraction": 0.3},
                }
            }
        )
        assert cfg.adversary.kind is AdversaryKind.CENSORSHIP
        assert cfg.adversary.params["fraction"] == 0.3

    def test_quote_size_bounds(self):
        with pytest.raises(InvalidConfig):
            parse_config({"protocol": {"quote_size_target": 256}})


class TestOverrides:
    def test_dotted_path(self):
        tree = {"protocol": {"validity_window_blocks": 1200}}
        apply_overrides(tree, ["protocol.validity_window_blocks=600", "seed=9"])
        cfg = parse_config(tree)
        assert cfg.protocol.validity_window_blocks == 600
        assert cfg.seed == 9

    def test_value_typing(self):
        tree = {}
        apply_overrides(
            tree, ["workload.rate_per_s=0.5", "name=alt", "protocol.renewal_threshold=0.3"]
        )
        cfg = parse_config(tree)
        assert cfg.workload.rate_per_s == 0.5
        assert cfg.name == "alt"

    def test_malformed_override(self):
        with pytest.raises(InvalidConfig):
            apply_overrides({}, ["no-equals-sign"])


class TestBundled:
    def test_all_bundled_present_and_parse(self):
        assert bundled_scenario_names() == BUNDLED
        for name in BUNDLED:
            path = bundled_scenario_path(name)
            cfg = parse_config(load_config_file(path), name_hint=name)
            assert cfg.name == name

    def test_resolve_by_name_and_path(self):
        by_name = resolve_scenario("honest_24h")
        by_path = resolve_scenario(str(by_name))
        assert by_name == by_path

    def test_resolve_missing(self):
        with pytest.raises(InvalidConfig):
            resolve_scenario("no_such_scenario")

    def test_with_seed(self):
        cfg = ScenarioConfig(seed=1)
        assert cfg.with_seed(7).seed == 7
