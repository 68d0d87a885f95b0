"""Tests for experiment configuration loading and validation."""

from decimal import Decimal
from pathlib import Path

import pytest
import yaml

from superdist.cli.config import (
    ExperimentConfig,
    default_config,
    load_config,
    parse_config,
    parse_schedule,
    parse_scheme,
)
from superdist.core.errors import ConfigError
from superdist.core.market import Constant, PiecewiseLinear, Table, scheme_preset
from superdist.core.sim import FreeRiderConfig

FULL = {
    "version": 1,
    "market": {"N": 50, "scheme": "potato"},
    "schedule": {"type": "piecewise_linear", "breakpoints": [[0.0, 150], [1.0, 50]]},
    "simulation": {"seed": 7, "runs": 20, "adoption_buckets": 5},
    "free_rider": {"free_quality": 0.7, "risk_cost": 10},
    "output": {"dir": "results"},
}


def with_changes(**sections):
    data = {key: dict(value) if isinstance(value, dict) else value for key, value in FULL.items()}
    data.update(sections)
    return data


class TestParseConfig:
    """Whole-document parsing."""

    def test_full_document(self):
        config = parse_config(FULL)

        assert config.N == 50
        assert config.scheme == scheme_preset("potato")
        assert config.schedule == PiecewiseLinear(((0.0, 150), (1.0, 50)))
        assert (config.seed, config.runs, config.adoption_buckets) == (7, 20, 5)
        assert config.free_rider == FreeRiderConfig(free_quality=0.7, risk_cost=10.0)
        assert config.out_dir == Path("results")

    def test_minimal_document(self):
        config = parse_config({"version": 1})

        assert config.N == 100
        assert config.schedule == Constant(100)
        assert config.free_rider is None

    def test_version_required(self):
        with pytest.raises(ConfigError, match="Unsupported config version") as excinfo:
            parse_config({"market": {"N": 5}})
        assert excinfo.value.key == "version"
        assert excinfo.value.expected == 1

    def test_unknown_section(self):
        with pytest.raises(ConfigError, match="Unknown key") as excinfo:
            parse_config({"version": 1, "metrics": {}})
        assert excinfo.value.key == "config.metrics"

    def test_unknown_nested_key(self):
        with pytest.raises(ConfigError) as excinfo:
            parse_config(with_changes(market={"N": 5, "levels": 3}))
        assert excinfo.value.key == "market.levels"

    def test_not_a_mapping(self):
        with pytest.raises(ConfigError, match="mapping"):
            parse_config([1, 2, 3])

    @pytest.mark.parametrize("value", [-1, True, "ten", 2.5])
    def test_bad_market_size(self, value):
        with pytest.raises(ConfigError) as excinfo:
            parse_config(with_changes(market={"N": value}))
        assert excinfo.value.key == "market.N"
        assert excinfo.value.received == value

    def test_seed_range(self):
        with pytest.raises(ConfigError, match="64-bit"):
            parse_config(with_changes(simulation={"seed": 1 << 64}))

    def test_runs_at_least_one(self):
        with pytest.raises(ConfigError) as excinfo:
            parse_config(with_changes(simulation={"runs": 0}))
        assert excinfo.value.to_dict() == {
            "error": "'simulation.runs' must be >= 1.",
            "key": "simulation.runs",
            "expected": ">=1",
            "received": 0,
        }

    def test_free_rider_bounds(self):
        with pytest.raises(ConfigError) as excinfo:
            parse_config(with_changes(free_rider={"free_quality": 1.5}))
        assert excinfo.value.key == "free_rider.free_quality"

    def test_empty_output_dir(self):
        with pytest.raises(ConfigError, match="output.dir"):
            parse_config(with_changes(output={"dir": " "}))

    def test_sim_config(self):
        sim = parse_config(FULL).sim_config(runs=3)
        assert (sim.N, sim.seed, sim.runs, sim.adoption_buckets) == (50, 7, 3, 5)


class TestSchemeAndSchedule:
    """Market sections."""

    def test_custom_scheme(self):
        scheme = parse_scheme({"level_shares": ["0.2"], "platform_share": "0.1"})
        assert scheme.level_shares == (Decimal("0.2"),)
        assert scheme.originator_share == Decimal("0.7")

    def test_unknown_preset(self):
        with pytest.raises(ConfigError, match="Unknown scheme preset") as excinfo:
            parse_scheme("pyramid")
        assert excinfo.value.key == "market.scheme"

    def test_shares_over_one(self):
        with pytest.raises(ConfigError, match="Invalid scheme"):
            parse_scheme({"level_shares": ["0.6"], "collector_share": "0.6"})

    def test_level_shares_must_be_a_list(self):
        with pytest.raises(ConfigError) as excinfo:
            parse_scheme({"level_shares": "0.1"})
        assert excinfo.value.key == "market.scheme.level_shares"

    def test_table_defaults_to_market_size(self):
        schedule = parse_schedule({"type": "table", "prices_cents": [100, 90, 80]}, 2)
        assert schedule == Table((100, 90, 80), market_size=2)

    def test_table_wrong_length(self):
        with pytest.raises(ConfigError, match="Invalid schedule"):
            parse_schedule({"type": "table", "prices_cents": [100, 90]}, 2)

    def test_unknown_schedule_type(self):
        with pytest.raises(ConfigError) as excinfo:
            parse_schedule({"type": "auction"}, 10)
        assert excinfo.value.key == "schedule.type"

    def test_bad_breakpoints(self):
        with pytest.raises(ConfigError) as excinfo:
            parse_schedule({"type": "piecewise_linear", "breakpoints": [[0.0, 100, 1]]}, 10)
        assert excinfo.value.key == "schedule.breakpoints"

    def test_breakpoints_must_cover_range(self):
        with pytest.raises(ConfigError, match="Invalid schedule"):
            parse_schedule({"type": "piecewise_linear", "breakpoints": [[0.5, 100], [1, 0]]}, 10)

    def test_constant_keys(self):
        with pytest.raises(ConfigError):
            parse_schedule({"type": "constant", "prices_cents": [1]}, 10)


class TestLoadConfig:
    """Reading YAML files."""

    def test_defaults_without_file(self):
        assert load_config(None) == default_config()

    def test_round_trip_through_yaml(self, tmp_path):
        path = tmp_path / "experiment.yaml"
        path.write_text(yaml.safe_dump(FULL))
        assert load_config(str(path)) == parse_config(FULL)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found") as excinfo:
            load_config(str(tmp_path / "absent.yaml"))
        assert excinfo.value.key == "--config"

    def test_invalid_yaml(self, tmp_path):
        path = tmp_path / "broken.yaml"
        path.write_text("market: [unclosed\n")
        with pytest.raises(ConfigError, match="not valid YAML"):
            load_config(str(path))


class TestOverrides:
    """Command-line overrides on top of a file."""

    def test_overrides(self):
        config = default_config().with_overrides(seed=9, runs=4, out_dir="elsewhere")
        assert isinstance(config, ExperimentConfig)
        assert (config.seed, config.runs, config.out_dir) == (9, 4, Path("elsewhere"))

    def test_none_keeps_values(self):
        assert default_config().with_overrides() == default_config()

    def test_bad_runs(self):
        with pytest.raises(ConfigError) as excinfo:
            default_config().with_overrides(runs=0)
        assert excinfo.value.key == "--runs"


class TestShippedConfigs:
    """Configurations under configs/ stay loadable."""

    @pytest.mark.parametrize("name", ["potato.yaml", "free-riders.yaml"])
    def test_loads(self, name):
        path = Path(__file__).resolve().parents[1] / "configs" / name
        config = load_config(str(path))
        assert config.N == 200
        assert config.scheme == scheme_preset("potato")
