"""Experiment configuration: a versioned YAML document validated before any run.

Example::

    version: 1
    market:
      N: 100
      scheme: potato          # preset name, or a mapping of shares
    schedule:
      type: piecewise_linear
      breakpoints: [[0.0, 150], [1.0, 50]]
    simulation:
      seed: 7
      runs: 1000
    free_rider:
      free_quality: 0.8
      risk_cost: 30
    output:
      dir: out

Unknown keys at any level are errors.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Mapping, Optional

import yaml

from superdist.cli.constants import (
    CONFIG_SCHEMA_VERSION,
    CONFIG_SECTIONS,
    DEFAULT_N,
    DEFAULT_OUT,
    DEFAULT_RUNS,
    FREE_RIDER_KEYS,
    MARKET_KEYS,
    OUTPUT_KEYS,
    SCHEDULE_TYPES,
    SCHEME_KEYS,
    SIMULATION_KEYS,
)
from superdist.core.errors import ConfigError, SuperdistError
from superdist.core.market import (
    Constant,
    PiecewiseLinear,
    PriceSchedule,
    RemunerationScheme,
    Table,
    scheme_preset,
)
from superdist.core.sim import FreeRiderConfig, SimConfig

_U64_MAX = (1 << 64) - 1


@dataclass(frozen=True)
class ExperimentConfig:
    N: int
    scheme: RemunerationScheme
    schedule: PriceSchedule
    seed: int = 0
    runs: int = DEFAULT_RUNS
    adoption_buckets: int = 10
    free_rider: Optional[FreeRiderConfig] = None
    out_dir: Path = Path(DEFAULT_OUT)
    version: int = CONFIG_SCHEMA_VERSION

    def sim_config(self, *, runs: Optional[int] = None) -> SimConfig:
        return SimConfig(
            N=self.N,
            scheme=self.scheme,
            schedule=self.schedule,
            seed=self.seed,
            free_rider=self.free_rider,
            runs=self.runs if runs is None else runs,
            adoption_buckets=self.adoption_buckets,
        )

    def with_overrides(
        self,
        *,
        seed: Optional[int] = None,
        runs: Optional[int] = None,
        out_dir: Optional[str] = None,
    ) -> "ExperimentConfig":
        config = self
        if seed is not None:
            config = replace(config, seed=_check_u64("--seed", seed))
        if runs is not None:
            if runs < 1:
                raise ConfigError(
                    "'--runs' must be >= 1.", key="--runs", expected=">=1", received=runs
                )
            config = replace(config, runs=runs)
        if out_dir is not None:
            config = replace(config, out_dir=Path(out_dir))
        return config


def default_config() -> ExperimentConfig:
    return ExperimentConfig(N=DEFAULT_N, scheme=scheme_preset("potato"), schedule=Constant(100))


# --- typed getters ---------------------------------------------------------


def _check_u64(key: str, value: int) -> int:
    if not 0 <= value <= _U64_MAX:
        raise ConfigError(
            f"'{key}' must be an unsigned 64-bit integer.",
            key=key,
            expected="0..2**64-1",
            received=value,
        )
    return value


def _check_keys(section: str, data: Mapping[str, Any], allowed: set[str]) -> None:
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigError(
            f"Unknown key(s) in '{section}': {', '.join(map(str, unknown))}.",
            key=f"{section}.{unknown[0]}",
            expected=sorted(allowed),
            received=unknown,
        )


def get_section(data: Mapping[str, Any], key: str, allowed: set[str]) -> Mapping[str, Any]:
    value = data.get(key, {})
    if value is None:
        value = {}
    if not isinstance(value, Mapping):
        raise ConfigError(
            f"'{key}' must be a mapping.", key=key, expected="mapping", received=value
        )
    _check_keys(key, value, allowed)
    return value


def get_int(
    section: str, data: Mapping[str, Any], key: str, default: int, *, min_value: int
) -> int:
    if key not in data:
        return default
    value = data[key]
    name = f"{section}.{key}"
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(
            f"'{name}' must be an integer.", key=name, expected="integer", received=value
        )
    if value < min_value:
        raise ConfigError(
            f"'{name}' must be >= {min_value}.", key=name, expected=f">={min_value}", received=value
        )
    return value


def get_number(
    section: str,
    data: Mapping[str, Any],
    key: str,
    default: float,
    *,
    min_value: float,
    max_value: float = float("inf"),
) -> float:
    if key not in data:
        return default
    value = data[key]
    name = f"{section}.{key}"
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(
            f"'{name}' must be a number.", key=name, expected="number", received=value
        )
    if not min_value <= float(value) <= max_value:
        raise ConfigError(
            f"'{name}' must be between {min_value} and {max_value}.",
            key=name,
            expected=f"{min_value}..{max_value}",
            received=value,
        )
    return float(value)


# --- sections --------------------------------------------------------------


def parse_scheme(value: Any) -> RemunerationScheme:
    if isinstance(value, str):
        try:
            return scheme_preset(value)
        except SuperdistError as exc:
            raise ConfigError(str(exc), key="market.scheme", received=value) from None
    if not isinstance(value, Mapping):
        raise ConfigError(
            "'market.scheme' must be a preset name or a mapping of shares.",
            key="market.scheme",
            expected="string or mapping",
            received=value,
        )
    _check_keys("market.scheme", value, SCHEME_KEYS)
    levels = value.get("level_shares", [])
    if not isinstance(levels, list):
        raise ConfigError(
            "'market.scheme.level_shares' must be a list.",
            key="market.scheme.level_shares",
            expected="list",
            received=levels,
        )
    try:
        return RemunerationScheme.from_dict(value)
    except (SuperdistError, ArithmeticError, ValueError) as exc:
        raise ConfigError(
            f"Invalid scheme: {exc}", key="market.scheme", received=dict(value)
        ) from None


def parse_schedule(data: Mapping[str, Any], N: int) -> PriceSchedule:
    kind = data.get("type", "constant")
    if kind not in SCHEDULE_TYPES:
        raise ConfigError(
            f"'schedule.type' must be one of {sorted(SCHEDULE_TYPES)}.",
            key="schedule.type",
            expected=sorted(SCHEDULE_TYPES),
            received=kind,
        )
    allowed = {
        "constant": {"type", "price_cents"},
        "piecewise_linear": {"type", "breakpoints"},
        "table": {"type", "prices_cents", "market_size"},
    }[kind]
    _check_keys("schedule", data, allowed)
    try:
        if kind == "constant":
            return Constant(get_int("schedule", data, "price_cents", 100, min_value=0))
        if kind == "piecewise_linear":
            points = data.get("breakpoints")
            if not isinstance(points, list) or not all(
                isinstance(p, list) and len(p) == 2 for p in points
            ):
                raise ConfigError(
                    "'schedule.breakpoints' must be a list of [saturation, price] pairs.",
                    key="schedule.breakpoints",
                    expected="list of pairs",
                    received=points,
                )
            return PiecewiseLinear(tuple((p[0], p[1]) for p in points))
        prices = data.get("prices_cents")
        if not isinstance(prices, list):
            raise ConfigError(
                "'schedule.prices_cents' must be a list.",
                key="schedule.prices_cents",
                expected="list",
                received=prices,
            )
        size = get_int("schedule", data, "market_size", N, min_value=1)
        return Table(tuple(prices), size)
    except ConfigError:
        raise
    except (SuperdistError, TypeError, ValueError) as exc:
        raise ConfigError(f"Invalid schedule: {exc}", key="schedule", received=dict(data)) from None


def parse_config(data: Any) -> ExperimentConfig:
    if not isinstance(data, Mapping):
        raise ConfigError(
            "Configuration must be a mapping.", key="", expected="mapping", received=data
        )
    _check_keys("config", data, CONFIG_SECTIONS)
    version = data.get("version")
    if version != CONFIG_SCHEMA_VERSION:
        raise ConfigError(
            f"Unsupported config version {version!r}.",
            key="version",
            expected=CONFIG_SCHEMA_VERSION,
            received=version,
        )

    market = get_section(data, "market", MARKET_KEYS)
    N = get_int("market", market, "N", DEFAULT_N, min_value=0)
    scheme = parse_scheme(market.get("scheme", "potato"))

    schedule_data = data.get("schedule", {}) or {}
    if not isinstance(schedule_data, Mapping):
        raise ConfigError(
            "'schedule' must be a mapping.",
            key="schedule",
            expected="mapping",
            received=schedule_data,
        )
    schedule = parse_schedule(schedule_data, N)

    simulation = get_section(data, "simulation", SIMULATION_KEYS)
    seed = _check_u64("simulation.seed", get_int("simulation", simulation, "seed", 0, min_value=0))
    runs = get_int("simulation", simulation, "runs", DEFAULT_RUNS, min_value=1)
    buckets = get_int("simulation", simulation, "adoption_buckets", 10, min_value=1)

    free_rider = None
    if data.get("free_rider") is not None:
        fr = get_section(data, "free_rider", FREE_RIDER_KEYS)
        defaults = FreeRiderConfig()
        low = get_number("free_rider", fr, "valuation_low", defaults.valuation_low, min_value=0)
        high = get_number(
            "free_rider", fr, "valuation_high", defaults.valuation_high, min_value=low
        )
        free_rider = FreeRiderConfig(
            free_quality=get_number(
                "free_rider", fr, "free_quality", defaults.free_quality, min_value=0, max_value=1
            ),
            risk_cost=get_number("free_rider", fr, "risk_cost", defaults.risk_cost, min_value=0),
            valuation_low=low,
            valuation_high=high,
            price_unit=get_int("free_rider", fr, "price_unit", defaults.price_unit, min_value=1),
        )

    output = get_section(data, "output", OUTPUT_KEYS)
    out_dir = output.get("dir", DEFAULT_OUT)
    if not isinstance(out_dir, str) or not out_dir.strip():
        raise ConfigError(
            "'output.dir' must be a non-empty string.",
            key="output.dir",
            expected="non-empty string",
            received=out_dir,
        )

    return ExperimentConfig(
        N=N,
        scheme=scheme,
        schedule=schedule,
        seed=seed,
        runs=runs,
        adoption_buckets=buckets,
        free_rider=free_rider,
        out_dir=Path(out_dir),
        version=version,
    )


def load_config(path: Optional[str]) -> ExperimentConfig:
    """Read and validate ``path``; ``None`` gives the built-in defaults."""
    if path is None:
        return default_config()
    source = Path(path)
    if not source.is_file():
        raise ConfigError(f"Config file not found: {path}", key="--config", received=path)
    try:
        with open(source, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as exc:
        raise ConfigError(f"Config file is not valid YAML: {exc}", key="--config") from None
    return parse_config(data)
