from __future__ import annotations

from enum import Enum, IntEnum

CONFIG_SCHEMA_VERSION = 1


class Subcommand(str, Enum):
    ANALYZE = "analyze"
    SIMULATE = "simulate"
    POTATO_DEMO = "potato-demo"
    PARADISO_DEMO = "paradiso-demo"
    VERIFY = "verify"

    @classmethod
    def values(cls) -> set[str]:
        return {command.value for command in cls}


class ExitCode(IntEnum):
    OK = 0
    CHECK_FAILED = 1
    USAGE = 2


SCHEDULE_TYPES_ENUM = ("constant", "piecewise_linear", "table")
SCHEDULE_TYPES = set(SCHEDULE_TYPES_ENUM)

CONFIG_SECTIONS = {"version", "market", "schedule", "simulation", "free_rider", "output"}
MARKET_KEYS = {"N", "scheme"}
SCHEME_KEYS = {"name", "level_shares", "platform_share", "collector_share", "peer_rebate"}
SIMULATION_KEYS = {"seed", "runs", "adoption_buckets"}
FREE_RIDER_KEYS = {"free_quality", "risk_cost", "valuation_low", "valuation_high", "price_unit"}
OUTPUT_KEYS = {"dir"}

DEFAULT_N = 100
DEFAULT_RUNS = 1000
DEFAULT_OUT = "out"

CURVE_CSV = "curve.csv"
EDGES_CSV = "edges.csv"
LEDGER_CSV = "ledger.csv"
ADOPTION_CSV = "adoption.csv"
REVENUE_CSV = "revenue_by_index.csv"
HOMOGENEITY_CSV = "homogeneity.csv"
RECEIPTS_CSV = "receipts.csv"
TANS_CSV = "tans.csv"
VALID_FIXTURE = "valid.sdc"
TAMPERED_FIXTURE = "tampered.sdc"
ORIGINATOR_KEY_FILE = "originator.pub"
