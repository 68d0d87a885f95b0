from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from superdist.cli.config import ExperimentConfig
from superdist.cli.constants import (
    ADOPTION_CSV,
    EDGES_CSV,
    HOMOGENEITY_CSV,
    LEDGER_CSV,
    REVENUE_CSV,
)
from superdist.core.errors import UnsupportedConfig
from superdist.core.export import (
    write_adoption,
    write_edges,
    write_homogeneity,
    write_ledger,
    write_revenue_by_index,
)
from superdist.core.market import revenue_curve
from superdist.core.sim import monte_carlo_revenues, run

logger = logging.getLogger(__name__)

STD_ERRORS_ALLOWED = 4.0


@dataclass
class AnalyticCheck:
    passed: bool
    failures: List[int] = field(default_factory=list)
    worst_z: float = 0.0


@dataclass
class SimulateOutcome:
    legit_fraction: float
    check: Optional[AnalyticCheck] = None


def check_against_analytic(
    config: ExperimentConfig, means: np.ndarray, errors: np.ndarray
) -> AnalyticCheck:
    """Every simulated mean must lie within four standard errors of R(n)."""
    analytic = revenue_curve(config.N, config.scheme, config.schedule, whole_cents=True)
    gap = np.abs(means - analytic)
    allowed = np.maximum(STD_ERRORS_ALLOWED * errors, 1e-9)
    failures = [int(n) for n in np.nonzero(gap > allowed)[0]]
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(errors > 0, gap / errors, 0.0)
    worst = float(z.max()) if z.size else 0.0
    return AnalyticCheck(passed=not failures, failures=failures, worst_z=worst)


def handle_simulate(config: ExperimentConfig, *, check_analytic: bool = False) -> SimulateOutcome:
    """One market run plus per-index revenue statistics, written as CSV."""
    sim_config = config.sim_config()
    out = config.out_dir
    if check_analytic and (config.free_rider is not None or config.runs < 2):
        raise UnsupportedConfig("--check-analytic needs the pure market and --runs >= 2")

    result = run(sim_config)
    write_edges(result.cdo, out / EDGES_CSV)
    write_ledger(result.ledger, out / LEDGER_CSV)
    write_adoption(result.legit_adoption, out / ADOPTION_CSV)
    write_homogeneity(result.homogeneity, out / HOMOGENEITY_CSV)

    check = None
    if config.free_rider is None and config.runs >= 2:
        means, errors = monte_carlo_revenues(sim_config)
        if check_analytic:
            check = check_against_analytic(config, means, errors)
            logger.info("analytic check: worst z = %.3f", check.worst_z)
    else:
        means = np.asarray(result.per_index_revenue, dtype=float)
        errors = np.zeros_like(means)
    write_revenue_by_index(means, errors, out / REVENUE_CSV)
    return SimulateOutcome(legit_fraction=result.legit_fraction, check=check)
