"""Agent-entry simulation of a superdistribution market.

Agents 1..N enter in order. Each buys from a seller drawn uniformly among the
current legitimate owners (originator included), which grows the CDO as a
random recursive tree; every sale is split by ``market.allocate`` and written
to the RON ledger. With a free-rider configuration, each entrant first
compares the legitimate good against a free copy.

The free-rider choice model uses linear utility and uniform valuations.
Agents price in the analytic expected revenue as if every later entrant
bought legitimately. It is not calibrated against real behaviour.

Run ``r`` of a Monte Carlo batch is seeded with ``mix_seed(config.seed, r)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from superdist.core.constants import ORIGINATOR_ID, Choice, RonReason
from superdist.core.errors import InvalidIndices, SuperdistError, UnsupportedConfig
from superdist.core.market import (
    PriceSchedule,
    RemunerationScheme,
    allocate,
    effective_price,
    effective_price_curve,
    levels_paid,
    price_at,
)
from superdist.core.overlay import CdoGraph, HomogeneityReport, NodeId, Party, RonLedger

logger = logging.getLogger(__name__)

SellerPicker = Callable[[Sequence[NodeId], np.random.Generator], NodeId]

_MASK64 = (1 << 64) - 1


def mix_seed(seed: int, r: int) -> int:
    """SplitMix64 finaliser over ``seed + (r + 1) * golden gamma`` (mod 2**64)."""
    z = (seed + (r + 1) * 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class FreeRiderConfig:
    """Competing free copy.

    Valuations are drawn from U[valuation_low, valuation_high] in units of
    ``price_unit`` cents; ``risk_cost`` is in cents.
    """

    free_quality: float = 0.8
    risk_cost: float = 30.0
    valuation_low: float = 0.0
    valuation_high: float = 2.0
    price_unit: int = 100

    def __post_init__(self) -> None:
        if not 0 <= self.free_quality <= 1:
            raise SuperdistError(f"free_quality must be in [0, 1], got {self.free_quality}")
        if self.risk_cost < 0:
            raise SuperdistError(f"risk_cost must be >= 0, got {self.risk_cost}")
        if self.valuation_low > self.valuation_high:
            raise SuperdistError("valuation_low must not exceed valuation_high")
        if self.price_unit <= 0:
            raise SuperdistError("price_unit must be positive")


@dataclass(frozen=True)
class SimConfig:
    N: int
    scheme: RemunerationScheme
    schedule: PriceSchedule
    seed: int = 0
    free_rider: Optional[FreeRiderConfig] = None
    runs: int = 1
    adoption_buckets: int = 10

    def __post_init__(self) -> None:
        if self.N < 0:
            raise SuperdistError(f"N must be >= 0, got {self.N}")
        if self.runs < 1:
            raise SuperdistError(f"runs must be >= 1, got {self.runs}")
        if self.adoption_buckets < 1:
            raise SuperdistError("adoption_buckets must be >= 1")
        if not 0 <= self.seed <= _MASK64:
            raise SuperdistError("seed must be an unsigned 64-bit integer")


@dataclass
class SimResult:
    """Outcome of one market run.

    ``per_index_revenue[i]`` is the level-reward income of the owner with CDO
    entry index i. Free riders take no entry index, so i can differ from the
    owner's agent id.
    """

    cdo: CdoGraph
    ledger: RonLedger
    net_cash: Dict[Party, int]
    legit_adoption: List[Tuple[float, float]]
    per_index_revenue: List[int]
    homogeneity: HomogeneityReport
    entrants: int = 0

    @property
    def legit_fraction(self) -> float:
        """Share of all entrants who bought the legitimate good."""
        if self.entrants == 0:
            return 1.0
        return (len(self.cdo) - 1) / self.entrants


def _prefers_legit(valuation: float, effective_cents: float, fr: FreeRiderConfig) -> bool:
    utility_legit = valuation - effective_cents / fr.price_unit
    utility_free = valuation * fr.free_quality - fr.risk_cost / fr.price_unit
    return utility_legit >= utility_free


def choose(
    valuation: float,
    n: int,
    N: int,
    scheme: RemunerationScheme,
    schedule: PriceSchedule,
    fr: FreeRiderConfig,
) -> Choice:
    """Legit iff its utility is at least the free copy's (ties go to Legit)."""
    e = effective_price(n, N, scheme, schedule)
    return Choice.LEGIT if _prefers_legit(valuation, e, fr) else Choice.FREE


def _seller_draws(rng: np.random.Generator, N: int) -> np.ndarray:
    """Index of the seller of entrant m among owners 0..m-1, for m = 1..N."""
    if N == 0:
        return np.zeros(0, dtype=np.int64)
    return rng.integers(0, np.arange(1, N + 1))


def _adoption(choices: Sequence[bool], buckets: int) -> List[Tuple[float, float]]:
    N = len(choices)
    legit = [0] * buckets
    total = [0] * buckets
    for n, bought in enumerate(choices, start=1):
        b = ((n - 1) * buckets) // N
        total[b] += 1
        legit[b] += int(bought)
    return [(b / buckets, legit[b] / total[b]) for b in range(buckets) if total[b]]


def _simulate(
    config: SimConfig,
    pick_seller: Optional[SellerPicker],
    effective: Optional[np.ndarray],
) -> SimResult:
    rng = np.random.default_rng(config.seed)
    N, scheme, schedule, fr = config.N, config.scheme, config.schedule, config.free_rider
    K = scheme.levels
    graph = CdoGraph()
    ledger = RonLedger()
    owners: List[NodeId] = [graph.originator]
    choices: List[bool] = []
    draws = _seller_draws(rng, N) if fr is None and pick_seller is None else None
    if fr is not None and effective is None:
        effective = effective_price_curve(N, scheme, schedule)

    for n in range(1, N + 1):
        if fr is not None:
            valuation = rng.uniform(fr.valuation_low, fr.valuation_high)
            if not _prefers_legit(valuation, float(effective[n]), fr):
                choices.append(False)
                continue
        choices.append(True)
        if pick_seller is not None:
            seller = pick_seller(owners, rng)
        elif draws is not None:
            seller = owners[int(draws[n - 1])]
        else:
            seller = owners[int(rng.integers(len(owners)))]
        price = price_at(schedule, n / N)
        buyer = graph.attach(seller, price, node_id=n)
        upline = graph.ancestors(buyer, K)
        paid_levels = levels_paid(upline, graph.originator, K)
        allocation = allocate(price, scheme, paid_levels, bought_from_peer=seller != ORIGINATOR_ID)
        ledger.record(allocation, buyer, upline[:paid_levels], graph.node(buyer).entry_index)
        owners.append(buyer)

    revenue = [0] * (N + 1)
    for entry in ledger.entries:
        if entry.reason is RonReason.LEVEL_REWARD:
            revenue[graph.node(entry.payee).entry_index] += entry.amount

    logger.debug("simulated N=%s seed=%s: %s legit sales", N, config.seed, len(graph) - 1)
    return SimResult(
        cdo=graph,
        ledger=ledger,
        net_cash=ledger.net_cash(),
        legit_adoption=_adoption(choices, config.adoption_buckets),
        per_index_revenue=revenue,
        homogeneity=graph.homogeneity(),
        entrants=N,
    )


def run(config: SimConfig, *, pick_seller: Optional[SellerPicker] = None) -> SimResult:
    """One deterministic market run.

    ``pick_seller(owners, rng)`` replaces the uniform seller draw, e.g. to force
    a chain by always returning ``owners[-1]``.
    """
    return _simulate(config, pick_seller, None)


def monte_carlo_revenues(config: SimConfig) -> Tuple[np.ndarray, np.ndarray]:
    """Mean and standard error of level-reward income for every entry index 0..N.

    Each run draws the same seller sequence ``run`` would with seed
    ``mix_seed(config.seed, r)``, but only tracks reward income.
    """
    if config.free_rider is not None:
        raise UnsupportedConfig("Monte Carlo revenue needs the pure market (no free riders)")
    if config.runs < 2:
        raise UnsupportedConfig("Monte Carlo revenue needs runs >= 2")
    N, K, runs = config.N, config.scheme.levels, config.runs
    sums = np.zeros(N + 1)
    squares = np.zeros(N + 1)
    if N == 0 or K == 0:
        return sums, squares

    # pay[k, m]: level-(k+1) reward from entrant m's purchase, as allocate pays it.
    pay = np.zeros((K, N + 1), dtype=np.int64)
    for m in range(1, N + 1):
        levels = allocate(price_at(config.schedule, m / N), config.scheme, K, True).levels
        pay[:, m] = levels
    buyers = np.arange(N + 1)

    for r in range(runs):
        rng = np.random.default_rng(mix_seed(config.seed, r))
        parent = np.concatenate(([0], _seller_draws(rng, N)))
        income = np.zeros(N + 1, dtype=np.int64)
        node = buyers.copy()
        active = buyers > 0
        for k in range(K):
            node = np.where(active, parent[node], 0)
            active &= node > 0
            np.add.at(income, node[active], pay[k][active])
        sums += income
        squares += income.astype(float) ** 2

    mean = sums / runs
    variance = np.maximum(squares - runs * mean**2, 0.0) / (runs - 1)
    logger.info("Monte Carlo revenue: N=%s runs=%s", N, runs)
    return mean, np.sqrt(variance / runs)


def monte_carlo_revenue(config: SimConfig, n: int) -> Tuple[float, float]:
    if not 0 <= n <= config.N:
        raise InvalidIndices(f"need 0 <= n <= N, got n={n}, N={config.N}")
    means, errors = monte_carlo_revenues(config)
    return float(means[n]), float(errors[n])


@dataclass(frozen=True)
class AdoptionSummary:
    mean: float
    std_error: float
    per_seed: List[float] = field(default_factory=list)


def free_rider_experiment(config: SimConfig, seeds: int) -> AdoptionSummary:
    """Mean legitimate-adoption fraction over ``seeds`` independent runs."""
    if config.free_rider is None:
        raise UnsupportedConfig("free_rider_experiment needs a free_rider configuration")
    if seeds < 2:
        raise UnsupportedConfig("free_rider_experiment needs seeds >= 2")
    effective = effective_price_curve(config.N, config.scheme, config.schedule)
    fractions = [
        _simulate(replace(config, seed=mix_seed(config.seed, i)), None, effective).legit_fraction
        for i in range(seeds)
    ]
    values = np.array(fractions)
    return AdoptionSummary(
        mean=float(values.mean()),
        std_error=float(values.std(ddof=1) / np.sqrt(seeds)),
        per_seed=fractions,
    )
