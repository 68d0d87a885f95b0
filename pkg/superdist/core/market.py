"""Economics of a superdistribution market.

Allocation arithmetic is exact: shares are ``Decimal``, payouts are integer
cents rounded half-up, and the originator's residual absorbs the slack so
every allocation sums to the buyer's outlay.

The analytic side models agents entering one at a time, each buying from a
seller drawn uniformly among everyone already in the market (originator
included). The supply tree is then a random recursive tree and

    a_1(n, m) = 1/m
    a_k(n, m) = (1/m) * sum_{j=n+1}^{m-1} a_{k-1}(n, j)

is the probability that entrant n is the level-k ancestor of entrant m.
Expected revenues and effective prices follow from it with saturation
s = n/N.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from functools import lru_cache
from typing import Any, Dict, List, Mapping, Sequence, Tuple, Union

import numpy as np

from superdist.core.constants import Role
from superdist.core.errors import (
    InvalidIndices,
    InvalidPrice,
    InvalidSaturation,
    InvalidSchedule,
    InvalidScheme,
)

logger = logging.getLogger(__name__)

ShareLike = Union[Decimal, str, int, float]


def to_share(value: ShareLike) -> Decimal:
    """Exact decimal share; floats go through ``str`` so 0.1 stays 0.1."""
    if isinstance(value, Decimal):
        return value
    if isinstance(value, bool):
        raise InvalidScheme(f"share must be a number, got {value!r}")
    return Decimal(str(value))


def round_half_up(value: Decimal) -> int:
    return int(value.quantize(Decimal(1), rounding=ROUND_HALF_UP))


def level_role(k: int) -> str:
    return f"{Role.LEVEL.value}({k})"


# --- remuneration ----------------------------------------------------------


@dataclass(frozen=True)
class RemunerationScheme:
    """Shares of the purchase price; the originator receives the residual."""

    level_shares: Tuple[Decimal, ...] = ()
    platform_share: Decimal = Decimal(0)
    collector_share: Decimal = Decimal(0)
    peer_rebate: Decimal = Decimal(0)
    name: str = "custom"

    def __post_init__(self) -> None:
        object.__setattr__(self, "level_shares", tuple(to_share(s) for s in self.level_shares))
        for attr in ("platform_share", "collector_share", "peer_rebate"):
            object.__setattr__(self, attr, to_share(getattr(self, attr)))
        shares = [*self.level_shares, self.platform_share, self.collector_share, self.peer_rebate]
        if any(s < 0 for s in shares):
            raise InvalidScheme("all shares must be >= 0")
        if sum(self.level_shares, Decimal(0)) + self.platform_share + self.collector_share > 1:
            raise InvalidScheme("level, platform and collector shares exceed the price")
        if self.peer_rebate > self.platform_share:
            raise InvalidScheme("peer_rebate is borne by the platform and cannot exceed its share")

    @property
    def levels(self) -> int:
        return len(self.level_shares)

    @property
    def originator_share(self) -> Decimal:
        return 1 - sum(self.level_shares, Decimal(0)) - self.platform_share - self.collector_share

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "level_shares": [str(s) for s in self.level_shares],
            "platform_share": str(self.platform_share),
            "collector_share": str(self.collector_share),
            "peer_rebate": str(self.peer_rebate),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "RemunerationScheme":
        return cls(
            level_shares=tuple(to_share(s) for s in data.get("level_shares", ())),
            platform_share=to_share(data.get("platform_share", 0)),
            collector_share=to_share(data.get("collector_share", 0)),
            peer_rebate=to_share(data.get("peer_rebate", 0)),
            name=data.get("name", "custom"),
        )


SCHEME_PRESETS: Dict[str, Dict[str, Any]] = {
    # 58% originator residual is a default inside the 55-70% artist range.
    "potato": {
        "level_shares": ("0.10", "0.03", "0.01"),
        "platform_share": "0.14",
        "collector_share": "0.14",
        "peer_rebate": "0.02",
    },
    "zero": {
        "level_shares": (),
        "platform_share": "0.14",
        "collector_share": "0.14",
        "peer_rebate": "0.02",
    },
}


def scheme_preset(name: str) -> RemunerationScheme:
    try:
        preset = SCHEME_PRESETS[name]
    except KeyError:
        raise InvalidScheme(
            f"Unknown scheme preset '{name}'. Choose from: {', '.join(sorted(SCHEME_PRESETS))}"
        ) from None
    return RemunerationScheme(name=name, **preset)


@dataclass(frozen=True)
class Allocation:
    buyer_outlay: int
    payouts: Dict[str, int] = field(default_factory=dict)
    rebate: int = 0

    def __post_init__(self) -> None:
        if sum(self.payouts.values()) != self.buyer_outlay:
            raise InvalidPrice("allocation does not sum to the buyer outlay")

    @property
    def levels(self) -> List[int]:
        """Level payouts, level 1 first."""
        found = []
        k = 1
        while level_role(k) in self.payouts:
            found.append(self.payouts[level_role(k)])
            k += 1
        return found


def allocate(
    price: int,
    scheme: RemunerationScheme,
    available_ancestors: int,
    bought_from_peer: bool,
) -> Allocation:
    """Split one sale among resellers, platform, collector and originator.

    Levels beyond ``available_ancestors`` fold into the originator residual.
    A peer purchase is cheaper by the rebate, which comes out of the platform
    payout. Payouts are taken in order (levels, platform, collector) and each
    is capped at what is left, so rounding never drives the residual negative.
    """
    if price < 0:
        raise InvalidPrice(f"price must be >= 0, got {price}")
    if available_ancestors < 0:
        raise InvalidPrice(f"available_ancestors must be >= 0, got {available_ancestors}")
    rebate = round_half_up(scheme.peer_rebate * price) if bought_from_peer else 0
    outlay = price - rebate
    remaining = outlay
    payouts: Dict[str, int] = {}

    def take(role: str, amount: int) -> None:
        nonlocal remaining
        paid = max(0, min(amount, remaining))
        payouts[role] = paid
        remaining -= paid

    for k, share in enumerate(scheme.level_shares[:available_ancestors], start=1):
        take(level_role(k), round_half_up(share * price))
    take(Role.PLATFORM.value, round_half_up(scheme.platform_share * price) - rebate)
    take(Role.COLLECTOR.value, round_half_up(scheme.collector_share * price))
    payouts[Role.ORIGINATOR.value] = remaining
    return Allocation(buyer_outlay=outlay, payouts=payouts, rebate=rebate)


# --- price schedules -------------------------------------------------------


@dataclass(frozen=True)
class Constant:
    p: int

    def __post_init__(self) -> None:
        if self.p < 0:
            raise InvalidSchedule(f"price must be >= 0, got {self.p}")


@dataclass(frozen=True)
class PiecewiseLinear:
    breakpoints: Tuple[Tuple[float, int], ...]

    def __post_init__(self) -> None:
        points = tuple((float(s), int(p)) for s, p in self.breakpoints)
        object.__setattr__(self, "breakpoints", points)
        if len(points) < 2:
            raise InvalidSchedule("need at least two breakpoints")
        saturations = [s for s, _ in points]
        if saturations[0] != 0.0 or saturations[-1] != 1.0:
            raise InvalidSchedule("breakpoints must cover [0, 1]")
        if any(b <= a for a, b in zip(saturations, saturations[1:])):
            raise InvalidSchedule("breakpoint saturations must be strictly increasing")
        if any(p < 0 for _, p in points):
            raise InvalidSchedule("prices must be >= 0")


@dataclass(frozen=True)
class Table:
    """Prices indexed by entry index; ``prices[n]`` applies at saturation n/N."""

    prices: Tuple[int, ...]
    market_size: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "prices", tuple(int(p) for p in self.prices))
        if self.market_size < 1:
            raise InvalidSchedule("market_size must be >= 1")
        if len(self.prices) != self.market_size + 1:
            raise InvalidSchedule("Table needs market_size + 1 prices (entry indices 0..N)")
        if any(p < 0 for p in self.prices):
            raise InvalidSchedule("prices must be >= 0")


PriceSchedule = Union[Constant, PiecewiseLinear, Table]


def price_at(schedule: PriceSchedule, s: float) -> int:
    if not 0 <= s <= 1:
        raise InvalidSaturation(f"saturation must be in [0, 1], got {s}")
    match schedule:
        case Constant(p=p):
            return p
        case PiecewiseLinear(breakpoints=points):
            xs = [x for x, _ in points]
            ys = [y for _, y in points]
            return math.floor(float(np.interp(s, xs, ys)) + 0.5)
        case Table(prices=prices, market_size=size):
            # Tolerate s = n/N landing a hair below n.
            return prices[min(size, math.floor(s * size + 1e-9))]
    raise InvalidSchedule(f"Unknown schedule: {schedule!r}")


def illustrative_schedules() -> Dict[str, PriceSchedule]:
    """A flat and a falling price curve, both averaging 100 cents."""
    return {
        "constant": Constant(100),
        "decreasing": PiecewiseLinear(((0.0, 150), (1.0, 50))),
    }


# --- random recursive tree analytics --------------------------------------


@lru_cache(maxsize=8)
def ancestor_table(N: int, K: int) -> np.ndarray:
    """``table[k - 1, n, m]`` = a_k(n, m) for entry indices 0..N and levels 1..K.

    Row n = 0 is the originator. The array is read-only and cached per (N, K).
    """
    if N < 0 or K < 0:
        raise InvalidIndices(f"N and K must be >= 0, got N={N}, K={K}")
    table = np.zeros((K, N + 1, N + 1))
    if K and N:
        m = np.arange(1, N + 1)
        upper = np.triu(np.ones((N + 1, N + 1)), k=1)
        table[0] = upper / np.concatenate(([1.0], m))[None, :]
        for k in range(1, K):
            # a_{k-1}(n, j) vanishes for j <= n, so the prefix sum over j < m is the DP sum.
            prefix = np.cumsum(table[k - 1], axis=1)
            table[k, :, 1:] = prefix[:, :-1] / m[None, :]
    table.setflags(write=False)
    logger.debug("built ancestor table N=%s K=%s", N, K)
    return table


def ancestor_prob(n: int, m: int, k: int) -> float:
    """Probability that entrant n is the level-k ancestor of entrant m."""
    if not 1 <= n < m or k < 1:
        raise InvalidIndices(f"need 1 <= n < m and k >= 1, got n={n}, m={m}, k={k}")
    return float(ancestor_table(m, k)[k - 1, n, m])


def _prices(N: int, schedule: PriceSchedule) -> np.ndarray:
    if N == 0:
        return np.zeros(1)
    return np.array([price_at(schedule, m / N) for m in range(N + 1)], dtype=float)


def revenue_curve(
    N: int,
    scheme: RemunerationScheme,
    schedule: PriceSchedule,
    *,
    whole_cents: bool = False,
) -> np.ndarray:
    """Expected level-reward income R(n) for every n = 0..N, in cents.

    The originator (n = 0) never earns level rewards, so R(0) = 0. With
    ``whole_cents`` each reward is the rounded amount ``allocate`` pays rather
    than the exact share of the price.
    """
    if N < 0:
        raise InvalidIndices(f"N must be >= 0, got {N}")
    revenue = np.zeros(N + 1)
    if N == 0 or scheme.levels == 0:
        return revenue
    table = ancestor_table(N, scheme.levels)
    prices = _prices(N, schedule)
    if whole_cents:
        paid = np.array(
            [allocate(int(p), scheme, scheme.levels, True).levels for p in prices], dtype=float
        )
        for k in range(scheme.levels):
            revenue += table[k] @ paid[:, k]
    else:
        for k, share in enumerate(scheme.level_shares):
            revenue += float(share) * (table[k] @ prices)
    revenue[0] = 0.0
    return revenue


def _check_n(n: int, N: int) -> None:
    if not 0 <= n <= N:
        raise InvalidIndices(f"need 0 <= n <= N, got n={n}, N={N}")


def expected_revenue(
    n: int, N: int, scheme: RemunerationScheme, schedule: PriceSchedule
) -> float:
    _check_n(n, N)
    return float(revenue_curve(N, scheme, schedule)[n])


def effective_price(n: int, N: int, scheme: RemunerationScheme, schedule: PriceSchedule) -> float:
    """Price paid at entry minus expected resale revenue; negative when entry pays off."""
    _check_n(n, N)
    if N == 0:
        raise InvalidIndices("effective price needs a market of size >= 1")
    return price_at(schedule, n / N) - expected_revenue(n, N, scheme, schedule)


@dataclass(frozen=True)
class CurveRow:
    saturation: float
    price: int
    expected_revenue: float
    effective_price: float


def curve(N: int, scheme: RemunerationScheme, schedule: PriceSchedule) -> List[CurveRow]:
    if N < 1:
        raise InvalidIndices(f"N must be >= 1, got {N}")
    revenue = revenue_curve(N, scheme, schedule)
    rows = []
    for n in range(1, N + 1):
        price = price_at(schedule, n / N)
        rows.append(
            CurveRow(
                saturation=n / N,
                price=price,
                expected_revenue=float(revenue[n]),
                effective_price=price - float(revenue[n]),
            )
        )
    return rows


def effective_price_curve(
    N: int, scheme: RemunerationScheme, schedule: PriceSchedule
) -> np.ndarray:
    """e(n) for n = 0..N as one array (entry 0 is the price at saturation 0)."""
    return _prices(N, schedule) - revenue_curve(N, scheme, schedule)


def levels_paid(ancestors: Sequence[int], originator: int, K: int) -> int:
    """How many of the first K ancestors are resellers rather than the originator."""
    count = 0
    for node in ancestors[:K]:
        if node == originator:
            break
        count += 1
    return count

