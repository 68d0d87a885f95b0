"""Content distribution overlay (CDO) and remuneration overlay (RON).

The CDO is the directed supply tree over which a good flows from earlier
entrants to later ones. The RON is the ledger of money flows the
remuneration rules generate from it. Originator, platform and collector
follow the party model in ``superdist.core.constants``: the originator is
node 0 of the CDO, the other two appear in the ledger only.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np

from superdist.core.constants import ORIGINATOR_ID, ExternalParty, NodeKind, RonReason, Role
from superdist.core.errors import EmptyGraph, InvalidPrice, NodeNotFound, SuperdistError

if TYPE_CHECKING:
    from superdist.core.market import Allocation

logger = logging.getLogger(__name__)

NodeId = int
Party = Union[NodeId, ExternalParty]


def party_label(party: Party) -> str:
    if isinstance(party, ExternalParty):
        return party.value
    return str(party)


@dataclass(frozen=True)
class CdoNode:
    id: NodeId
    entry_index: int
    kind: NodeKind = NodeKind.TRADER
    position: Optional[Tuple[float, float]] = None
    acquired_quality: float = 1.0

    def __post_init__(self) -> None:
        if self.entry_index < 0:
            raise SuperdistError(f"entry_index must be >= 0, got {self.entry_index}")
        if not 0 < self.acquired_quality <= 1:
            raise SuperdistError(f"quality must be in (0, 1], got {self.acquired_quality}")
        if (self.kind is NodeKind.ORIGINATOR) != (self.entry_index == 0):
            raise SuperdistError("the originator and only the originator has entry_index 0")


@dataclass(frozen=True)
class CdoEdge:
    seller: NodeId
    buyer: NodeId
    price_paid: int
    quality: float
    entry_index: int


class CdoGraph:
    """Supply tree rooted at the originator.

    A single-writer structure: ``attach`` mutates in place, ``copy`` gives an
    independent snapshot that is safe to share read-only.
    """

    def __init__(self, originator_position: Optional[Tuple[float, float]] = None) -> None:
        self._g = nx.DiGraph()
        self._by_entry: List[NodeId] = []
        root = CdoNode(
            id=ORIGINATOR_ID,
            entry_index=0,
            kind=NodeKind.ORIGINATOR,
            position=originator_position,
        )
        self._g.add_node(root.id, node=root)
        self._by_entry.append(root.id)

    def __len__(self) -> int:
        return self._g.number_of_nodes()

    def __contains__(self, node: object) -> bool:
        return node in self._g

    @property
    def originator(self) -> NodeId:
        return self._by_entry[0]

    @property
    def nodes(self) -> List[CdoNode]:
        """Nodes in entry order."""
        return [self._g.nodes[n]["node"] for n in self._by_entry]

    @property
    def edges(self) -> List[CdoEdge]:
        """Supply edges in entry order of their buyers."""
        return [self._g.edges[self.parent(n), n]["edge"] for n in self._by_entry[1:]]

    def node(self, node: NodeId) -> CdoNode:
        self._require(node)
        return self._g.nodes[node]["node"]

    def parent(self, node: NodeId) -> Optional[NodeId]:
        self._require(node)
        preds = list(self._g.predecessors(node))
        return preds[0] if preds else None

    def attach(
        self,
        seller: NodeId,
        price: int,
        quality: float = 1.0,
        *,
        node_id: Optional[NodeId] = None,
        position: Optional[Tuple[float, float]] = None,
    ) -> NodeId:
        """Add a buyer supplied by ``seller`` and return its id.

        The new node's entry_index is the previous node count. Its id defaults
        to that entry index; callers that track agents outside the CDO (the
        simulator with free riders) pass their own ``node_id``.
        """
        self._require(seller)
        if price < 0:
            raise InvalidPrice(f"price must be >= 0, got {price}")
        entry_index = len(self._by_entry)
        buyer = entry_index if node_id is None else node_id
        if buyer in self._g:
            raise SuperdistError(f"node {buyer} already exists")
        node = CdoNode(
            id=buyer,
            entry_index=entry_index,
            kind=NodeKind.TRADER,
            position=position,
            acquired_quality=quality,
        )
        edge = CdoEdge(
            seller=seller,
            buyer=buyer,
            price_paid=price,
            quality=quality,
            entry_index=entry_index,
        )
        self._g.add_node(buyer, node=node)
        self._g.add_edge(seller, buyer, edge=edge)
        self._by_entry.append(buyer)
        logger.debug("attach %s -> %s at %s cents (entry %s)", seller, buyer, price, entry_index)
        return buyer

    def ancestors(self, node: NodeId, k: int) -> List[NodeId]:
        """Up to ``k`` ancestors of ``node``, nearest first."""
        self._require(node)
        found: List[NodeId] = []
        current = self.parent(node)
        while current is not None and len(found) < k:
            found.append(current)
            current = self.parent(current)
        return found

    def uniform_random_seller(self, rng: np.random.Generator) -> NodeId:
        if not self._by_entry:
            raise EmptyGraph("graph has no nodes")
        return self._by_entry[int(rng.integers(len(self._by_entry)))]

    def subtree(self, node: NodeId) -> set[NodeId]:
        """``node`` and everything it supplied, directly or indirectly."""
        self._require(node)
        return {node} | nx.descendants(self._g, node)

    def depth(self, node: NodeId) -> int:
        self._require(node)
        return nx.shortest_path_length(self._g, self.originator, node)

    def check_tree(self) -> None:
        """Raise ``SuperdistError`` unless every CDO invariant holds."""
        if self._g.number_of_edges() != self._g.number_of_nodes() - 1:
            raise SuperdistError("edge count must be node count - 1")
        if not nx.is_arborescence(self._g):
            raise SuperdistError("CDO is not a tree rooted at the originator")
        entries = [self._g.nodes[n]["node"].entry_index for n in self._by_entry]
        if entries != list(range(len(entries))):
            raise SuperdistError("entry indices are not contiguous from 0")
        for seller, buyer, data in self._g.edges(data=True):
            if self.node(seller).entry_index >= self.node(buyer).entry_index:
                raise SuperdistError(f"edge {seller}->{buyer} runs against entry order")
            if data["edge"].entry_index != self.node(buyer).entry_index:
                raise SuperdistError(f"edge {seller}->{buyer} has a stale entry index")

    def copy(self) -> "CdoGraph":
        clone = CdoGraph.__new__(CdoGraph)
        clone._g = self._g.copy()
        clone._by_entry = list(self._by_entry)
        return clone

    def homogeneity(self) -> "HomogeneityReport":
        return homogeneity(self)

    def _require(self, node: NodeId) -> None:
        if node not in self._g:
            raise NodeNotFound(node)


def attach(
    graph: CdoGraph, seller: NodeId, price: int, quality: float = 1.0
) -> Tuple[CdoGraph, NodeId]:
    """Functional form of ``CdoGraph.attach``; returns the (mutated) graph and the new id."""
    return graph, graph.attach(seller, price, quality)


def ancestors(graph: CdoGraph, node: NodeId, k: int) -> List[NodeId]:
    return graph.ancestors(node, k)


def uniform_random_seller(graph: CdoGraph, rng: np.random.Generator) -> NodeId:
    return graph.uniform_random_seller(rng)


@dataclass(frozen=True)
class HomogeneityReport:
    """How evenly sales spread over the sellers of a CDO."""

    sales: int
    max_seller_share: float
    outdegree_gini: float
    mean_depth: float
    max_depth: int

    def to_dict(self) -> Dict[str, float]:
        return {
            "sales": self.sales,
            "max_seller_share": self.max_seller_share,
            "outdegree_gini": self.outdegree_gini,
            "mean_depth": self.mean_depth,
            "max_depth": self.max_depth,
        }


def homogeneity(graph: CdoGraph) -> HomogeneityReport:
    g = graph._g
    sales = g.number_of_edges()
    if sales == 0:
        return HomogeneityReport(0, 0.0, 0.0, 0.0, 0)
    degrees = np.sort(np.array([g.out_degree(n) for n in g.nodes], dtype=float))
    n = degrees.size
    ranks = np.arange(1, n + 1)
    gini = float((2.0 * np.sum(ranks * degrees)) / (n * degrees.sum()) - (n + 1) / n)
    depths = nx.single_source_shortest_path_length(g, graph.originator)
    buyer_depths = [d for node, d in depths.items() if node != graph.originator]
    return HomogeneityReport(
        sales=sales,
        max_seller_share=float(degrees[-1] / sales),
        outdegree_gini=gini,
        mean_depth=float(np.mean(buyer_depths)),
        max_depth=int(max(buyer_depths)),
    )


@dataclass(frozen=True)
class RonEntry:
    payer: Party
    payee: Party
    amount: int
    reason: RonReason
    transaction_index: int
    level: Optional[int] = None

    def __post_init__(self) -> None:
        if self.amount <= 0:
            raise SuperdistError(f"RON amounts are strictly positive, got {self.amount}")
        if (self.reason is RonReason.LEVEL_REWARD) != (self.level is not None):
            raise SuperdistError("level is set exactly for level_reward entries")

    @property
    def reason_label(self) -> str:
        if self.reason is RonReason.LEVEL_REWARD:
            return f"{self.reason.value}({self.level})"
        return self.reason.value


_ROLE_PAYEES = {
    Role.PLATFORM: (ExternalParty.PLATFORM, RonReason.PLATFORM_FEE),
    Role.COLLECTOR: (ExternalParty.COLLECTOR, RonReason.COLLECTOR_FEE),
    Role.ORIGINATOR: (ExternalParty.ORIGINATOR_ACCOUNT, RonReason.ORIGINATOR_SHARE),
}


@dataclass
class RonLedger:
    entries: List[RonEntry] = field(default_factory=list)
    outlays: Dict[int, int] = field(default_factory=dict)

    def record(
        self,
        allocation: "Allocation",
        payer: Party,
        level_payees: Sequence[Party],
        transaction_index: int,
    ) -> List[RonEntry]:
        """Append the ledger rows for one sale.

        ``level_payees[k - 1]`` receives the level-k reward. Zero payouts are
        not written; the buyer's outlay is kept per transaction for
        conservation checks.
        """
        if transaction_index in self.outlays:
            raise SuperdistError(f"transaction {transaction_index} already recorded")
        if len(level_payees) < len(allocation.levels):
            raise SuperdistError("fewer level payees than allocated levels")
        rows: List[RonEntry] = []
        for k, amount in enumerate(allocation.levels, start=1):
            if amount > 0:
                rows.append(
                    RonEntry(
                        payer=payer,
                        payee=level_payees[k - 1],
                        amount=amount,
                        reason=RonReason.LEVEL_REWARD,
                        transaction_index=transaction_index,
                        level=k,
                    )
                )
        for role in (Role.PLATFORM, Role.COLLECTOR, Role.ORIGINATOR):
            amount = allocation.payouts[role.value]
            if amount > 0:
                payee, reason = _ROLE_PAYEES[role]
                rows.append(
                    RonEntry(
                        payer=payer,
                        payee=payee,
                        amount=amount,
                        reason=reason,
                        transaction_index=transaction_index,
                    )
                )
        self.entries.extend(rows)
        self.outlays[transaction_index] = allocation.buyer_outlay
        return rows

    def by_transaction(self) -> Dict[int, List[RonEntry]]:
        grouped: Dict[int, List[RonEntry]] = defaultdict(list)
        for entry in self.entries:
            grouped[entry.transaction_index].append(entry)
        return dict(grouped)

    def received(self, party: Party, reason: Optional[RonReason] = None) -> int:
        return sum(
            e.amount
            for e in self.entries
            if e.payee == party and (reason is None or e.reason is reason)
        )

    def net_cash(self) -> Dict[Party, int]:
        """Received minus paid, per party."""
        net: Dict[Party, int] = defaultdict(int)
        for entry in self.entries:
            net[entry.payee] += entry.amount
            net[entry.payer] -= entry.amount
        return dict(net)

    def check_conservation(self, edges: Optional[Iterable[CdoEdge]] = None) -> None:
        """Raise unless each transaction's payouts sum exactly to the buyer's outlay.

        With ``edges``, also require every transaction to stem from one of them.
        """
        grouped = self.by_transaction()
        for index, outlay in self.outlays.items():
            rows = grouped.get(index, [])
            if sum(e.amount for e in rows) != outlay:
                raise SuperdistError(f"transaction {index} does not conserve money")
            if len({e.payer for e in rows}) > 1:
                raise SuperdistError(f"transaction {index} has more than one payer")
        if set(grouped) - set(self.outlays):
            raise SuperdistError("ledger rows without a recorded outlay")
        if edges is not None:
            known = {edge.entry_index for edge in edges}
            stray = set(grouped) - known
            if stray:
                raise SuperdistError(f"transactions without a CDO edge: {sorted(stray)}")
