"""Tests for the CDO supply tree and the RON ledger."""

import numpy as np
import pytest

from superdist.core.constants import ORIGINATOR_ID, ExternalParty, RonReason
from superdist.core.errors import NodeNotFound, SuperdistError
from superdist.core.market import allocate, scheme_preset
from superdist.core.overlay import (
    CdoGraph,
    RonEntry,
    RonLedger,
    ancestors,
    attach,
    uniform_random_seller,
)


def chain(length: int) -> CdoGraph:
    graph = CdoGraph()
    seller = graph.originator
    for _ in range(length):
        seller = graph.attach(seller, 100)
    return graph


class TestCdoGraph:
    """Growing the supply tree."""

    def test_first_sale(self):
        """The first buyer gets entry index 1 and one edge from the originator."""
        graph, buyer = attach(CdoGraph(), ORIGINATOR_ID, 100, 1.0)

        assert len(graph) == 2
        assert len(graph.edges) == 1
        assert graph.node(buyer).entry_index == 1
        assert graph.edges[0].seller == ORIGINATOR_ID
        assert graph.edges[0].price_paid == 100

    def test_edge_count_after_many_sales(self):
        """N attaches give N edges and N + 1 nodes."""
        rng = np.random.default_rng(3)
        graph = CdoGraph()
        for _ in range(50):
            graph.attach(graph.uniform_random_seller(rng), 100)

        assert len(graph.edges) == 50
        assert len(graph) == 51
        graph.check_tree()

    def test_unknown_seller(self):
        with pytest.raises(NodeNotFound, match="Unknown node: 42"):
            CdoGraph().attach(42, 100)

    def test_negative_price_rejected(self):
        with pytest.raises(SuperdistError, match="price must be >= 0"):
            CdoGraph().attach(ORIGINATOR_ID, -1)

    def test_explicit_node_id(self):
        """Callers may choose ids; entry indices stay contiguous."""
        graph = CdoGraph()
        first = graph.attach(ORIGINATOR_ID, 100, node_id=7)
        second = graph.attach(first, 100, node_id=9)

        assert graph.node(second).entry_index == 2
        assert graph.parent(second) == 7
        graph.check_tree()

    def test_duplicate_node_id(self):
        graph = CdoGraph()
        graph.attach(ORIGINATOR_ID, 100, node_id=5)
        with pytest.raises(SuperdistError, match="already exists"):
            graph.attach(ORIGINATOR_ID, 100, node_id=5)

    def test_quality_bounds(self):
        with pytest.raises(SuperdistError, match="quality"):
            CdoGraph().attach(ORIGINATOR_ID, 100, quality=0.0)


class TestAncestors:
    """Walking the supply tree upwards."""

    def test_full_chain(self):
        graph = chain(3)
        assert ancestors(graph, 3, 3) == [2, 1, ORIGINATOR_ID]

    def test_root_has_none(self):
        assert ancestors(chain(3), ORIGINATOR_ID, 3) == []

    def test_truncated_at_k(self):
        assert ancestors(chain(3), 3, 2) == [2, 1]

    def test_depth_and_subtree(self):
        """Cutting an edge disconnects exactly the buyer's subtree."""
        graph = CdoGraph()
        a = graph.attach(ORIGINATOR_ID, 100)
        b = graph.attach(a, 100)
        c = graph.attach(ORIGINATOR_ID, 100)
        d = graph.attach(b, 100)

        assert graph.depth(d) == 3
        assert graph.subtree(a) == {a, b, d}
        assert graph.subtree(c) == {c}


class TestUniformRandomSeller:
    """Seller draws are uniform over current owners."""

    def test_single_node(self):
        rng = np.random.default_rng(0)
        graph = CdoGraph()
        assert all(uniform_random_seller(graph, rng) == ORIGINATOR_ID for _ in range(20))

    def test_frequencies(self):
        graph = chain(2)
        rng = np.random.default_rng(11)
        draws = np.array([graph.uniform_random_seller(rng) for _ in range(30_000)])
        for node in range(3):
            assert abs(np.mean(draws == node) - 1 / 3) < 0.01

    def test_deterministic(self):
        graph = chain(4)
        first = [graph.uniform_random_seller(np.random.default_rng(5)) for _ in range(3)]
        rng_a, rng_b = np.random.default_rng(9), np.random.default_rng(9)
        seq_a = [graph.uniform_random_seller(rng_a) for _ in range(25)]
        seq_b = [graph.uniform_random_seller(rng_b) for _ in range(25)]

        assert seq_a == seq_b
        assert len(set(first)) == 1


class TestHomogeneity:
    """Market homogeneity metrics."""

    def test_empty_market(self):
        report = CdoGraph().homogeneity()
        assert report.sales == 0
        assert report.max_depth == 0

    def test_chain_is_deep(self):
        report = chain(4).homogeneity()

        assert report.sales == 4
        assert report.max_depth == 4
        assert report.mean_depth == pytest.approx(2.5)
        assert report.max_seller_share == pytest.approx(0.25)

    def test_star_concentrates_sales(self):
        graph = CdoGraph()
        for _ in range(4):
            graph.attach(ORIGINATOR_ID, 100)
        report = graph.homogeneity()

        assert report.max_seller_share == 1.0
        assert report.max_depth == 1
        assert report.outdegree_gini > 0.5


class TestRonLedger:
    """Recording allocations as money flows."""

    def test_record_order_and_labels(self):
        ledger = RonLedger()
        allocation = allocate(100, scheme_preset("potato"), 3, bought_from_peer=True)
        rows = ledger.record(allocation, 4, [3, 2, 1], transaction_index=4)

        assert [r.reason_label for r in rows] == [
            "level_reward(1)",
            "level_reward(2)",
            "level_reward(3)",
            "platform_fee",
            "collector_fee",
            "originator_share",
        ]
        assert [r.payee for r in rows[:3]] == [3, 2, 1]
        assert sum(r.amount for r in rows) == 98
        ledger.check_conservation()

    def test_net_cash(self):
        ledger = RonLedger()
        scheme = scheme_preset("potato")
        ledger.record(allocate(100, scheme, 0, False), 1, [], 1)
        ledger.record(allocate(100, scheme, 1, True), 2, [1], 2)
        net = ledger.net_cash()

        assert net[1] == -100 + 10
        assert net[2] == -98
        assert net[ExternalParty.PLATFORM] == 14 + 12
        assert sum(net.values()) == 0
        assert ledger.received(1, RonReason.LEVEL_REWARD) == 10

    def test_duplicate_transaction(self):
        ledger = RonLedger()
        allocation = allocate(100, scheme_preset("potato"), 0, False)
        ledger.record(allocation, 1, [], 1)
        with pytest.raises(SuperdistError, match="already recorded"):
            ledger.record(allocation, 2, [], 1)

    def test_conservation_violation(self):
        ledger = RonLedger()
        ledger.record(allocate(100, scheme_preset("potato"), 0, False), 1, [], 1)
        ledger.entries.append(
            RonEntry(1, ExternalParty.PLATFORM, 1, RonReason.PLATFORM_FEE, transaction_index=1)
        )
        with pytest.raises(SuperdistError, match="does not conserve money"):
            ledger.check_conservation()

    def test_entries_must_be_positive(self):
        with pytest.raises(SuperdistError, match="strictly positive"):
            RonEntry(1, ExternalParty.PLATFORM, 0, RonReason.PLATFORM_FEE, transaction_index=1)

    def test_transactions_need_edges(self):
        graph = chain(1)
        ledger = RonLedger()
        ledger.record(allocate(100, scheme_preset("potato"), 0, False), 1, [], 1)
        ledger.check_conservation(graph.edges)
        ledger.record(allocate(100, scheme_preset("potato"), 0, False), 2, [], 2)
        with pytest.raises(SuperdistError, match="without a CDO edge"):
            ledger.check_conservation(graph.edges)
