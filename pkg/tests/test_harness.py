"""Tests for the in-memory message harness and the two protocol sessions."""

import numpy as np
import pytest

from superdist.cli.handlers.demos import EXPECTED_POTATO_LEDGER, ledger_rows
from superdist.core.errors import NotInCatalog, RedistributionDenied, SuperdistError
from superdist.core.licences import AllowAll, DenyAll, make_good
from superdist.core.market import Constant, scheme_preset
from superdist.protocol.accounting import AccountingService, tan_from_file_name
from superdist.protocol.container import package, verify
from superdist.protocol.crypto import HashSuite
from superdist.protocol.device import CompliantDevice
from superdist.protocol.harness import (
    Harness,
    Purchase,
    Redeem,
    accounting_handler,
    paradiso_session,
    potato_session,
)
from superdist.protocol.receipts import RewardingService

SUITE = HashSuite()
POTATO = scheme_preset("potato")


def accounting_service(market_size=4):
    good = make_good(b"harness track", AllowAll(), "potato", AllowAll(), content_id="track")
    service = AccountingService(secret=b"harness")
    service.register(good, POTATO, Constant(100), market_size)
    return service


def paradiso_setup(redistribution=AllowAll()):
    rng = np.random.default_rng(1)
    originator, *buyers = [
        CompliantDevice(SUITE, SUITE.keygen(rng), name=name)
        for name in ("originator", "alice", "bob", "carol")
    ]
    roots = {originator.public_key}
    good = make_good(b"paradiso", AllowAll(), "potato", redistribution, content_id="paradiso")
    container = package(good.content, good, originator.keys, 3, SUITE)
    originator.acquire(container, roots)
    rewarding = RewardingService(SUITE, POTATO, originator_keys=set(roots))
    rewarding.register(good.association.digest)
    return originator, buyers, container, rewarding, roots


@pytest.mark.asyncio
class TestHarness:
    """Request/reply over memory streams."""

    async def test_request_reply(self):
        harness = Harness()
        harness.endpoint("accounting", accounting_handler(accounting_service()))
        async with harness.running():
            tan = await harness.request("accounting", Purchase("track", 1))

        assert tan.startswith("TAN-")
        assert harness.transcript == [("accounting", "Purchase")]

    async def test_handler_error_reaches_caller(self):
        harness = Harness()
        harness.endpoint("accounting", accounting_handler(accounting_service()))
        with pytest.raises(NotInCatalog):
            async with harness.running():
                await harness.request("accounting", Purchase("missing", 1))

    async def test_wrong_message_type(self):
        harness = Harness()
        harness.endpoint("accounting", accounting_handler(accounting_service()))
        with pytest.raises(SuperdistError, match="cannot handle Redeem"):
            async with harness.running():
                await harness.request("accounting", Redeem(receipt=None))

    async def test_unknown_endpoint(self):
        harness = Harness()
        with pytest.raises(SuperdistError, match="no running endpoint"):
            async with harness.running():
                await harness.request("nowhere", Purchase("track", 1))

    async def test_duplicate_endpoint(self):
        harness = Harness()
        harness.endpoint("accounting", accounting_handler(accounting_service()))
        with pytest.raises(SuperdistError, match="already registered"):
            harness.endpoint("accounting", accounting_handler(accounting_service()))


@pytest.mark.asyncio
class TestPotatoSession:
    """Four generations buying through TAN-tagged files."""

    async def test_expected_ledger(self):
        service = accounting_service()
        purchases = [(1, None), (2, 1), (3, 2), (4, 3)]
        files = await potato_session(service, "track", purchases, "track.mp3")

        assert sorted(files) == [1, 2, 3, 4]
        assert all(tan_from_file_name(name) in service.tan_registry for name in files.values())
        assert tuple(ledger_rows(service.ledger)) == EXPECTED_POTATO_LEDGER

    async def test_seller_without_copy(self):
        service = accounting_service()
        with pytest.raises(SuperdistError, match="holds no copy"):
            await potato_session(service, "track", [(2, 1)])


@pytest.mark.asyncio
class TestParadisoSession:
    """A signed container passed down three devices."""

    async def test_chain_and_receipts(self):
        originator, buyers, container, rewarding, roots = paradiso_setup()
        final, receipts = await paradiso_session(
            originator, container, buyers, rewarding, roots, 100
        )

        assert len(final.chain) == 4
        assert final.holder == buyers[-1].public_key
        assert verify(final, roots, SUITE).valid
        assert [r.transaction_id for r in receipts] == ["tx-1", "tx-2", "tx-3"]
        assert sorted(rewarding.redeemed) == ["tx-1", "tx-2", "tx-3"]
        rewarding.ledger.check_conservation()

    async def test_denied_resale_stops_session(self):
        originator, buyers, container, rewarding, roots = paradiso_setup(DenyAll())
        with pytest.raises(RedistributionDenied):
            await paradiso_session(originator, container, buyers, rewarding, roots, 100)
        assert rewarding.redeemed == {}
