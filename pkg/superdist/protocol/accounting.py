"""Central accounting service for the TAN-based distribution flow.

Originators publish goods here. Every purchase, from the originator's shop or
from a peer, is paid to the service and answered with a transaction number
(TAN). A peer resale names the seller's TAN, which is how the service finds
the resellers to reward: it walks the registry from TAN to TAN.
"""

from __future__ import annotations

import csv
import hashlib
import hmac
import logging
import os
import re
from dataclasses import dataclass, field
from pathlib import Path, PurePath
from typing import Dict, Iterable, List, Optional, Union

from superdist.core.errors import NotInCatalog, SuperdistError, UnknownTAN
from superdist.core.licences import DigitalGood, require_association
from superdist.core.market import PriceSchedule, RemunerationScheme, allocate, price_at
from superdist.core.overlay import NodeId, RonLedger

logger = logging.getLogger(__name__)

TAN_PREFIX = "TAN-"
_TAN_IN_NAME = re.compile(r"\.(TAN-[0-9A-F]{20})(?=\.|$)")

TAN_HEADER = [
    "tan",
    "content_id",
    "buyer",
    "seller_tan",
    "entry_index",
    "price_cents",
    "outlay_cents",
]


@dataclass
class CatalogEntry:
    good: DigitalGood
    scheme: RemunerationScheme
    schedule: PriceSchedule
    market_size: int
    sales: int = 0


@dataclass(frozen=True)
class TanRecord:
    tan: str
    content_id: str
    buyer: NodeId
    seller_tan: Optional[str]
    entry_index: int
    transaction_index: int
    price: int
    outlay: int


@dataclass
class AccountingService:
    secret: bytes = field(default_factory=lambda: os.urandom(32), repr=False)
    catalog: Dict[str, CatalogEntry] = field(default_factory=dict)
    tan_registry: Dict[str, TanRecord] = field(default_factory=dict)
    ledger: RonLedger = field(default_factory=RonLedger)

    def register(
        self,
        good: DigitalGood,
        scheme: RemunerationScheme,
        schedule: PriceSchedule,
        market_size: int,
    ) -> str:
        """Publish ``good``; returns its content id."""
        require_association(good)
        if market_size < 1:
            raise SuperdistError(f"market_size must be >= 1, got {market_size}")
        content_id = good.association.content_id
        self.catalog[content_id] = CatalogEntry(good, scheme, schedule, market_size)
        logger.info("registered %s (market size %s)", content_id, market_size)
        return content_id

    def _new_tan(self, content_id: str, transaction_index: int, buyer: NodeId) -> str:
        message = f"{content_id}:{transaction_index}:{buyer}".encode("utf-8")
        mac = hmac.new(self.secret, message, hashlib.sha256).hexdigest()[:20].upper()
        return TAN_PREFIX + mac

    def upline(self, seller_tan: Optional[str], levels: int) -> List[NodeId]:
        """Buyers of ``seller_tan`` and the TANs it descends from, nearest first."""
        found: List[NodeId] = []
        tan = seller_tan
        while tan is not None and len(found) < levels:
            record = self.tan_registry.get(tan)
            if record is None:
                raise UnknownTAN(tan)
            found.append(record.buyer)
            tan = record.seller_tan
        return found

    def purchase(self, content_id: str, buyer: NodeId, seller_tan: Optional[str] = None) -> str:
        entry = self.catalog.get(content_id)
        if entry is None:
            raise NotInCatalog(content_id)
        if seller_tan is not None:
            seller = self.tan_registry.get(seller_tan)
            if seller is None or seller.content_id != content_id:
                raise UnknownTAN(seller_tan)

        entry_index = entry.sales + 1
        transaction_index = len(self.ledger.outlays) + 1
        price = price_at(entry.schedule, min(1.0, entry_index / entry.market_size))
        upline = self.upline(seller_tan, entry.scheme.levels)
        from_peer = seller_tan is not None
        allocation = allocate(price, entry.scheme, len(upline), bought_from_peer=from_peer)
        tan = self._new_tan(content_id, transaction_index, buyer)
        if tan in self.tan_registry:
            raise SuperdistError(f"TAN collision for {content_id}")

        self.ledger.record(allocation, buyer, upline, transaction_index)
        entry.sales = entry_index
        self.tan_registry[tan] = TanRecord(
            tan=tan,
            content_id=content_id,
            buyer=buyer,
            seller_tan=seller_tan,
            entry_index=entry_index,
            transaction_index=transaction_index,
            price=price,
            outlay=allocation.buyer_outlay,
        )
        logger.debug("%s bought %s: %s", buyer, content_id, tan)
        return tan


def as_purchase(
    service: AccountingService,
    content_id: str,
    buyer: NodeId,
    seller_tan: Optional[str] = None,
) -> str:
    return service.purchase(content_id, buyer, seller_tan)


def tan_file_name(name: str, tan: str) -> str:
    """``song.mp3`` carrying ``TAN-...`` becomes ``song.TAN-....mp3``."""
    path = PurePath(name)
    stem = _TAN_IN_NAME.sub("", path.stem)
    return str(path.with_name(f"{stem}.{tan}{path.suffix}"))


def tan_from_file_name(name: str) -> Optional[str]:
    match = _TAN_IN_NAME.search(PurePath(name).name)
    return match.group(1) if match else None


def write_tan_records(records: Iterable[TanRecord], path: Union[str, Path]) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with open(target, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(TAN_HEADER)
        for r in records:
            writer.writerow(
                [
                    r.tan,
                    r.content_id,
                    r.buyer,
                    r.seller_tan or "",
                    r.entry_index,
                    r.price,
                    r.outlay,
                ]
            )
    return target
