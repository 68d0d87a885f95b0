"""Purchase receipts and the central rewarding service.

Payment happens out of band. The buyer signs a receipt carrying the container's
licence chain and redeems it at the rewarding service. The service pays only
the sellers of a chain that verifies against the originator keys, splitting
the sale with ``market.allocate`` into its RON ledger.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, replace
from itertools import count
from pathlib import Path
from typing import Any, Dict, Iterable, List, Set, Tuple, Union

from superdist.core.constants import ORIGINATOR_ID
from superdist.core.errors import AlreadyRedeemed, InvalidReceipt, NotOwner, SuperdistError
from superdist.core.licences import canonical_json
from superdist.core.market import RemunerationScheme, allocate
from superdist.core.overlay import NodeId, RonEntry, RonLedger
from superdist.protocol.container import LicenceEntry, SignedContainer, verify_chain
from superdist.protocol.crypto import CryptoSuite
from superdist.protocol.device import CompliantDevice

logger = logging.getLogger(__name__)

RECEIPTS_HEADER = ["transaction_id", "buyer", "seller", "content_digest", "amount_cents"]


@dataclass(frozen=True)
class Receipt:
    buyer_public_key: bytes
    seller_public_key: bytes
    content_digest: bytes
    transaction_id: str
    amount: int
    chain: Tuple[LicenceEntry, ...] = ()
    signature: bytes = b""

    @property
    def upstream_sellers(self) -> Tuple[bytes, ...]:
        """Sellers of every sale in the chain, nearest first."""
        return tuple(entry.seller_public_key for entry in reversed(self.chain[1:]))

    def fields(self) -> Dict[str, Any]:
        return {
            "buyer": self.buyer_public_key.hex(),
            "seller": self.seller_public_key.hex(),
            "content_digest": self.content_digest.hex(),
            "transaction_id": self.transaction_id,
            "amount": self.amount,
            "chain": [entry.to_dict() for entry in self.chain],
        }

    def payload(self) -> bytes:
        return canonical_json(self.fields())


def issue_receipt(
    buyer_device: CompliantDevice,
    container: SignedContainer,
    amount: int,
    transaction_id: str,
) -> Receipt:
    """Receipt for the sale that delivered ``container`` to ``buyer_device``.

    The receipt carries the whole licence chain. Entry 0, the originator's
    initial issue, is not a sale.
    """
    if amount < 0:
        raise SuperdistError(f"amount must be >= 0, got {amount}")
    copy = buyer_device.owned.get(container.content_id)
    if copy is None or copy.container != container:
        raise NotOwner(f"{buyer_device.name} does not own this container")
    if len(container.chain) < 2:
        raise SuperdistError("the initial issue has no seller to pay")
    receipt = Receipt(
        buyer_public_key=buyer_device.public_key,
        seller_public_key=container.last.seller_public_key,
        content_digest=container.association.digest,
        transaction_id=transaction_id,
        amount=amount,
        chain=container.chain,
    )
    signature = buyer_device.suite.sign(buyer_device.keys.private, receipt.payload())
    return replace(receipt, signature=signature)


@dataclass
class RewardingService:
    suite: CryptoSuite
    scheme: RemunerationScheme
    originator_keys: Set[bytes] = field(default_factory=set)
    digests: Set[bytes] = field(default_factory=set)
    ledger: RonLedger = field(default_factory=RonLedger)
    redeemed: Dict[str, Receipt] = field(default_factory=dict)
    parties: Dict[bytes, NodeId] = field(default_factory=dict)
    _ids: Any = field(default_factory=lambda: count(1), repr=False)
    _transactions: Any = field(default_factory=lambda: count(1), repr=False)

    def register(self, content_digest: bytes) -> None:
        self.digests.add(content_digest)

    def register_party(self, public_key: bytes) -> NodeId:
        if public_key in self.originator_keys:
            return ORIGINATOR_ID
        if public_key not in self.parties:
            self.parties[public_key] = next(self._ids)
        return self.parties[public_key]

    def _check_chain(self, receipt: Receipt) -> None:
        """The chain must verify from a known originator and end with this receipt's sale."""
        txid = receipt.transaction_id
        if len(receipt.chain) < 2:
            raise InvalidReceipt(f"{txid}: licence chain records no sale")
        association = receipt.chain[0].consumption_licence.association
        if association.digest != receipt.content_digest:
            raise InvalidReceipt(f"{txid}: licence chain names other content")
        report = verify_chain(receipt.chain, association, self.originator_keys, self.suite)
        if not report.valid:
            raise InvalidReceipt(f"{txid}: licence chain rejected: {report}")
        last = receipt.chain[-1]
        if (last.seller_public_key, last.buyer_public_key) != (
            receipt.seller_public_key,
            receipt.buyer_public_key,
        ):
            raise InvalidReceipt(f"{txid}: receipt parties differ from the last sale")

    def redeem(self, receipt: Receipt) -> List[RonEntry]:
        signed_by = receipt.buyer_public_key
        if not self.suite.verify_sig(signed_by, receipt.payload(), receipt.signature):
            raise InvalidReceipt(f"{receipt.transaction_id}: signature does not verify")
        if receipt.content_digest not in self.digests:
            raise InvalidReceipt(f"{receipt.transaction_id}: unknown content")
        self._check_chain(receipt)
        if receipt.transaction_id in self.redeemed:
            raise AlreadyRedeemed(receipt.transaction_id)

        upline: List[NodeId] = []
        for key in receipt.upstream_sellers[: self.scheme.levels]:
            if key in self.originator_keys:
                break
            upline.append(self.register_party(key))
        allocation = allocate(receipt.amount, self.scheme, len(upline), bought_from_peer=False)
        rows = self.ledger.record(
            allocation,
            self.register_party(receipt.buyer_public_key),
            upline,
            next(self._transactions),
        )
        self.redeemed[receipt.transaction_id] = receipt
        logger.debug("redeemed %s: %s ledger rows", receipt.transaction_id, len(rows))
        return rows


def redeem(receipt: Receipt, rewarding_service: RewardingService) -> List[RonEntry]:
    return rewarding_service.redeem(receipt)


def write_receipts(receipts: Iterable[Receipt], path: Union[str, Path]) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with open(target, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(RECEIPTS_HEADER)
        for r in receipts:
            writer.writerow(
                [
                    r.transaction_id,
                    r.buyer_public_key.hex(),
                    r.seller_public_key.hex(),
                    r.content_digest.hex(),
                    r.amount,
                ]
            )
    return target
