"""Compliant devices: the only place licence rules are enforced in the decentralised flow.

A device verifies everything it acquires, refuses to resell or render a good
when the licences say no, and keeps its own tally of resales per good. It is
trusted to behave; nothing here defends against a modified device.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, Optional, Tuple

from superdist.core.errors import (
    ConsumptionDenied,
    InvalidContainer,
    NotOwner,
    RedistributionDenied,
    ResaleLimitExhausted,
)
from superdist.core.licences import RuleContext, describe, evaluate
from superdist.protocol.container import LicenceEntry, SignedContainer, sign_entry, verify
from superdist.protocol.crypto import CryptoSuite, KeyPair

logger = logging.getLogger(__name__)

Position = Tuple[float, float]


@dataclass
class OwnedCopy:
    container: SignedContainer
    resales_done: int = 0
    acquired_at: int = 0
    position: Optional[Position] = None

    @property
    def resales_remaining(self) -> int:
        return self.container.last.resales_remaining - self.resales_done


@dataclass
class CompliantDevice:
    suite: CryptoSuite
    keys: KeyPair
    name: str = "device"
    owned: Dict[str, OwnedCopy] = field(default_factory=dict)

    @property
    def public_key(self) -> bytes:
        return self.keys.public

    def acquire(
        self,
        container: SignedContainer,
        trust_roots: Iterable[bytes],
        ctx: RuleContext = RuleContext(),
        *,
        position: Optional[Position] = None,
    ) -> None:
        """Verify and take ownership of ``container``, which must be addressed to this device."""
        report = verify(container, trust_roots, self.suite)
        if not report.valid:
            raise InvalidContainer(report)
        if container.holder != self.public_key:
            raise NotOwner(f"{self.name}: container is addressed to another key")
        self.owned[container.content_id] = OwnedCopy(
            container=container, acquired_at=ctx.now, position=position
        )
        logger.debug("%s acquired %s", self.name, container.content_id)

    def copy_of(self, content_id: str) -> OwnedCopy:
        try:
            return self.owned[content_id]
        except KeyError:
            raise NotOwner(f"{self.name} does not own {content_id}") from None

    def context(
        self,
        content_id: str,
        now: int,
        position: Optional[Position] = None,
        market_saturation: float = 0.0,
    ) -> RuleContext:
        """Rule context for an owned good, with distance measured from where it was acquired."""
        copy = self.copy_of(content_id)
        distance = 0.0
        if position is not None and copy.position is not None:
            distance = math.dist(position, copy.position)
        return RuleContext(
            now=now,
            distance_moved_since_acquisition=distance,
            resales_done=copy.resales_done,
            market_saturation=market_saturation,
        )

    def consume(self, content_id: str, ctx: RuleContext) -> bytes:
        copy = self.copy_of(content_id)
        decision = evaluate(copy.container.last.consumption_licence.consumption_rules, ctx)
        if not decision.allowed:
            raise ConsumptionDenied(decision.reason, describe(decision.reason))
        return copy.container.content

    def resell(
        self, container: SignedContainer, buyer_public_key: bytes, ctx: RuleContext
    ) -> SignedContainer:
        return resell(container, self, buyer_public_key, ctx)


def resell(
    container: SignedContainer,
    seller_device: CompliantDevice,
    buyer_public_key: bytes,
    ctx: RuleContext,
) -> SignedContainer:
    """Append a signed entry transferring ``container`` to ``buyer_public_key``.

    The input container is left untouched. ``ctx.resales_done`` is replaced by
    the device's own count for this good.
    """
    copy = seller_device.owned.get(container.content_id)
    if copy is None or copy.container != container:
        raise NotOwner(f"{seller_device.name} does not own this container")
    last = container.last
    if copy.resales_remaining <= 0:
        raise ResaleLimitExhausted(f"{container.content_id}: no resales left")
    ctx = replace(ctx, resales_done=copy.resales_done)
    decision = evaluate(last.redistribution_licence.redistribution_rules, ctx)
    if not decision.allowed:
        raise RedistributionDenied(decision.reason, describe(decision.reason))

    entry = LicenceEntry(
        seller_public_key=seller_device.public_key,
        buyer_public_key=buyer_public_key,
        consumption_licence=last.consumption_licence,
        redistribution_licence=last.redistribution_licence,
        resales_remaining=last.resales_remaining - 1,
    )
    signed = sign_entry(
        container.chain, entry, container.association, seller_device.keys, seller_device.suite
    )
    copy.resales_done += 1
    logger.debug(
        "%s resold %s, %s left", seller_device.name, container.content_id, entry.resales_remaining
    )
    return replace(container, chain=container.chain + (signed,))
