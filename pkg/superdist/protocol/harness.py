"""In-memory message harness for the two distribution protocols.

Each endpoint is a single-writer state machine (a device or a service) fed by
an anyio memory object stream. ``request`` sends one message and waits for
the reply, so messages are handled in program order. Errors raised by a
handler travel back and are re-raised at the caller.
"""

from __future__ import annotations

import logging
from contextlib import asynccontextmanager
from dataclasses import dataclass, field
from typing import Any, AsyncIterator, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import anyio
from anyio.streams.memory import MemoryObjectReceiveStream, MemoryObjectSendStream

from superdist.core.errors import SuperdistError
from superdist.core.licences import RuleContext
from superdist.core.overlay import NodeId, RonEntry
from superdist.protocol.accounting import AccountingService, tan_file_name, tan_from_file_name
from superdist.protocol.container import SignedContainer
from superdist.protocol.device import CompliantDevice
from superdist.protocol.receipts import Receipt, RewardingService, issue_receipt

logger = logging.getLogger(__name__)

Handler = Callable[[Any], Any]


@dataclass(frozen=True)
class Purchase:
    content_id: str
    buyer: NodeId
    seller_tan: Optional[str] = None


@dataclass(frozen=True)
class Resale:
    content_id: str
    buyer_public_key: bytes
    ctx: RuleContext = RuleContext()


@dataclass(frozen=True)
class Redeem:
    receipt: Receipt


@dataclass
class _Envelope:
    message: Any
    reply: MemoryObjectSendStream


@dataclass
class Harness:
    handlers: Dict[str, Handler] = field(default_factory=dict)
    transcript: List[Tuple[str, str]] = field(default_factory=list)
    _inboxes: Dict[str, MemoryObjectSendStream] = field(default_factory=dict, repr=False)

    def endpoint(self, address: str, handler: Handler) -> None:
        if address in self.handlers:
            raise SuperdistError(f"endpoint {address!r} already registered")
        self.handlers[address] = handler

    async def _serve(self, handler: Handler, inbox: MemoryObjectReceiveStream) -> None:
        async with inbox:
            async for envelope in inbox:
                try:
                    result = handler(envelope.message)
                except SuperdistError as exc:
                    result = exc
                async with envelope.reply:
                    await envelope.reply.send(result)

    @asynccontextmanager
    async def running(self) -> AsyncIterator["Harness"]:
        # Re-raised outside the task group, which would wrap it in an exception group.
        failure: Optional[SuperdistError] = None
        async with anyio.create_task_group() as tg:
            for address, handler in self.handlers.items():
                send, receive = anyio.create_memory_object_stream(16)
                self._inboxes[address] = send
                tg.start_soon(self._serve, handler, receive)
            try:
                yield self
            except SuperdistError as exc:
                failure = exc
            finally:
                for send in self._inboxes.values():
                    await send.aclose()
                self._inboxes.clear()
        if failure is not None:
            raise failure

    async def request(self, address: str, message: Any) -> Any:
        inbox = self._inboxes.get(address)
        if inbox is None:
            raise SuperdistError(f"no running endpoint {address!r}")
        self.transcript.append((address, type(message).__name__))
        reply_send, reply_receive = anyio.create_memory_object_stream(1)
        await inbox.send(_Envelope(message, reply_send))
        async with reply_receive:
            result = await reply_receive.receive()
        if isinstance(result, SuperdistError):
            raise result
        return result


def accounting_handler(service: AccountingService) -> Handler:
    def handle(message: Any) -> str:
        if not isinstance(message, Purchase):
            raise SuperdistError(f"accounting service cannot handle {type(message).__name__}")
        return service.purchase(message.content_id, message.buyer, message.seller_tan)

    return handle


def device_handler(device: CompliantDevice) -> Handler:
    def handle(message: Any) -> SignedContainer:
        if not isinstance(message, Resale):
            raise SuperdistError(f"{device.name} cannot handle {type(message).__name__}")
        container = device.copy_of(message.content_id).container
        return device.resell(container, message.buyer_public_key, message.ctx)

    return handle


def rewarding_handler(service: RewardingService) -> Handler:
    def handle(message: Any) -> List[RonEntry]:
        if not isinstance(message, Redeem):
            raise SuperdistError(f"rewarding service cannot handle {type(message).__name__}")
        return service.redeem(message.receipt)

    return handle


async def potato_session(
    service: AccountingService,
    content_id: str,
    purchases: Sequence[Tuple[NodeId, Optional[NodeId]]],
    file_name: str = "good.bin",
) -> Dict[NodeId, str]:
    """Run ``(buyer, seller)`` purchases through the accounting service.

    ``seller`` None means the originator's shop. A peer seller hands over its
    copy, whose file name carries its TAN; the buyer announces the resale with
    the TAN read back from that name. Returns each buyer's file name.
    """
    harness = Harness()
    harness.endpoint("accounting", accounting_handler(service))
    files: Dict[NodeId, str] = {}
    async with harness.running():
        for buyer, seller in purchases:
            seller_tan = None
            if seller is not None:
                if seller not in files:
                    raise SuperdistError(f"seller {seller} holds no copy")
                seller_tan = tan_from_file_name(files[seller])
            tan = await harness.request("accounting", Purchase(content_id, buyer, seller_tan))
            files[buyer] = tan_file_name(file_name, tan)
    logger.info("potato session: %s purchases", len(purchases))
    return files


async def paradiso_session(
    originator: CompliantDevice,
    container: SignedContainer,
    buyers: Iterable[CompliantDevice],
    rewarding: RewardingService,
    trust_roots: Iterable[bytes],
    price: int,
) -> Tuple[SignedContainer, List[Receipt]]:
    """Pass ``container`` down a chain of devices, redeeming a receipt for every sale.

    The originator device must already own ``container``.
    """
    roots = set(trust_roots)
    chain = list(buyers)
    harness = Harness()
    sellers = [originator, *chain[:-1]]
    for device in sellers:
        harness.endpoint(device.name, device_handler(device))
    harness.endpoint("rewarding", rewarding_handler(rewarding))
    receipts: List[Receipt] = []
    current = container
    async with harness.running():
        for i, (seller, buyer) in enumerate(zip(sellers, chain), start=1):
            current = await harness.request(
                seller.name, Resale(current.content_id, buyer.public_key)
            )
            buyer.acquire(current, roots)
            receipt = issue_receipt(buyer, current, price, f"tx-{i}")
            await harness.request("rewarding", Redeem(receipt))
            receipts.append(receipt)
    logger.info("paradiso session: %s sales", len(receipts))
    return current, receipts
