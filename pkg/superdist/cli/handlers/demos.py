"""Protocol demos and container verification."""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import anyio
import numpy as np

from superdist.cli.constants import (
    LEDGER_CSV,
    ORIGINATOR_KEY_FILE,
    RECEIPTS_CSV,
    TAMPERED_FIXTURE,
    TANS_CSV,
    VALID_FIXTURE,
)
from superdist.core.constants import ExternalParty, ReportStatus
from superdist.core.errors import ConfigError
from superdist.core.export import write_ledger
from superdist.core.licences import AllOf, AllowAll, MaxResales, NotBefore, make_good
from superdist.core.market import Constant, scheme_preset
from superdist.core.overlay import RonLedger, party_label
from superdist.protocol.accounting import AccountingService, tan_from_file_name, write_tan_records
from superdist.protocol.container import (
    VerifyReport,
    decode_container,
    encode_container,
    package,
    verify,
)
from superdist.protocol.crypto import SUITES, CryptoSuite, Ed25519Suite
from superdist.protocol.device import CompliantDevice
from superdist.protocol.harness import paradiso_session, potato_session
from superdist.protocol.receipts import RewardingService, write_receipts

logger = logging.getLogger(__name__)

LedgerRow = Tuple[str, str, int, str, int]

POTATO_PRICE = 100
POTATO_CONTENT_ID = "potato-track"
POTATO_FILE = "track.mp3"
# Four buyer generations, each buying from the previous one.
POTATO_PURCHASES = ((1, None), (2, 1), (3, 2), (4, 3))

_PLATFORM = ExternalParty.PLATFORM.value
_COLLECTOR = ExternalParty.COLLECTOR.value
_ORIGINATOR = ExternalParty.ORIGINATOR_ACCOUNT.value

# 100 cents from the shop, 98 cents (2% rebate) from a peer.
EXPECTED_POTATO_LEDGER: Tuple[LedgerRow, ...] = (
    ("1", _PLATFORM, 14, "platform_fee", 1),
    ("1", _COLLECTOR, 14, "collector_fee", 1),
    ("1", _ORIGINATOR, 72, "originator_share", 1),
    ("2", "1", 10, "level_reward(1)", 2),
    ("2", _PLATFORM, 12, "platform_fee", 2),
    ("2", _COLLECTOR, 14, "collector_fee", 2),
    ("2", _ORIGINATOR, 62, "originator_share", 2),
    ("3", "2", 10, "level_reward(1)", 3),
    ("3", "1", 3, "level_reward(2)", 3),
    ("3", _PLATFORM, 12, "platform_fee", 3),
    ("3", _COLLECTOR, 14, "collector_fee", 3),
    ("3", _ORIGINATOR, 59, "originator_share", 3),
    ("4", "3", 10, "level_reward(1)", 4),
    ("4", "2", 3, "level_reward(2)", 4),
    ("4", "1", 1, "level_reward(3)", 4),
    ("4", _PLATFORM, 12, "platform_fee", 4),
    ("4", _COLLECTOR, 14, "collector_fee", 4),
    ("4", _ORIGINATOR, 58, "originator_share", 4),
)


def ledger_rows(ledger: RonLedger) -> List[LedgerRow]:
    return [
        (party_label(e.payer), party_label(e.payee), e.amount, e.reason_label, e.transaction_index)
        for e in ledger.entries
    ]


@dataclass
class PotatoOutcome:
    ledger: RonLedger
    first_buyer_rewards: int
    matches: bool


def _corrupt(service: AccountingService, file_name: str) -> None:
    """Detach a TAN from its seller, as a damaged registry would."""
    tan = tan_from_file_name(file_name)
    record = service.tan_registry[tan]
    service.tan_registry[tan] = replace(record, seller_tan=None)
    logger.warning("corrupted TAN registry entry %s", tan)


async def _potato(service: AccountingService, corrupt_registry: bool) -> None:
    if not corrupt_registry:
        await potato_session(service, POTATO_CONTENT_ID, POTATO_PURCHASES, POTATO_FILE)
        return
    files = await potato_session(service, POTATO_CONTENT_ID, POTATO_PURCHASES[:2], POTATO_FILE)
    _corrupt(service, files[2])
    # Continue the chain from buyer 2's copy.
    tans = {buyer: tan_from_file_name(name) for buyer, name in files.items()}
    for buyer, seller in POTATO_PURCHASES[2:]:
        seller_tan = tans[seller]
        tans[buyer] = service.purchase(POTATO_CONTENT_ID, buyer, seller_tan)


def handle_potato_demo(
    *, corrupt_registry: bool = False, out_dir: Optional[Path] = None
) -> PotatoOutcome:
    """Replay four buyer generations at 100 cents with the potato scheme."""
    good = make_good(
        b"potato demo track", AllowAll(), "potato", AllowAll(), content_id=POTATO_CONTENT_ID
    )
    service = AccountingService(secret=b"potato-demo")
    service.register(good, scheme_preset("potato"), Constant(POTATO_PRICE), len(POTATO_PURCHASES))
    anyio.run(_potato, service, corrupt_registry)

    ledger = service.ledger
    matches = tuple(ledger_rows(ledger)) == EXPECTED_POTATO_LEDGER
    first = ledger.received(1)
    if out_dir is not None:
        write_ledger(ledger, out_dir / LEDGER_CSV)
        write_tan_records(service.tan_registry.values(), out_dir / TANS_CSV)
    return PotatoOutcome(ledger=ledger, first_buyer_rewards=first, matches=matches)


@dataclass
class ParadisoOutcome:
    valid: VerifyReport
    tampered: VerifyReport
    chain_length: int
    receipts: int
    originator_key: bytes

    @property
    def as_expected(self) -> bool:
        return self.valid.valid and self.tampered.status is ReportStatus.CONTENT_MISMATCH


def tamper(data: bytes) -> bytes:
    """Flip the low bit of the first content byte of an SDC1 encoding."""
    offset = 8  # magic + content length
    mutated = bytearray(data)
    mutated[offset] ^= 0x01
    return bytes(mutated)


def handle_paradiso_demo(*, seed: int = 0, out_dir: Optional[Path] = None) -> ParadisoOutcome:
    """Originator and three devices pass a good down a chain and redeem receipts."""
    suite = Ed25519Suite()
    rng = np.random.default_rng(seed)
    originator = CompliantDevice(suite, suite.keygen(rng), name="originator")
    buyers = [CompliantDevice(suite, suite.keygen(rng), name=n) for n in ("alice", "bob", "carol")]
    roots = {originator.public_key}

    content = b"paradiso demo track"
    good = make_good(
        content,
        AllowAll(),
        "potato",
        AllOf((MaxResales(3), NotBefore(0))),
        content_id="paradiso-track",
    )
    container = package(content, good, originator.keys, 3, suite)
    originator.acquire(container, roots)

    rewarding = RewardingService(suite, scheme_preset("potato"), originator_keys=set(roots))
    rewarding.register(good.association.digest)
    final, receipts = anyio.run(
        paradiso_session, originator, container, buyers, rewarding, roots, POTATO_PRICE
    )

    valid_bytes = encode_container(final)
    tampered_bytes = tamper(valid_bytes)
    outcome = ParadisoOutcome(
        valid=verify(decode_container(valid_bytes), roots, suite),
        tampered=verify(decode_container(tampered_bytes), roots, suite),
        chain_length=len(final.chain),
        receipts=len(receipts),
        originator_key=originator.public_key,
    )
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / VALID_FIXTURE).write_bytes(valid_bytes)
        (out_dir / TAMPERED_FIXTURE).write_bytes(tampered_bytes)
        (out_dir / ORIGINATOR_KEY_FILE).write_text(originator.public_key.hex() + "\n")
        write_receipts(receipts, out_dir / RECEIPTS_CSV)
        write_ledger(rewarding.ledger, out_dir / LEDGER_CSV)
    return outcome


def parse_trust_roots(values: Sequence[str]) -> List[bytes]:
    roots = []
    for value in values:
        try:
            roots.append(bytes.fromhex(value.strip()))
        except ValueError:
            raise ConfigError(
                "'--trust-root' must be a hex-encoded public key.",
                key="--trust-root",
                expected="hex string",
                received=value,
            ) from None
    return roots


def handle_verify(
    path: Path, trust_roots: Sequence[bytes], suite_name: str = Ed25519Suite.name
) -> VerifyReport:
    """Parse and verify a container file.

    Without trust roots the container's own originator key is trusted, so
    only integrity and chain structure are checked.
    """
    if not path.is_file():
        raise ConfigError(f"Container file not found: {path}", key="container", received=str(path))
    suite: CryptoSuite = SUITES[suite_name]()
    container = decode_container(path.read_bytes())
    roots = list(trust_roots)
    if not roots and container.chain:
        logger.warning("no trust roots given; trusting the container's own originator key")
        roots = [container.chain[0].seller_public_key]
    return verify(container, roots, suite)
