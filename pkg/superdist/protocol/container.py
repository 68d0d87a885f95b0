"""Signed containers: content plus a chain of licence entries.

Entry 0 is the originator's self-signed issue (seller and buyer are both the
originator). Every later entry is written by the previous entry's buyer when
reselling. A signature covers the digests of all prior entries, this entry's
fields and the content association, so tampering anywhere invalidates the
rest of the chain.

``verify`` checks structure only: digests, signatures, buyer/seller linkage
and the resale counter. Whether time or location rules were honoured at an
earlier step cannot be recovered from the chain.
"""

from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass, replace
from typing import Any, Dict, Iterable, List, Optional, Tuple

from superdist.core.constants import ReportStatus
from superdist.core.errors import (
    AssociationError,
    ContainerFormatError,
    SuperdistError,
)
from superdist.core.licences import (
    ContentAssociation,
    ConsumptionLicence,
    DigitalGood,
    RedistributionLicence,
    canonical_json,
    require_association,
)
from superdist.protocol.crypto import CryptoSuite, KeyPair

logger = logging.getLogger(__name__)

MAGIC = b"SDC1"
_U32 = struct.Struct(">I")


@dataclass(frozen=True)
class LicenceEntry:
    seller_public_key: bytes
    buyer_public_key: bytes
    consumption_licence: ConsumptionLicence
    redistribution_licence: RedistributionLicence
    resales_remaining: int
    signature: bytes = b""

    def fields(self) -> Dict[str, Any]:
        """Signed fields, without the signature."""
        return {
            "seller": self.seller_public_key.hex(),
            "buyer": self.buyer_public_key.hex(),
            "consumption_licence": self.consumption_licence.to_dict(),
            "redistribution_licence": self.redistribution_licence.to_dict(),
            "resales_remaining": self.resales_remaining,
        }

    def to_dict(self) -> Dict[str, Any]:
        return {**self.fields(), "signature": self.signature.hex()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "LicenceEntry":
        remaining = data["resales_remaining"]
        if not isinstance(remaining, int) or isinstance(remaining, bool):
            raise ContainerFormatError("resales_remaining must be an integer")
        return cls(
            seller_public_key=bytes.fromhex(data["seller"]),
            buyer_public_key=bytes.fromhex(data["buyer"]),
            consumption_licence=ConsumptionLicence.from_dict(data["consumption_licence"]),
            redistribution_licence=RedistributionLicence.from_dict(data["redistribution_licence"]),
            resales_remaining=remaining,
            signature=bytes.fromhex(data["signature"]),
        )

    def digest(self, suite: CryptoSuite) -> bytes:
        return suite.digest(canonical_json(self.to_dict()))


@dataclass(frozen=True)
class SignedContainer:
    content: bytes
    association: ContentAssociation
    chain: Tuple[LicenceEntry, ...] = ()

    @property
    def content_id(self) -> str:
        return self.association.content_id

    @property
    def last(self) -> LicenceEntry:
        if not self.chain:
            raise ContainerFormatError("container has an empty licence chain")
        return self.chain[-1]

    @property
    def holder(self) -> bytes:
        """Public key of the current owner."""
        return self.last.buyer_public_key


class VerifyReport:
    """Outcome of ``verify``. ``index`` is set for ChainBroken and BadSignature."""

    __slots__ = ("status", "index", "detail")

    def __init__(
        self, status: ReportStatus, index: Optional[int] = None, detail: str = ""
    ) -> None:
        self.status = status
        self.index = index
        self.detail = detail

    @property
    def valid(self) -> bool:
        return self.status is ReportStatus.VALID

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, VerifyReport):
            return NotImplemented
        return (self.status, self.index) == (other.status, other.index)

    def __hash__(self) -> int:
        return hash((self.status, self.index))

    def __str__(self) -> str:
        if self.index is None:
            return self.status.value
        return f"{self.status.value}({self.index})"

    def __repr__(self) -> str:
        return f"VerifyReport({self}, detail={self.detail!r})"


def signing_payload(
    prior: Iterable[LicenceEntry],
    entry: LicenceEntry,
    association: ContentAssociation,
    suite: CryptoSuite,
) -> bytes:
    return canonical_json(
        {
            "prior": [e.digest(suite).hex() for e in prior],
            "entry": entry.fields(),
            "content": association.to_dict(),
        }
    )


def sign_entry(
    container_chain: Tuple[LicenceEntry, ...],
    entry: LicenceEntry,
    association: ContentAssociation,
    seller: KeyPair,
    suite: CryptoSuite,
) -> LicenceEntry:
    payload = signing_payload(container_chain, entry, association, suite)
    return replace(entry, signature=suite.sign(seller.private, payload))


def package(
    content: bytes,
    good: DigitalGood,
    originator: KeyPair,
    initial_resales: int,
    suite: CryptoSuite,
) -> SignedContainer:
    """Wrap ``content`` and the good's licences in a container with one self-signed entry."""
    if initial_resales < 0:
        raise SuperdistError(f"initial_resales must be >= 0, got {initial_resales}")
    if content != good.content:
        raise AssociationError("licences do not match the packaged content")
    require_association(good)
    entry = LicenceEntry(
        seller_public_key=originator.public,
        buyer_public_key=originator.public,
        consumption_licence=good.consumption_licence,
        redistribution_licence=good.redistribution_licence,
        resales_remaining=initial_resales,
    )
    signed = sign_entry((), entry, good.association, originator, suite)
    logger.debug("packaged %s with %s resales", good.association.content_id, initial_resales)
    return SignedContainer(content=content, association=good.association, chain=(signed,))


def verify(
    container: SignedContainer, trust_roots: Iterable[bytes], suite: CryptoSuite
) -> VerifyReport:
    association = container.association
    if suite.digest(container.content) != association.digest:
        return VerifyReport(ReportStatus.CONTENT_MISMATCH, detail="content digest differs")
    report = verify_chain(container.chain, association, trust_roots, suite)
    if report.valid:
        logger.debug("verified %s: %s entries", container.content_id, len(container.chain))
    return report


def verify_chain(
    chain: Tuple[LicenceEntry, ...],
    association: ContentAssociation,
    trust_roots: Iterable[bytes],
    suite: CryptoSuite,
) -> VerifyReport:
    """Check a licence chain without the content it travels with."""
    roots = set(trust_roots)
    if not chain:
        return VerifyReport(ReportStatus.CHAIN_BROKEN, 0, "empty licence chain")
    if chain[0].seller_public_key not in roots:
        return VerifyReport(ReportStatus.UNTRUSTED_ORIGIN, detail="entry 0 key is not trusted")

    for i, entry in enumerate(chain):
        if (
            entry.consumption_licence.association != association
            or entry.redistribution_licence.association != association
        ):
            return VerifyReport(
                ReportStatus.CONTENT_MISMATCH, detail=f"entry {i} licences name other content"
            )
        if entry.resales_remaining < 0:
            return VerifyReport(ReportStatus.CHAIN_BROKEN, i, "negative resale counter")
        if i == 0:
            if entry.buyer_public_key != entry.seller_public_key:
                return VerifyReport(ReportStatus.CHAIN_BROKEN, 0, "initial issue not self-signed")
        else:
            previous = chain[i - 1]
            if entry.seller_public_key != previous.buyer_public_key:
                return VerifyReport(
                    ReportStatus.CHAIN_BROKEN, i, "seller is not the previous buyer"
                )
            if entry.resales_remaining != previous.resales_remaining - 1:
                return VerifyReport(ReportStatus.CHAIN_BROKEN, i, "resale counter skips")
        payload = signing_payload(chain[:i], entry, association, suite)
        if not suite.verify_sig(entry.seller_public_key, payload, entry.signature):
            return VerifyReport(ReportStatus.BAD_SIGNATURE, i, "signature does not verify")

    return VerifyReport(ReportStatus.VALID)


# --- SDC1 framing ----------------------------------------------------------


def _section(data: bytes) -> bytes:
    return _U32.pack(len(data)) + data


def encode_container(container: SignedContainer) -> bytes:
    entries = _U32.pack(len(container.chain)) + b"".join(
        _section(canonical_json(entry.to_dict())) for entry in container.chain
    )
    return (
        MAGIC
        + _section(container.content)
        + _section(canonical_json(container.association.to_dict()))
        + _section(entries)
    )


class _Reader:
    def __init__(self, data: bytes) -> None:
        self._data = data
        self._pos = 0

    def take(self, n: int) -> bytes:
        if self._pos + n > len(self._data):
            raise ContainerFormatError("truncated container")
        chunk = self._data[self._pos : self._pos + n]
        self._pos += n
        return chunk

    def u32(self) -> int:
        return _U32.unpack(self.take(_U32.size))[0]

    def section(self) -> bytes:
        return self.take(self.u32())

    def done(self) -> None:
        if self._pos != len(self._data):
            raise ContainerFormatError("trailing bytes after container")


def _json(raw: bytes) -> Dict[str, Any]:
    value = json.loads(raw.decode("ascii"))
    if not isinstance(value, dict):
        raise ContainerFormatError("expected a JSON object")
    return value


def _decode(data: bytes) -> SignedContainer:
    reader = _Reader(data)
    if reader.take(len(MAGIC)) != MAGIC:
        raise ContainerFormatError("not an SDC1 container")
    content = reader.section()
    association = ContentAssociation.from_dict(_json(reader.section()))
    entries = _Reader(reader.section())
    reader.done()
    count = entries.u32()
    chain: List[LicenceEntry] = [
        LicenceEntry.from_dict(_json(entries.section())) for _ in range(count)
    ]
    entries.done()
    return SignedContainer(content=content, association=association, chain=tuple(chain))


def decode_container(data: bytes) -> SignedContainer:
    """Parse SDC1 bytes. Only the canonical encoding of a container is accepted."""
    try:
        container = _decode(data)
    except ContainerFormatError:
        raise
    except (SuperdistError, KeyError, ValueError, TypeError, AttributeError) as exc:
        raise ContainerFormatError(f"malformed container: {exc}") from exc
    # Aliases such as upper-case hex or JSON escapes would parse to the same value.
    if encode_container(container) != data:
        raise ContainerFormatError("non-canonical container encoding")
    return container
