from __future__ import annotations

from enum import Enum

ORIGINATOR_ID = 0


class NodeKind(str, Enum):
    ORIGINATOR = "originator"
    TRADER = "trader"

    @classmethod
    def values(cls) -> set[str]:
        return {kind.value for kind in cls}


class ExternalParty(str, Enum):
    """Ledger parties that are not nodes of the CDO."""

    PLATFORM = "platform"
    COLLECTOR = "collector"
    ORIGINATOR_ACCOUNT = "originator-account"

    @classmethod
    def values(cls) -> set[str]:
        return {party.value for party in cls}


class RonReason(str, Enum):
    LEVEL_REWARD = "level_reward"
    PLATFORM_FEE = "platform_fee"
    COLLECTOR_FEE = "collector_fee"
    ORIGINATOR_SHARE = "originator_share"

    @classmethod
    def values(cls) -> set[str]:
        return {reason.value for reason in cls}


class Role(str, Enum):
    """Payee roles of an allocation; level roles carry their level separately."""

    LEVEL = "level"
    PLATFORM = "platform"
    COLLECTOR = "collector"
    ORIGINATOR = "originator"


class ReportStatus(str, Enum):
    VALID = "Valid"
    CONTENT_MISMATCH = "ContentMismatch"
    CHAIN_BROKEN = "ChainBroken"
    BAD_SIGNATURE = "BadSignature"
    UNTRUSTED_ORIGIN = "UntrustedOrigin"

    @classmethod
    def values(cls) -> set[str]:
        return {status.value for status in cls}


class Choice(str, Enum):
    LEGIT = "legit"
    FREE = "free"
