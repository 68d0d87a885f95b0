"""Exception hierarchy shared by the library, the protocols and the CLI."""

from __future__ import annotations

from typing import Any


class SuperdistError(Exception):
    """Base class for every error raised by superdist."""


class NodeNotFound(SuperdistError):
    def __init__(self, node: int) -> None:
        super().__init__(f"Unknown node: {node}")
        self.node = node


class EmptyGraph(SuperdistError):
    pass


class EmptyContent(SuperdistError):
    pass


class InvalidPrice(SuperdistError):
    pass


class InvalidSaturation(SuperdistError):
    pass


class InvalidIndices(SuperdistError):
    pass


class InvalidScheme(SuperdistError):
    pass


class InvalidSchedule(SuperdistError):
    pass


class InvalidContext(SuperdistError):
    pass


class UnsupportedConfig(SuperdistError):
    pass


class AssociationError(SuperdistError):
    pass


class RuleDenied(SuperdistError):
    """A licence rule evaluated to Deny; ``reason`` is the failing leaf rule."""

    def __init__(self, reason: Any, label: str | None = None) -> None:
        super().__init__(f"{type(self).__name__}: {label or reason}")
        self.reason = reason


class RedistributionDenied(RuleDenied):
    pass


class ConsumptionDenied(RuleDenied):
    pass


class ResaleLimitExhausted(SuperdistError):
    pass


class NotOwner(SuperdistError):
    pass


class AlreadyRedeemed(SuperdistError):
    pass


class InvalidReceipt(SuperdistError):
    pass


class NotInCatalog(SuperdistError):
    pass


class UnknownTAN(SuperdistError):
    pass


class ContainerFormatError(SuperdistError):
    pass


class ConfigError(SuperdistError):
    """Invalid experiment configuration, with the offending key and values."""

    def __init__(
        self,
        message: str,
        *,
        key: str | None = None,
        expected: Any | None = None,
        received: Any | None = None,
    ) -> None:
        super().__init__(message)
        self.key = key
        self.expected = expected
        self.received = received

    def to_dict(self) -> dict[str, Any]:
        structured: dict[str, Any] = {"error": str(self)}
        if self.key is not None:
            structured["key"] = self.key
        if self.expected is not None:
            structured["expected"] = self.expected
        if self.received is not None:
            structured["received"] = self.received
        return structured


class InvalidContainer(SuperdistError):
    """A container failed verification; ``report`` says where."""

    def __init__(self, report: Any) -> None:
        super().__init__(f"container rejected: {report}")
        self.report = report
