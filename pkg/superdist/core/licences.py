"""Information model of a digital good.

A good is a compound of content, a consumption licence (consumption rules,
remuneration rules, content association) and a redistribution licence
(redistribution rules, content association). Rules form a small closed AST
that evaluates to Allow or Deny against a ``RuleContext``.

Rules coming from outside the system (legislation, copyright law, social
norms) are not representable here.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple, Union

from superdist.core.errors import AssociationError, EmptyContent, InvalidContext, SuperdistError


def content_digest(content: bytes) -> bytes:
    return hashlib.sha256(content).digest()


def canonical_json(obj: Any) -> bytes:
    """Byte-stable text form: sorted keys, no insignificant whitespace, ASCII only."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True).encode(
        "ascii"
    )


# --- rules -----------------------------------------------------------------


@dataclass(frozen=True)
class MaxResales:
    limit: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "limit", int(self.limit))
        if self.limit < 0:
            raise SuperdistError(f"MaxResales limit must be >= 0, got {self.limit}")


@dataclass(frozen=True)
class NotBefore:
    time: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "time", int(self.time))


@dataclass(frozen=True)
class MinDistanceMoved:
    metres: float

    def __post_init__(self) -> None:
        # Stored as float so an int literal and its decoded form encode alike.
        object.__setattr__(self, "metres", float(self.metres))
        if self.metres < 0:
            raise SuperdistError(f"MinDistanceMoved must be >= 0, got {self.metres}")


@dataclass(frozen=True)
class MaxSaturation:
    s: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "s", float(self.s))
        if not 0 <= self.s <= 1:
            raise SuperdistError(f"MaxSaturation must be in [0, 1], got {self.s}")


@dataclass(frozen=True)
class AllowAll:
    pass


@dataclass(frozen=True)
class DenyAll:
    pass


@dataclass(frozen=True)
class AllOf:
    rules: Tuple["Rule", ...]

    def __post_init__(self) -> None:
        if not self.rules:
            raise SuperdistError("All needs at least one rule")


@dataclass(frozen=True)
class AnyOf:
    rules: Tuple["Rule", ...]

    def __post_init__(self) -> None:
        if not self.rules:
            raise SuperdistError("Any needs at least one rule")


Leaf = Union[MaxResales, NotBefore, MinDistanceMoved, MaxSaturation, AllowAll, DenyAll]
Rule = Union[Leaf, AllOf, AnyOf]

_LEAF_TYPES = (MaxResales, NotBefore, MinDistanceMoved, MaxSaturation, AllowAll, DenyAll)


@dataclass(frozen=True)
class RuleContext:
    """Inputs a rule is evaluated against."""

    now: int = 0
    distance_moved_since_acquisition: float = 0.0
    resales_done: int = 0
    market_saturation: float = 0.0

    def __post_init__(self) -> None:
        if self.now < 0 or self.distance_moved_since_acquisition < 0 or self.resales_done < 0:
            raise InvalidContext("rule context fields must be non-negative")
        if not 0 <= self.market_saturation <= 1:
            raise InvalidContext(f"saturation must be in [0, 1], got {self.market_saturation}")


@dataclass(frozen=True)
class Decision:
    allowed: bool
    reason: Optional[Leaf] = None

    @classmethod
    def allow(cls) -> "Decision":
        return cls(True)

    @classmethod
    def deny(cls, reason: Leaf) -> "Decision":
        return cls(False, reason)


def evaluate(rule: Rule, ctx: RuleContext) -> Decision:
    """Evaluate ``rule`` against ``ctx``.

    All short-circuits on its first Deny, Any on its first Allow. A Deny
    carries the first failing leaf; an Any where every branch fails reports
    the first branch's reason.
    """
    match rule:
        case AllowAll():
            return Decision.allow()
        case DenyAll():
            return Decision.deny(rule)
        case MaxResales(limit=limit):
            ok = ctx.resales_done < limit
        case NotBefore(time=time):
            ok = ctx.now >= time
        case MinDistanceMoved(metres=metres):
            ok = ctx.distance_moved_since_acquisition >= metres
        case MaxSaturation(s=s):
            ok = ctx.market_saturation <= s
        case AllOf(rules=rules):
            for child in rules:
                decision = evaluate(child, ctx)
                if not decision.allowed:
                    return decision
            return Decision.allow()
        case AnyOf(rules=rules):
            first_denial: Optional[Decision] = None
            for child in rules:
                decision = evaluate(child, ctx)
                if decision.allowed:
                    return decision
                first_denial = first_denial or decision
            return first_denial  # type: ignore[return-value]
        case _:
            raise SuperdistError(f"Unknown rule: {rule!r}")
    return Decision.allow() if ok else Decision.deny(rule)


def leaves(rule: Rule) -> List[Leaf]:
    if isinstance(rule, (AllOf, AnyOf)):
        return [leaf for child in rule.rules for leaf in leaves(child)]
    return [rule]


def rule_to_dict(rule: Rule) -> Dict[str, Any]:
    match rule:
        case MaxResales(limit=limit):
            return {"type": "MaxResales", "limit": limit}
        case NotBefore(time=time):
            return {"type": "NotBefore", "time": time}
        case MinDistanceMoved(metres=metres):
            return {"type": "MinDistanceMoved", "metres": metres}
        case MaxSaturation(s=s):
            return {"type": "MaxSaturation", "s": s}
        case AllowAll():
            return {"type": "AllowAll"}
        case DenyAll():
            return {"type": "DenyAll"}
        case AllOf(rules=rules):
            return {"type": "All", "rules": [rule_to_dict(r) for r in rules]}
        case AnyOf(rules=rules):
            return {"type": "Any", "rules": [rule_to_dict(r) for r in rules]}
    raise SuperdistError(f"Unknown rule: {rule!r}")


def rule_from_dict(data: Dict[str, Any]) -> Rule:
    kind = data.get("type")
    if kind == "MaxResales":
        return MaxResales(int(data["limit"]))
    if kind == "NotBefore":
        return NotBefore(int(data["time"]))
    if kind == "MinDistanceMoved":
        return MinDistanceMoved(float(data["metres"]))
    if kind == "MaxSaturation":
        return MaxSaturation(float(data["s"]))
    if kind == "AllowAll":
        return AllowAll()
    if kind == "DenyAll":
        return DenyAll()
    if kind == "All":
        return AllOf(tuple(rule_from_dict(r) for r in data["rules"]))
    if kind == "Any":
        return AnyOf(tuple(rule_from_dict(r) for r in data["rules"]))
    raise SuperdistError(f"Unknown rule type: {kind!r}")


def describe(rule: Rule) -> str:
    """Short label for a rule, used in denial messages."""
    if isinstance(rule, _LEAF_TYPES):
        fields = {k: v for k, v in rule_to_dict(rule).items() if k != "type"}
        args = ", ".join(str(v) for v in fields.values())
        return f"{type(rule).__name__}({args})"
    return rule_to_dict(rule)["type"]


# --- licences and goods ----------------------------------------------------


@dataclass(frozen=True)
class ContentAssociation:
    content_id: str
    digest: bytes

    def to_dict(self) -> Dict[str, str]:
        return {"content_id": self.content_id, "digest": self.digest.hex()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ContentAssociation":
        return cls(content_id=data["content_id"], digest=bytes.fromhex(data["digest"]))


@dataclass(frozen=True)
class ConsumptionLicence:
    consumption_rules: Rule
    remuneration_rules: str
    association: ContentAssociation

    def to_dict(self) -> Dict[str, Any]:
        return {
            "consumption_rules": rule_to_dict(self.consumption_rules),
            "remuneration_rules": self.remuneration_rules,
            "association": self.association.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ConsumptionLicence":
        return cls(
            consumption_rules=rule_from_dict(data["consumption_rules"]),
            remuneration_rules=data["remuneration_rules"],
            association=ContentAssociation.from_dict(data["association"]),
        )


@dataclass(frozen=True)
class RedistributionLicence:
    redistribution_rules: Rule
    association: ContentAssociation

    def to_dict(self) -> Dict[str, Any]:
        return {
            "redistribution_rules": rule_to_dict(self.redistribution_rules),
            "association": self.association.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RedistributionLicence":
        return cls(
            redistribution_rules=rule_from_dict(data["redistribution_rules"]),
            association=ContentAssociation.from_dict(data["association"]),
        )


@dataclass(frozen=True)
class DigitalGood:
    content: bytes
    consumption_licence: ConsumptionLicence
    redistribution_licence: RedistributionLicence

    @property
    def association(self) -> ContentAssociation:
        return self.consumption_licence.association


def make_good(
    content: bytes,
    consumption_rules: Rule,
    scheme_ref: str,
    redistribution_rules: Rule,
    *,
    content_id: Optional[str] = None,
) -> DigitalGood:
    """Bundle content with both licences sharing one content association.

    ``scheme_ref`` names the remuneration scheme (see ``market.scheme_preset``).
    """
    if not content:
        raise EmptyContent("content must be non-empty")
    digest = content_digest(content)
    association = ContentAssociation(
        content_id=content_id or f"good-{digest.hex()[:16]}", digest=digest
    )
    return DigitalGood(
        content=content,
        consumption_licence=ConsumptionLicence(consumption_rules, scheme_ref, association),
        redistribution_licence=RedistributionLicence(redistribution_rules, association),
    )


def verify_association(good: DigitalGood) -> bool:
    consumption = good.consumption_licence.association
    redistribution = good.redistribution_licence.association
    return consumption == redistribution and content_digest(good.content) == consumption.digest


def require_association(good: DigitalGood) -> None:
    if not verify_association(good):
        raise AssociationError("licences do not match the good's content")
