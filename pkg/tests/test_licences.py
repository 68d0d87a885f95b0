"""Tests for the licence information model and rule engine."""

import random
from dataclasses import replace

import pytest

from superdist.core.errors import AssociationError, EmptyContent, InvalidContext
from superdist.core.licences import (
    AllOf,
    AllowAll,
    AnyOf,
    DenyAll,
    MaxResales,
    MaxSaturation,
    MinDistanceMoved,
    NotBefore,
    RuleContext,
    canonical_json,
    content_digest,
    describe,
    evaluate,
    leaves,
    make_good,
    require_association,
    rule_from_dict,
    rule_to_dict,
    verify_association,
)


def random_rule(rng: random.Random, depth: int = 0):
    leaves_ = [
        lambda: MaxResales(rng.randint(0, 4)),
        lambda: NotBefore(rng.randint(0, 10)),
        lambda: MinDistanceMoved(float(rng.choice([0, 50, 100, 200]))),
        lambda: MaxSaturation(rng.choice([0.0, 0.25, 0.5, 1.0])),
        AllowAll,
        DenyAll,
    ]
    if depth < 3 and rng.random() < 0.4:
        children = tuple(random_rule(rng, depth + 1) for _ in range(rng.randint(1, 3)))
        return AllOf(children) if rng.random() < 0.5 else AnyOf(children)
    return rng.choice(leaves_)()


def random_context(rng: random.Random) -> RuleContext:
    return RuleContext(
        now=rng.randint(0, 12),
        distance_moved_since_acquisition=float(rng.choice([0, 50, 100, 150, 300])),
        resales_done=rng.randint(0, 5),
        market_saturation=rng.choice([0.0, 0.2, 0.5, 0.9, 1.0]),
    )


class TestEvaluate:
    """Rule evaluation against a context."""

    def test_distance_rule_denies(self):
        """Moving only 50 m does not satisfy a 100 m requirement."""
        ctx = RuleContext(distance_moved_since_acquisition=50.0)
        decision = evaluate(MinDistanceMoved(100), ctx)

        assert not decision.allowed
        assert decision.reason == MinDistanceMoved(100)

    def test_max_resales_boundary(self):
        assert not evaluate(MaxResales(3), RuleContext(resales_done=3)).allowed
        assert evaluate(MaxResales(3), RuleContext(resales_done=2)).allowed

    def test_allow_all(self):
        rng = random.Random(1)
        for _ in range(50):
            assert evaluate(AllowAll(), random_context(rng)).allowed

    def test_not_before_and_saturation(self):
        assert not evaluate(NotBefore(5), RuleContext(now=4)).allowed
        assert evaluate(NotBefore(5), RuleContext(now=5)).allowed
        assert evaluate(MaxSaturation(0.5), RuleContext(market_saturation=0.5)).allowed
        assert not evaluate(MaxSaturation(0.5), RuleContext(market_saturation=0.6)).allowed

    def test_all_reports_first_failure(self):
        rule = AllOf((AllowAll(), NotBefore(10), DenyAll()))
        decision = evaluate(rule, RuleContext(now=0))

        assert decision.reason == NotBefore(10)

    def test_any_short_circuits(self):
        rule = AnyOf((DenyAll(), MaxResales(1), NotBefore(99)))
        assert evaluate(rule, RuleContext(resales_done=0)).allowed
        denied = evaluate(rule, RuleContext(resales_done=1))
        assert denied.reason == DenyAll()

    def test_deny_reason_is_a_present_leaf(self):
        """Random rules: evaluation is pure and a denial names a leaf of the rule."""
        rng = random.Random(2024)
        for _ in range(500):
            rule = random_rule(rng)
            ctx = random_context(rng)
            decision = evaluate(rule, ctx)
            assert decision == evaluate(rule, ctx)
            if not decision.allowed:
                assert decision.reason in leaves(rule)

    def test_single_child_composites_match_the_child(self):
        rng = random.Random(11)
        for _ in range(500):
            leaf = random_rule(rng, depth=3)
            ctx = random_context(rng)
            expected = evaluate(leaf, ctx)
            assert evaluate(AllOf((leaf,)), ctx) == expected
            assert evaluate(AnyOf((leaf,)), ctx) == expected

    def test_context_validation(self):
        with pytest.raises(InvalidContext):
            RuleContext(market_saturation=1.5)
        with pytest.raises(InvalidContext):
            RuleContext(resales_done=-1)


class TestRuleSerialisation:
    """Byte-stable rule forms."""

    def test_round_trip_random_rules(self):
        rng = random.Random(7)
        for _ in range(100):
            rule = random_rule(rng)
            assert rule_from_dict(rule_to_dict(rule)) == rule

    def test_numeric_fields_are_normalised(self):
        """Int literals serialise exactly like their decoded form."""
        for rule in (MinDistanceMoved(100), MaxSaturation(1), MaxResales(2.0), NotBefore(3.0)):
            decoded = rule_from_dict(rule_to_dict(rule))
            assert decoded == rule
            assert canonical_json(rule_to_dict(decoded)) == canonical_json(rule_to_dict(rule))
        assert rule_to_dict(MinDistanceMoved(100))["metres"] == 100.0
        assert isinstance(rule_to_dict(MaxResales(2.0))["limit"], int)

    def test_composite_names(self):
        assert rule_to_dict(AllOf((AllowAll(),)))["type"] == "All"
        assert rule_to_dict(AnyOf((AllowAll(),)))["type"] == "Any"

    def test_canonical_json_sorted_and_compact(self):
        assert canonical_json({"b": 1, "a": [1, 2]}) == b'{"a":[1,2],"b":1}'

    def test_describe(self):
        assert describe(MinDistanceMoved(100.0)) == "MinDistanceMoved(100.0)"
        assert describe(AllOf((DenyAll(),))) == "All"

    def test_unknown_rule_type(self):
        with pytest.raises(Exception, match="Unknown rule type"):
            rule_from_dict({"type": "Geofence"})


class TestDigitalGood:
    """Content association between a good and its licences."""

    def test_round_trip(self):
        good = make_good(b"song", AllowAll(), "potato", AllowAll())
        assert verify_association(good)

    def test_flipped_byte(self):
        good = make_good(b"song", AllowAll(), "potato", AllowAll())
        tampered = replace(good, content=b"sonh")
        assert not verify_association(tampered)

    def test_truncated_content(self):
        good = make_good(b"song", AllowAll(), "potato", AllowAll())
        assert not verify_association(replace(good, content=b"son"))

    def test_identical_content_same_digest(self):
        a = make_good(b"same bytes", AllowAll(), "potato", AllowAll())
        b = make_good(b"same bytes", DenyAll(), "zero", DenyAll())
        assert a.association.digest == b.association.digest == content_digest(b"same bytes")

    def test_swapped_licence(self):
        a = make_good(b"first", AllowAll(), "potato", AllowAll())
        b = make_good(b"second", AllowAll(), "potato", AllowAll())
        mixed = replace(a, redistribution_licence=b.redistribution_licence)

        assert not verify_association(mixed)
        with pytest.raises(AssociationError):
            require_association(mixed)

    def test_empty_content(self):
        with pytest.raises(EmptyContent):
            make_good(b"", AllowAll(), "potato", AllowAll())

    def test_licence_dicts_round_trip(self):
        good = make_good(b"x", MaxResales(2), "potato", AllOf((NotBefore(3),)), content_id="x1")
        licence = good.consumption_licence

        assert type(licence).from_dict(licence.to_dict()) == licence
        assert licence.to_dict()["remuneration_rules"] == "potato"
        assert good.association.content_id == "x1"
