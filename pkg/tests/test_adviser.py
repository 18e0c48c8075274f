import random

import pytest
from hypothesis import given, strategies as st

from aqp.adviser import (PlanCandidate, PlanRegistry, Recommendation, advise, rank,
                         record_outcome, score)
from aqp.exceptions import DomainError, UnknownPlanError
from aqp.profile import Category, UserProfile, category_weight
from aqp.vector import QueryVector, cosine

from test_profile import random_profile, random_vector


def covered(profile: UserProfile, reg: PlanRegistry | None = None) -> PlanRegistry:
    reg = reg or PlanRegistry()
    for c in profile.categories:
        reg.register(profile.user_id, c.id, prepared_cost=1.0, fresh_cost=10.0)
    return reg


def brute_force_advise(q, p, reg, threshold):
    """Score every category, take the max (oldest on ties), apply the threshold."""
    best_id, best_score = None, None
    total = sum(c.usage_count for c in p.categories)
    for c in p.categories:
        s = c.usage_count / total * cosine(c.desc_pos, q)
        if best_score is None or s > best_score:
            best_id, best_score = c.id, s
    if best_id is None:
        return None
    plan = reg.plan_for(p.user_id, best_id)
    if best_score >= threshold and plan is not None:
        return plan.plan_id
    return None


@pytest.fixture
def two_category_profile():
    # weights 0.75 / 0.25
    c0 = Category(0, QueryVector({0: 1.0}), usage_count=3)
    c1 = Category(1, QueryVector({1: 1.0}), usage_count=1)
    return UserProfile(7, (c0, c1))


class TestScore:
    def test_single_category_weight_one(self):
        c = Category(0, QueryVector({0: 1, 1: 2}))
        q = QueryVector({0: 2, 1: 1})
        assert score(c, q, UserProfile(0, (c,))).score == pytest.approx(0.8)

    def test_zero_relevance(self, two_category_profile):
        c0 = two_category_profile.categories[0]
        assert score(c0, QueryVector({5: 1.0}), two_category_profile).score == 0.0

    def test_product(self):
        c0 = Category(0, QueryVector({0: 1, 1: 2}), usage_count=3)
        c1 = Category(1, QueryVector({2: 1.0}), usage_count=1)
        p = UserProfile(0, (c0, c1))
        s = score(c0, QueryVector({0: 2, 1: 1}), p)
        assert s.score == pytest.approx(0.75 * 0.8, abs=1e-12)
        assert s.category_id == 0


class TestRank:
    def test_empty(self):
        assert rank(UserProfile(0), QueryVector({0: 1.0})) == []

    def test_order(self):
        # equal weights (1/3 each); relevances 0.2, 0.6, 0.4 -> scores in the same order
        q = QueryVector({0: 1.0})

        def cat(i, r):
            return Category(i, QueryVector({0: r, 1 + i: (1 - r * r) ** 0.5}))

        p = UserProfile(0, (cat(0, 0.2), cat(1, 0.6), cat(2, 0.4)))
        ranked = rank(p, q)
        assert [s.category_id for s in ranked] == [1, 2, 0]
        assert [s.score for s in ranked] == pytest.approx([0.6 / 3, 0.4 / 3, 0.2 / 3])

    def test_ties_by_id(self):
        v = QueryVector({0: 1.0})
        p = UserProfile(0, tuple(Category(i, v) for i in (2, 4, 9)))
        assert [s.category_id for s in rank(p, v)] == [2, 4, 9]

    def test_permutation_and_range(self):
        rng = random.Random(8)
        for _ in range(200):
            p = random_profile(rng)
            ranked = rank(p, random_vector(rng))
            assert sorted(s.category_id for s in ranked) == [c.id for c in p.categories]
            assert all(0.0 <= s.score <= 1.0 for s in ranked)


class TestAdvise:
    def test_empty_profile_falls_back(self):
        rec = advise(QueryVector({0: 1.0}), UserProfile(0), PlanRegistry(default_fresh_cost=12.0))
        assert rec.fallback and rec.plan_id is None and rec.estimated_cost == 12.0

    def test_high_score_uses_plan(self):
        c = Category(0, QueryVector({0: 1.0, 1: 0.4843221048378526}))   # cos to {0:1} = 0.9
        p = UserProfile(3, (c,))
        reg = covered(p)
        rec = advise(QueryVector({0: 1.0}), p, reg, advise_threshold=0.3)
        assert rec.score == pytest.approx(0.9)
        assert not rec.fallback
        assert rec.plan_id == reg.plan_for(3, 0).plan_id
        assert rec.estimated_cost == 1.0

    def test_low_score_falls_back(self):
        c = Category(0, QueryVector({0: 0.1, 1: 0.99498743710662}))     # cos to {0:1} = 0.1
        p = UserProfile(3, (c,))
        rec = advise(QueryVector({0: 1.0}), p, covered(p), advise_threshold=0.3)
        assert rec.score == pytest.approx(0.1)
        assert rec.fallback and rec.estimated_cost == 10.0

    def test_unregistered_plan_falls_back(self, two_category_profile):
        rec = advise(QueryVector({0: 1.0}), two_category_profile, PlanRegistry(), 0.0)
        assert rec.fallback

    def test_plans_are_per_user(self, two_category_profile):
        reg = PlanRegistry()
        reg.register(99, 0)
        rec = advise(QueryVector({0: 1.0}), two_category_profile, reg, 0.0)
        assert rec.fallback

    def test_threshold_domain(self, two_category_profile):
        with pytest.raises(DomainError):
            advise(QueryVector({0: 1.0}), two_category_profile, PlanRegistry(), 1.5)

    def test_threshold_zero_full_coverage_never_falls_back(self):
        rng = random.Random(21)
        for _ in range(300):
            p = random_profile(rng)
            if not p.categories:
                continue
            assert not advise(random_vector(rng), p, covered(p), 0.0).fallback

    def test_brute_force_oracle(self):
        rng = random.Random(4)
        for _ in range(1000):
            p = random_profile(rng, user=rng.randrange(3))
            reg = PlanRegistry()
            for c in p.categories:
                if rng.random() < 0.8:
                    reg.register(p.user_id, c.id)
            q = random_vector(rng)
            threshold = rng.choice([0.0, 0.05, 0.1, 0.3, 0.6, 1.0])
            assert advise(q, p, reg, threshold).plan_id == brute_force_advise(q, p, reg, threshold)

    @given(st.floats(1e-3, 1e3), st.integers(0, 10_000))
    def test_scale_invariance(self, factor, seed):
        rng = random.Random(seed)
        p = random_profile(rng)
        reg = covered(p)
        q = random_vector(rng)
        q2 = q.scale(factor)
        assert [s.category_id for s in rank(p, q)] == [s.category_id for s in rank(p, q2)]
        assert advise(q, p, reg, 0.2).plan_id == advise(q2, p, reg, 0.2).plan_id


class TestRegistry:
    def test_register_is_idempotent(self):
        reg = PlanRegistry()
        a = reg.register(0, 0)
        b = reg.register(0, 0)
        assert a is b and len(reg.plans) == 1

    def test_prepared_never_exceeds_fresh(self):
        with pytest.raises(DomainError):
            PlanCandidate(0, 0, prepared_cost=5.0, fresh_cost=1.0)

    def test_fallback_outcome(self):
        reg = PlanRegistry()
        reg.register(0, 0)
        record_outcome(reg, Recommendation(None, 0.0, 10.0), 10.0)
        assert reg.fallback_cost_total == 10.0 and reg.fallback_count == 1
        assert reg.plans[0].hit_count == 0

    def test_hits(self):
        reg = PlanRegistry()
        plan = reg.register(0, 0)
        rec = Recommendation(plan.plan_id, 0.9, 1.0, 0)
        record_outcome(reg, rec, 1.0)
        assert plan.hit_count == 1
        record_outcome(reg, rec, 1.0)
        assert plan.hit_count == 2
        assert reg.prepared_cost_total == 2.0

    def test_unknown_plan(self):
        with pytest.raises(UnknownPlanError):
            record_outcome(PlanRegistry(), Recommendation(5, 0.9, 1.0), 1.0)
