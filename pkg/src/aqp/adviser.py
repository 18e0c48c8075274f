"""Scoring, ranking and selection of prepared execution plans."""

from __future__ import annotations

from dataclasses import dataclass, field

from .exceptions import DomainError, UnknownPlanError
from .profile import Category, UserProfile, category_weight, relevance
from .vector import QueryVector

DEFAULT_ADVISE_THRESHOLD = 0.3
DEFAULT_PREPARED_COST = 1.0
DEFAULT_FRESH_COST = 10.0


@dataclass
class PlanCandidate:
    plan_id: int
    category_id: int
    prepared_cost: float
    fresh_cost: float
    user_id: int = 0
    hit_count: int = 0

    def __post_init__(self):
        if self.prepared_cost < 0 or self.fresh_cost < 0:
            raise DomainError("plan costs must be nonnegative")
        if self.prepared_cost > self.fresh_cost:
            raise DomainError(
                f"prepared cost {self.prepared_cost} exceeds fresh cost {self.fresh_cost}")


@dataclass
class PlanRegistry:
    """Prepared plans, at most one per (user, category), plus cost accounting.

    Category ids are only unique inside one profile, so plans are keyed by the
    owning user as well. Mutating methods need a single writer.
    """

    plans: dict[int, PlanCandidate] = field(default_factory=dict)
    by_category: dict[tuple[int, int], int] = field(default_factory=dict)
    default_fresh_cost: float = DEFAULT_FRESH_COST
    prepared_cost_total: float = 0.0
    fallback_cost_total: float = 0.0
    fallback_count: int = 0

    def register(self, user_id: int, category_id: int,
                 prepared_cost: float = DEFAULT_PREPARED_COST,
                 fresh_cost: float | None = None) -> PlanCandidate:
        key = (user_id, category_id)
        if key in self.by_category:
            return self.plans[self.by_category[key]]
        plan_id = max(self.plans, default=-1) + 1
        plan = PlanCandidate(
            plan_id=plan_id,
            category_id=category_id,
            user_id=user_id,
            prepared_cost=prepared_cost,
            fresh_cost=self.default_fresh_cost if fresh_cost is None else fresh_cost,
        )
        self.plans[plan_id] = plan
        self.by_category[key] = plan_id
        return plan

    def plan_for(self, user_id: int, category_id: int) -> PlanCandidate | None:
        plan_id = self.by_category.get((user_id, category_id))
        return None if plan_id is None else self.plans[plan_id]

    def __getitem__(self, plan_id: int) -> PlanCandidate:
        try:
            return self.plans[plan_id]
        except KeyError:
            raise UnknownPlanError(f"no plan {plan_id} in registry") from None


@dataclass(frozen=True, order=True)
class ScoredCategory:
    category_id: int
    score: float


@dataclass(frozen=True)
class Recommendation:
    plan_id: int | None
    score: float
    estimated_cost: float
    category_id: int | None = None

    @property
    def fallback(self) -> bool:
        return self.plan_id is None


def score(c: Category, q: QueryVector, p: UserProfile) -> ScoredCategory:
    """Usage share of ``c`` times its relevance to ``q``."""
    return ScoredCategory(c.id, category_weight(c, p) * relevance(c, q))


def rank(p: UserProfile, q: QueryVector) -> list[ScoredCategory]:
    scored = [score(c, q, p) for c in p.categories]
    return sorted(scored, key=lambda s: (-s.score, s.category_id))


def advise(q: QueryVector, p: UserProfile, reg: PlanRegistry,
           advise_threshold: float = DEFAULT_ADVISE_THRESHOLD) -> Recommendation:
    """Pick the prepared plan of the top-ranked category, or fall back.

    Falls back to fresh optimization when the profile is empty, the top score
    is below ``advise_threshold``, or no plan is registered for the category.
    """
    if not 0.0 <= advise_threshold <= 1.0:
        raise DomainError(f"advise_threshold must lie in [0, 1], got {advise_threshold}")
    ranked = rank(p, q)
    if not ranked:
        return Recommendation(None, 0.0, reg.default_fresh_cost)
    top = ranked[0]
    plan = reg.plan_for(p.user_id, top.category_id)
    if top.score >= advise_threshold and plan is not None:
        return Recommendation(plan.plan_id, top.score, plan.prepared_cost, top.category_id)
    return Recommendation(None, top.score, reg.default_fresh_cost, top.category_id)


def record_outcome(reg: PlanRegistry, rec: Recommendation, actual_cost: float) -> PlanRegistry:
    if rec.fallback:
        reg.fallback_cost_total += actual_cost
        reg.fallback_count += 1
        return reg
    plan = reg[rec.plan_id]
    plan.hit_count += 1
    reg.prepared_cost_total += actual_cost
    return reg
