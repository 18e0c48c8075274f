"""Per-user profiles of query categories and their long-term learning.

Each user owns one profile. A profile is an ordered list of categories, and
each category keeps a positive descriptor (what it matches) and a negative
descriptor (what it rejects). Descriptors are updated with the Rocchio rule.
"""

from __future__ import annotations

import enum
import math
from collections.abc import Sequence
from dataclasses import dataclass, field, replace

from .exceptions import DomainError, UnknownCategoryError
from .vector import ZERO, QueryVector, cosine


class FeedbackType(enum.Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"


@dataclass(frozen=True)
class Category:
    id: int
    desc_pos: QueryVector
    desc_neg: QueryVector = ZERO
    usage_count: int = 1
    linked_plan: int | None = None
    created_at: int = 0

    def __post_init__(self):
        if self.usage_count < 1:
            raise DomainError(f"usage_count must be >= 1, got {self.usage_count}")


@dataclass(frozen=True)
class UserProfile:
    user_id: int
    categories: tuple[Category, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "categories", tuple(self.categories))
        ids = [c.id for c in self.categories]
        if any(b <= a for a, b in zip(ids, ids[1:])):
            raise DomainError(f"category ids must be strictly increasing, got {ids}")

    def __len__(self):
        return len(self.categories)

    def get(self, category_id: int) -> Category:
        for c in self.categories:
            if c.id == category_id:
                return c
        raise UnknownCategoryError(f"no category {category_id} in profile of user {self.user_id}")

    def next_category_id(self) -> int:
        return self.categories[-1].id + 1 if self.categories else 0

    def replace_category(self, category: Category) -> UserProfile:
        cats = tuple(category if c.id == category.id else c for c in self.categories)
        return replace(self, categories=cats)

    def total_usage(self) -> int:
        return sum(c.usage_count for c in self.categories)


@dataclass(frozen=True)
class FeedbackBatch:
    relevant: tuple[QueryVector, ...] = ()
    non_relevant: tuple[QueryVector, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "relevant", tuple(self.relevant))
        object.__setattr__(self, "non_relevant", tuple(self.non_relevant))
        if set(self.relevant) & set(self.non_relevant):
            raise DomainError("relevant and non-relevant examples must be disjoint")


@dataclass(frozen=True)
class LearnConfig:
    theta: float = 0.5
    gamma: float = 1.0
    beta: float = 0.75
    lambda_: float = 0.15
    alpha: float = 1.0
    clamp_negative: bool = True

    def __post_init__(self):
        if not 0.0 <= self.theta <= 1.0:
            raise DomainError(f"theta must lie in [0, 1], got {self.theta}")
        for name in ("gamma", "beta", "lambda_"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0.0):
                raise DomainError(f"{name} must be a finite nonnegative number, got {value}")
        if not 0.0 < self.alpha <= 1.0:
            raise DomainError(f"alpha must lie in (0, 1], got {self.alpha}")


def _centroid(vectors: Sequence[QueryVector]) -> QueryVector:
    total: dict[int, list[float]] = {}
    for v in vectors:
        for k, w in v.items():
            total.setdefault(k, []).append(w)
    n = len(vectors)
    return QueryVector({k: math.fsum(ws) / n for k, ws in total.items()})


def rocchio(q_old: QueryVector, batch: FeedbackBatch, cfg: LearnConfig) -> QueryVector:
    """``gamma*q_old + beta*mean(relevant) - lambda*mean(non_relevant)``.

    A term whose example list is empty is dropped. With ``clamp_negative``
    the result is projected onto the nonnegative orthant.
    """
    out = q_old.scale(cfg.gamma)
    if batch.relevant:
        out = out + _centroid(batch.relevant).scale(cfg.beta)
    if batch.non_relevant:
        out = out - _centroid(batch.non_relevant).scale(cfg.lambda_)
    if cfg.clamp_negative:
        out = out.clamp_nonnegative()
    return out


def relevance(c: Category, q: QueryVector) -> float:
    return cosine(c.desc_pos, q)


def best_category(p: UserProfile, q: QueryVector) -> tuple[Category, float] | None:
    """Most relevant category of ``p`` for ``q``; the oldest one wins ties."""
    best = None
    for c in p.categories:
        r = relevance(c, q)
        if best is None or r > best[1]:
            best = (c, r)
    return best


def update_category(c: Category, q: QueryVector, fb: FeedbackType, cfg: LearnConfig) -> Category:
    """Fold one feedback example into a category.

    ``alpha`` scales the feedback term. Positive feedback pulls the positive
    descriptor toward ``q``. Negative feedback pushes the positive descriptor
    away from ``q`` and accumulates ``q`` into the negative descriptor.
    """
    if fb is FeedbackType.POSITIVE:
        step = replace(cfg, beta=cfg.alpha * cfg.beta)
        desc_pos = rocchio(c.desc_pos, FeedbackBatch(relevant=(q,)), step)
        desc_neg = c.desc_neg
    else:
        step = replace(cfg, lambda_=cfg.alpha * cfg.lambda_)
        desc_pos = rocchio(c.desc_pos, FeedbackBatch(non_relevant=(q,)), step)
        desc_neg = rocchio(c.desc_neg, FeedbackBatch(relevant=(q,)),
                           replace(cfg, beta=cfg.alpha * cfg.beta))
    return replace(c, desc_pos=desc_pos, desc_neg=desc_neg, usage_count=c.usage_count + 1)


def learn(
    p: UserProfile,
    q: QueryVector,
    fb: FeedbackType = FeedbackType.POSITIVE,
    cfg: LearnConfig = LearnConfig(),
    sample_provided: bool = True,
    forced_category: int | None = None,
    event_index: int = 0,
) -> UserProfile:
    """Route a new query into ``p``, updating or creating a category.

    When the user supplied ``q`` as a sample, the target is the most relevant
    category; otherwise it is ``forced_category``. The target is updated if its
    relevance reaches ``cfg.theta``, else a new category seeded from ``q`` is
    appended. A zero query carries no usable features and leaves ``p`` as is.
    """
    fb = FeedbackType(fb)
    if sample_provided:
        hit = best_category(p, q)
    else:
        if forced_category is None:
            raise UnknownCategoryError("forced_category is required when no sample is provided")
        target = p.get(forced_category)
        hit = (target, relevance(target, q))

    if q.is_zero:
        return p
    if hit is not None and hit[1] >= cfg.theta:
        return p.replace_category(update_category(hit[0], q, fb, cfg))
    created = Category(id=p.next_category_id(), desc_pos=q, created_at=event_index)
    return replace(p, categories=p.categories + (created,))


def category_weight(c: Category, p: UserProfile) -> float:
    """Share of the profile's total usage that falls on ``c``."""
    if not p.categories:
        raise UnknownCategoryError(f"category {c.id} is not in profile of user {p.user_id}")
    total = p.total_usage()
    if total == 0:
        return 1.0 / len(p.categories)
    return c.usage_count / total
