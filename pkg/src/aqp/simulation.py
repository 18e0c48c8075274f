"""Synthetic multi-user query workload and the adaptive-vs-baseline replay.

The generator builds a catalog of query templates partitioned into groups,
gives every user a preference distribution over groups, and emits a seeded
stream of queries. ``run`` replays a stream either through the adaptive
system (profile learning plus plan advice) or through a baseline that
re-optimizes every query.
"""

from __future__ import annotations

import math
from collections import Counter, deque
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field, replace

import numpy as np

from .adviser import (DEFAULT_FRESH_COST, DEFAULT_PREPARED_COST,
                      PlanRegistry, Recommendation, advise, record_outcome)
from .exceptions import DomainError, EmptyWindowError, PermutationError
from .ga import EvaluationSet, GaConfig, evolve
from .profile import (FeedbackType, LearnConfig, UserProfile, best_category, learn)
from .vector import (COMMAND_GROUPS, CorpusStats, FeatureVocabulary, QueryTemplate, RawCounts,
                     build_vector, observe)

# A category is served only if usage share * relevance clears the threshold;
# with several categories per user, 0.3 would lock out every non-dominant one.
SIM_ADVISE_THRESHOLD = 0.1


@dataclass(frozen=True)
class WorkloadEvent:
    index: int
    user_id: int
    template_id: int
    raw: RawCounts
    ground_truth_category: int


@dataclass(frozen=True)
class SimConfig:
    num_users: int = 160
    num_queries: int = 8400
    num_templates: int = 48
    num_groups: int = 12
    groups_per_user: int = 2
    stray_rate: float = 0.05
    drift_at: int | None = None
    drift_permutation: Mapping[int, int] | None = None
    warmup_fraction: float = 0.25
    window_size: int | None = None
    seed: int = 0
    learn_cfg: LearnConfig = field(default_factory=LearnConfig)
    advise_threshold: float = SIM_ADVISE_THRESHOLD
    prepared_cost: float = DEFAULT_PREPARED_COST
    fresh_cost: float = DEFAULT_FRESH_COST
    ga_every: int | None = None
    ga_cfg: GaConfig = field(default_factory=lambda: GaConfig(generations=10))

    def __post_init__(self):
        if self.num_users < 1:
            raise DomainError("num_users must be >= 1")
        if self.num_queries < 0:
            raise DomainError("num_queries must be >= 0")
        if self.num_groups < 1 or self.num_templates < self.num_groups:
            raise DomainError("need num_groups >= 1 and num_templates >= num_groups")
        if not 1 <= self.groups_per_user <= self.num_groups:
            raise DomainError("groups_per_user must lie in [1, num_groups]")
        if not 0.0 <= self.stray_rate <= 1.0:
            raise DomainError("stray_rate must lie in [0, 1]")
        if not 0.0 <= self.warmup_fraction < 1.0:
            raise DomainError("warmup_fraction must lie in [0, 1)")
        if self.window_size is not None and self.window_size < 1:
            raise DomainError("window_size must be >= 1")
        if self.prepared_cost > self.fresh_cost:
            raise DomainError("prepared_cost must not exceed fresh_cost")

    @property
    def effective_window(self) -> int:
        if self.window_size is not None:
            return self.window_size
        return max(1, math.ceil(self.num_queries / 20))


@dataclass
class Metrics:
    proficiency: list[float] = field(default_factory=list)
    hit_rate: list[float] = field(default_factory=list)
    cost_adaptive: list[float] = field(default_factory=list)
    cost_baseline: list[float] = field(default_factory=list)
    plan_hit_rate: float = 0.0
    total_cost_adaptive: float = 0.0
    total_cost_baseline: float = 0.0
    categories_created: int = 0
    adaptation_latency: int | None = None
    window_size: int = 1

    @property
    def num_windows(self) -> int:
        return len(self.proficiency)


class TemplateCatalog:
    """Query templates grouped by workload class.

    Group ``g`` owns two relations and issues one command kind; its templates
    combine those relations with predicate columns and, sometimes, a relation
    borrowed from another group. Template ``t`` belongs to group
    ``t % num_groups`` and is the ``t // num_groups``-th variant of it.
    """

    columns_per_relation = 4
    borrow_rate = 0.3

    def __init__(self, num_groups: int, num_templates: int, seed: int = 0):
        self.num_groups = num_groups
        rng = np.random.default_rng([seed, 1])
        num_relations = 2 * num_groups
        self.templates: list[QueryTemplate] = []
        for t in range(num_templates):
            g = t % num_groups
            own = [f"t{2 * g}", f"t{2 * g + 1}"]
            relations = list(own)
            if rng.random() < self.borrow_rate:
                relations.append(f"t{int(rng.integers(num_relations))}")
            # every template of a group filters on the group's key column
            cols = [f"{own[0]}.c0"]
            if rng.random() < 0.5:
                r = own[int(rng.integers(2))]
                cols.append(f"{r}.c{int(rng.integers(1, self.columns_per_relation))}")
            command = COMMAND_GROUPS[g % len(COMMAND_GROUPS)]
            self.templates.append(QueryTemplate(command, tuple(relations), tuple(cols)))
        self.vocabulary = FeatureVocabulary()
        self.raw = [self.vocabulary.featurize(t) for t in self.templates]

    def __len__(self):
        return len(self.templates)

    def group_of(self, template_id: int) -> int:
        return template_id % self.num_groups

    def templates_of(self, group: int) -> list[int]:
        return list(range(group, len(self.templates), self.num_groups))

    def counterpart(self, template_id: int, group: int) -> int:
        """Template of ``group`` at the same variant position as ``template_id``."""
        variants = self.templates_of(group)
        return variants[(template_id // self.num_groups) % len(variants)]


def catalog_for(cfg: SimConfig) -> TemplateCatalog:
    return TemplateCatalog(cfg.num_groups, cfg.num_templates, cfg.seed)


def default_permutation(num_groups: int) -> dict[int, int]:
    """Cyclic shift; moves every group when there is more than one."""
    return {g: (g + 1) % num_groups for g in range(num_groups)}


def check_permutation(permutation: Mapping[int, int]) -> dict[int, int]:
    """Validate a group remapping; groups it does not mention stay put."""
    perm = {int(k): int(v) for k, v in permutation.items()}
    if sorted(perm) != sorted(perm.values()):
        raise PermutationError(f"mapping is not a bijection: {perm}")
    return perm


def generate(cfg: SimConfig, catalog: TemplateCatalog | None = None) -> list[WorkloadEvent]:
    """Seeded query stream; each user draws groups from a personal preference."""
    catalog = catalog or catalog_for(cfg)
    rng = np.random.default_rng([cfg.seed, 2])
    k = cfg.groups_per_user
    # geometric preference: the first group dominates
    shares = np.array([0.5 ** i for i in range(k)])
    shares /= shares.sum()
    prefs = [rng.permutation(cfg.num_groups)[:k] for _ in range(cfg.num_users)]

    events = []
    users = rng.integers(0, cfg.num_users, size=cfg.num_queries)
    for index, user in enumerate(users):
        user = int(user)
        if rng.random() < cfg.stray_rate:
            group = int(rng.integers(cfg.num_groups))
        else:
            group = int(prefs[user][rng.choice(k, p=shares)])
        variants = catalog.templates_of(group)
        template = variants[int(rng.integers(len(variants)))]
        events.append(WorkloadEvent(index, user, template, catalog.raw[template], group))

    if cfg.drift_at is not None:
        perm = cfg.drift_permutation or default_permutation(cfg.num_groups)
        events = inject_drift(events, cfg.drift_at, perm, catalog)
    return events


def inject_drift(events: Sequence[WorkloadEvent], at: int, permutation: Mapping[int, int],
                 catalog: TemplateCatalog) -> list[WorkloadEvent]:
    """Remap groups (and their query templates) of every event at or after ``at``."""
    if not 0 <= at <= len(events):
        raise DomainError(f"drift point {at} outside [0, {len(events)}]")
    perm = check_permutation(permutation)
    out = list(events[:at])
    for ev in events[at:]:
        group = perm.get(ev.ground_truth_category, ev.ground_truth_category)
        if group == ev.ground_truth_category:
            out.append(ev)
            continue
        template = catalog.counterpart(ev.template_id, group)
        out.append(replace(ev, template_id=template, raw=catalog.raw[template],
                           ground_truth_category=group))
    return out


def proficiency(window_outcomes: Sequence[bool]) -> float:
    if len(window_outcomes) == 0:
        raise EmptyWindowError("proficiency of an empty window is undefined")
    return sum(bool(x) for x in window_outcomes) / len(window_outcomes)


class _Replay:
    """Mutable state of one adaptive replay."""

    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        self.stats = CorpusStats()
        self.profiles: dict[int, UserProfile] = {}
        self.registry = PlanRegistry(default_fresh_cost=cfg.fresh_cost)
        # majority ground-truth label per (user, category)
        self.labels: dict[tuple[int, int], Counter] = {}
        self.recent: dict[tuple[int, int], deque] = {}
        self.created = 0

    def label(self, user: int, category_id: int) -> int | None:
        votes = self.labels.get((user, category_id))
        if not votes:
            return None
        return min(votes.items(), key=lambda kv: (-kv[1], kv[0]))[0]

    def step(self, ev: WorkloadEvent) -> tuple[Recommendation, bool, float]:
        cfg = self.cfg
        self.stats = observe(self.stats, ev.raw.features)
        q = build_vector(ev.raw, self.stats)
        profile = self.profiles.get(ev.user_id) or UserProfile(ev.user_id)

        rec = advise(q, profile, self.registry, cfg.advise_threshold)
        correct = (not rec.fallback
                   and self.label(ev.user_id, rec.category_id) == ev.ground_truth_category)
        cost = cfg.prepared_cost if correct else cfg.fresh_cost
        record_outcome(self.registry, rec, cost)

        before = best_category(profile, q)
        updated = learn(profile, q, FeedbackType.POSITIVE, cfg.learn_cfg,
                        sample_provided=True, event_index=ev.index)
        if len(updated) > len(profile):
            target = updated.categories[-1]
            plan = self.registry.register(ev.user_id, target.id, cfg.prepared_cost, cfg.fresh_cost)
            updated = updated.replace_category(replace(target, linked_plan=plan.plan_id))
            self.created += 1
            target_id = target.id
        elif before is not None and not q.is_zero:
            target_id = before[0].id
        else:
            target_id = None

        if target_id is not None:
            key = (ev.user_id, target_id)
            self.labels.setdefault(key, Counter())[ev.ground_truth_category] += 1
            if cfg.ga_every:
                buf = self.recent.setdefault(key, deque(maxlen=10))
                buf.append(q)
                category = updated.get(target_id)
                if category.usage_count % cfg.ga_every == 0:
                    best = evolve(category, EvaluationSet(tuple(buf)),
                                  replace(cfg.ga_cfg, seed=cfg.ga_cfg.seed + ev.index))
                    if not best.chromosome.is_zero:
                        updated = updated.replace_category(replace(category, desc_pos=best.chromosome))
        self.profiles[ev.user_id] = updated
        return rec, correct, cost


def run(events: Sequence[WorkloadEvent], cfg: SimConfig, adaptive: bool = True) -> Metrics:
    """Replay ``events`` and aggregate windowed proficiency, hit rate and cost.

    A query is proficient when it is served by the prepared plan of a category
    whose majority ground-truth group matches the query's group. The baseline
    optimizes every query afresh and is never proficient.
    """
    window = cfg.effective_window
    metrics = Metrics(window_size=window)
    if not events:
        return metrics

    replay = _Replay(cfg) if adaptive else None
    outcomes, hits, costs = [], [], []
    for ev in events:
        if replay is None:
            outcomes.append(False)
            hits.append(False)
            costs.append(cfg.fresh_cost)
            continue
        rec, correct, cost = replay.step(ev)
        outcomes.append(correct)
        hits.append(not rec.fallback)
        costs.append(cost)

    for start in range(0, len(events), window):
        stop = start + window
        metrics.proficiency.append(proficiency(outcomes[start:stop]))
        metrics.hit_rate.append(proficiency(hits[start:stop]))
        metrics.cost_adaptive.append(math.fsum(costs[start:stop]))
        metrics.cost_baseline.append(cfg.fresh_cost * len(costs[start:stop]))
    metrics.plan_hit_rate = sum(hits) / len(hits)
    metrics.total_cost_adaptive = math.fsum(costs)
    metrics.total_cost_baseline = cfg.fresh_cost * len(costs)
    metrics.categories_created = replay.created if replay else 0
    if cfg.drift_at is not None:
        metrics.adaptation_latency = adaptation_latency(metrics.proficiency, window, cfg.drift_at)
    return metrics


def adaptation_latency(curve: Sequence[float], window: int, drift_at: int,
                       recovery: float = 0.9) -> int | None:
    """Events from the drift to the end of the first window regaining
    ``recovery`` times the mean proficiency of the windows before the drift."""
    pre = [p for i, p in enumerate(curve) if (i + 1) * window <= drift_at]
    if not pre:
        return None
    target = recovery * (sum(pre) / len(pre))
    for i, p in enumerate(curve):
        if i * window >= drift_at and p >= target:
            return (i + 1) * window - drift_at
    return None


def trend_slope(curve: Sequence[float]) -> float:
    """Least-squares slope of a curve against its window index."""
    if len(curve) < 2:
        return 0.0
    return float(np.polyfit(np.arange(len(curve)), np.asarray(curve), 1)[0])
