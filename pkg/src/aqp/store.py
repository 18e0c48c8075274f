"""Profile-store persistence and metrics export.

The store is one canonical JSON document (sorted keys, vectors as sorted
``[feature_id, weight]`` pairs, reals at 17 significant digits) so identical
stores serialize to identical bytes.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .adviser import PlanCandidate, PlanRegistry
from .exceptions import DomainError, MissingStoreError, SchemaError, UnknownVersionError
from .profile import Category, UserProfile
from .simulation import Metrics
from .vector import CorpusStats, FeatureVocabulary, QueryVector

STORE_VERSION = "aqp-store/1"
METRICS_HEADER = ("window", "proficiency", "hit_rate", "cost_adaptive", "cost_baseline")


@dataclass
class ProfileStore:
    corpus: CorpusStats = field(default_factory=CorpusStats)
    profiles: list[UserProfile] = field(default_factory=list)
    registry: PlanRegistry = field(default_factory=PlanRegistry)
    vocabulary: FeatureVocabulary = field(default_factory=FeatureVocabulary)
    version: str = STORE_VERSION

    def profile(self, user_id: int) -> UserProfile:
        for p in self.profiles:
            if p.user_id == user_id:
                return p
        return UserProfile(user_id)

    def put_profile(self, profile: UserProfile) -> None:
        for i, p in enumerate(self.profiles):
            if p.user_id == profile.user_id:
                self.profiles[i] = profile
                return
        self.profiles.append(profile)
        self.profiles.sort(key=lambda p: p.user_id)

    def check(self) -> None:
        for p in self.profiles:
            for c in p.categories:
                if c.linked_plan is not None and c.linked_plan not in self.registry.plans:
                    raise SchemaError(
                        f"category {c.id} of user {p.user_id} links missing plan {c.linked_plan}")


@dataclass
class RunManifest:
    config: dict
    seed: int
    start_index: int
    end_index: int
    outputs: dict[str, str] = field(default_factory=dict)


def _real(x: float) -> str:
    if not math.isfinite(x):
        raise DomainError(f"cannot serialize non-finite value {x}")
    return format(x, ".17g")


def canonical_json(obj) -> str:
    """Deterministic JSON: sorted keys, no whitespace, reals at 17 digits."""
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _real(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=True)
    if isinstance(obj, dict):
        items = sorted((str(k), v) for k, v in obj.items())
        return "{" + ",".join(f"{json.dumps(k)}:{canonical_json(v)}" for k, v in items) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(canonical_json(v) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _vector_doc(v: QueryVector) -> list:
    return [[k, float(w)] for k, w in v.sorted_items()]


def store_to_doc(store: ProfileStore) -> dict:
    reg = store.registry
    return {
        "version": store.version,
        "vocabulary": store.vocabulary.names,
        "corpus": {
            "total_queries": store.corpus.total_queries,
            "feature_query_count": sorted([k, n] for k, n in store.corpus.feature_query_count.items()),
        },
        "profiles": [
            {
                "user_id": p.user_id,
                "categories": [
                    {
                        "id": c.id,
                        "desc_pos": _vector_doc(c.desc_pos),
                        "desc_neg": _vector_doc(c.desc_neg),
                        "usage_count": c.usage_count,
                        "linked_plan": c.linked_plan,
                        "created_at": c.created_at,
                    }
                    for c in p.categories
                ],
            }
            for p in sorted(store.profiles, key=lambda p: p.user_id)
        ],
        "registry": {
            "plans": [
                {
                    "plan_id": plan.plan_id,
                    "user_id": plan.user_id,
                    "category_id": plan.category_id,
                    "prepared_cost": float(plan.prepared_cost),
                    "fresh_cost": float(plan.fresh_cost),
                    "hit_count": plan.hit_count,
                }
                for _, plan in sorted(reg.plans.items())
            ],
            "default_fresh_cost": float(reg.default_fresh_cost),
            "prepared_cost_total": float(reg.prepared_cost_total),
            "fallback_cost_total": float(reg.fallback_cost_total),
            "fallback_count": reg.fallback_count,
        },
    }


def _vector(doc) -> QueryVector:
    return QueryVector((int(k), float(w)) for k, w in doc)


def store_from_doc(doc: dict) -> ProfileStore:
    if not isinstance(doc, dict) or "version" not in doc:
        raise SchemaError("store document lacks a version field")
    if doc["version"] != STORE_VERSION:
        raise UnknownVersionError(f"unsupported store version {doc['version']!r}")
    try:
        corpus = CorpusStats(
            int(doc["corpus"]["total_queries"]),
            {int(k): int(n) for k, n in doc["corpus"]["feature_query_count"]},
        )
        profiles = [
            UserProfile(
                int(p["user_id"]),
                tuple(
                    Category(
                        id=int(c["id"]),
                        desc_pos=_vector(c["desc_pos"]),
                        desc_neg=_vector(c["desc_neg"]),
                        usage_count=int(c["usage_count"]),
                        linked_plan=None if c["linked_plan"] is None else int(c["linked_plan"]),
                        created_at=int(c["created_at"]),
                    )
                    for c in p["categories"]
                ),
            )
            for p in doc["profiles"]
        ]
        r = doc["registry"]
        registry = PlanRegistry(
            default_fresh_cost=float(r["default_fresh_cost"]),
            prepared_cost_total=float(r["prepared_cost_total"]),
            fallback_cost_total=float(r["fallback_cost_total"]),
            fallback_count=int(r["fallback_count"]),
        )
        for d in r["plans"]:
            plan = PlanCandidate(
                plan_id=int(d["plan_id"]),
                category_id=int(d["category_id"]),
                user_id=int(d["user_id"]),
                prepared_cost=float(d["prepared_cost"]),
                fresh_cost=float(d["fresh_cost"]),
                hit_count=int(d["hit_count"]),
            )
            registry.plans[plan.plan_id] = plan
            registry.by_category[(plan.user_id, plan.category_id)] = plan.plan_id
        vocabulary = FeatureVocabulary(str(n) for n in doc["vocabulary"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed store document: {exc}") from exc
    store = ProfileStore(corpus, profiles, registry, vocabulary)
    store.check()
    return store


def dumps_store(store: ProfileStore) -> str:
    return canonical_json(store_to_doc(store)) + "\n"


def save_store(store: ProfileStore, path) -> None:
    store.check()
    Path(path).write_text(dumps_store(store), encoding="utf-8")


def load_store(path) -> ProfileStore:
    path = Path(path)
    if not path.exists():
        raise MissingStoreError(f"no store at {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"store at {path} is not valid JSON: {exc}") from exc
    return store_from_doc(doc)


def metrics_csv(m: Metrics) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(METRICS_HEADER)
    rows = zip(m.proficiency, m.hit_rate, m.cost_adaptive, m.cost_baseline)
    for i, (prof, hit, ca, cb) in enumerate(rows):
        writer.writerow([i, repr(float(prof)), repr(float(hit)), repr(float(ca)), repr(float(cb))])
    return buf.getvalue()


def export_metrics(m: Metrics, path) -> None:
    Path(path).write_text(metrics_csv(m), encoding="utf-8")


def save_manifest(manifest: RunManifest, path) -> None:
    doc = {
        "config": manifest.config,
        "seed": manifest.seed,
        "start_index": manifest.start_index,
        "end_index": manifest.end_index,
        "outputs": manifest.outputs,
    }
    Path(path).write_text(canonical_json(doc) + "\n", encoding="utf-8")
