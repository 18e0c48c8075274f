"""Sparse query vectors, log-scaled frequency weighting and cosine similarity.

Queries are reduced to counts over categorical features (command group,
relations touched, predicate columns). Counts are turned into weights with a
max-normalized term frequency times an inverse query frequency, and compared
with the cosine of the angle between weight vectors.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field
from types import MappingProxyType

from .exceptions import DomainError, UnknownFeatureError

COMMAND_GROUPS = ("select", "update", "delete", "insert")


class QueryVector(Mapping):
    """Immutable sparse vector keyed by integer feature id.

    Zero components are never stored, so two vectors compare equal exactly
    when their nonzero components do.
    """

    __slots__ = ("_weights", "_norm")

    def __init__(self, weights: Mapping[int, float] | Iterable[tuple[int, float]] = ()):
        items = weights.items() if isinstance(weights, Mapping) else weights
        clean = {}
        for key, value in items:
            key = int(key)
            value = float(value)
            if key < 0:
                raise DomainError(f"feature id must be nonnegative, got {key}")
            if not math.isfinite(value):
                raise DomainError(f"weight for feature {key} is not finite: {value}")
            if value != 0.0:
                clean[key] = value
        self._weights = clean
        self._norm = None

    def __getitem__(self, key: int) -> float:
        return self._weights[key]

    def get(self, key, default=0.0):
        return self._weights.get(key, default)

    def __iter__(self) -> Iterator[int]:
        return iter(self._weights)

    def __len__(self) -> int:
        return len(self._weights)

    def __eq__(self, other):
        if isinstance(other, QueryVector):
            return self._weights == other._weights
        if isinstance(other, Mapping):
            return self._weights == {k: v for k, v in other.items() if v != 0}
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self._weights.items()))

    def __repr__(self):
        body = ", ".join(f"{k}: {v!r}" for k, v in sorted(self._weights.items()))
        return f"QueryVector({{{body}}})"

    @property
    def is_zero(self) -> bool:
        return not self._weights

    def norm(self) -> float:
        if self._norm is None:
            self._norm = math.sqrt(math.fsum(v * v for v in self._weights.values()))
        return self._norm

    def dot(self, other: QueryVector) -> float:
        a, b = self._weights, other._weights
        if len(a) > len(b):
            a, b = b, a
        return math.fsum(v * b[k] for k, v in a.items() if k in b)

    def scale(self, factor: float) -> QueryVector:
        return QueryVector({k: factor * v for k, v in self._weights.items()})

    def __add__(self, other: QueryVector) -> QueryVector:
        out = dict(self._weights)
        for k, v in other._weights.items():
            out[k] = out.get(k, 0.0) + v
        return QueryVector(out)

    def __sub__(self, other: QueryVector) -> QueryVector:
        return self + other.scale(-1.0)

    def __mul__(self, factor: float) -> QueryVector:
        return self.scale(factor)

    __rmul__ = __mul__

    def clamp_nonnegative(self) -> QueryVector:
        return QueryVector({k: v for k, v in self._weights.items() if v > 0.0})

    def sorted_items(self) -> list[tuple[int, float]]:
        return sorted(self._weights.items())

    def to_dense(self, size: int):
        import numpy as np

        out = np.zeros(size)
        for k, v in self._weights.items():
            out[k] = v
        return out

    @classmethod
    def from_dense(cls, values) -> QueryVector:
        return cls((i, v) for i, v in enumerate(values))


ZERO = QueryVector()


@dataclass(frozen=True)
class RawCounts:
    """Per-query feature frequencies before weighting."""

    counts: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for key, value in dict(self.counts).items():
            if int(value) != value or value < 0:
                raise DomainError(f"frequency for feature {key} must be a nonnegative integer")
            if value:
                clean[int(key)] = int(value)
        object.__setattr__(self, "counts", MappingProxyType(clean))

    @property
    def max_freq(self) -> int:
        return max(self.counts.values(), default=0)

    @property
    def features(self) -> frozenset[int]:
        return frozenset(self.counts)

    def __eq__(self, other):
        if not isinstance(other, RawCounts):
            return NotImplemented
        return dict(self.counts) == dict(other.counts)

    def __hash__(self):
        return hash(frozenset(self.counts.items()))

    def __reduce__(self):
        return (RawCounts, (dict(self.counts),))


@dataclass(frozen=True)
class CorpusStats:
    """Number of observed queries and, per feature, how many contained it."""

    total_queries: int = 0
    feature_query_count: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self):
        counts = {int(k): int(v) for k, v in dict(self.feature_query_count).items()}
        if self.total_queries < 0:
            raise DomainError("total_queries must be nonnegative")
        for key, n in counts.items():
            if not 0 <= n <= self.total_queries:
                raise DomainError(f"query count {n} for feature {key} outside [0, {self.total_queries}]")
        object.__setattr__(self, "feature_query_count", MappingProxyType(counts))

    def n(self, feature: int) -> int:
        return self.feature_query_count.get(feature, 0)

    def __eq__(self, other):
        if not isinstance(other, CorpusStats):
            return NotImplemented
        return (self.total_queries == other.total_queries
                and dict(self.feature_query_count) == dict(other.feature_query_count))

    def __hash__(self):
        return hash((self.total_queries, frozenset(self.feature_query_count.items())))

    def __reduce__(self):
        return (CorpusStats, (self.total_queries, dict(self.feature_query_count)))


def idf_weight(freq: int, max_freq: int, N: int, n_i: int) -> float:
    """Weight of one feature in one query: ``(freq / max_freq) * ln(N / n_i)``."""
    if max_freq < 1 or N < 1:
        raise DomainError(f"need max_freq >= 1 and N >= 1, got max_freq={max_freq}, N={N}")
    if not 1 <= n_i <= N:
        raise DomainError(f"need 1 <= n_i <= N, got n_i={n_i}, N={N}")
    if not 0 <= freq <= max_freq:
        raise DomainError(f"need 0 <= freq <= max_freq, got freq={freq}, max_freq={max_freq}")
    if freq == 0 or n_i == N:
        return 0.0
    return (freq / max_freq) * math.log(N / n_i)


def build_vector(raw: RawCounts, stats: CorpusStats) -> QueryVector:
    max_freq = raw.max_freq
    weights = {}
    for feature, freq in raw.counts.items():
        n_i = stats.n(feature)
        if n_i < 1:
            raise UnknownFeatureError(f"feature {feature} has no corpus statistics")
        weights[feature] = idf_weight(freq, max_freq, stats.total_queries, n_i)
    return QueryVector(weights)


def cosine(a: QueryVector, b: QueryVector) -> float:
    """Cosine similarity; 0.0 when either side is the zero vector."""
    na, nb = a.norm(), b.norm()
    if na == 0.0 or nb == 0.0:
        return 0.0
    value = a.dot(b) / (na * nb)
    # rounding can push |value| a hair past 1
    return min(1.0, max(-1.0, value))


def observe(stats: CorpusStats, features: Iterable[int]) -> CorpusStats:
    counts = dict(stats.feature_query_count)
    for feature in set(features):
        counts[feature] = counts.get(feature, 0) + 1
    return CorpusStats(stats.total_queries + 1, counts)


@dataclass(frozen=True)
class QueryTemplate:
    """Fingerprint of a query: command group, relations and predicate columns.

    Relations and predicates may repeat (self-joins, a column tested twice);
    repeats become frequencies above one.
    """

    command: str
    relations: tuple[str, ...] = ()
    predicates: tuple[str, ...] = ()

    def __post_init__(self):
        command = self.command.lower()
        if command not in COMMAND_GROUPS:
            raise DomainError(f"unknown command group {self.command!r}; expected one of {COMMAND_GROUPS}")
        object.__setattr__(self, "command", command)
        object.__setattr__(self, "relations", tuple(sorted(self.relations)))
        object.__setattr__(self, "predicates", tuple(sorted(self.predicates)))

    def feature_names(self) -> list[str]:
        names = [f"cmd:{self.command}"]
        names += [f"rel:{r}" for r in self.relations]
        names += [f"col:{c}" for c in self.predicates]
        return names


class FeatureVocabulary:
    """Assigns dense integer ids to feature names in order of first sight."""

    def __init__(self, names: Iterable[str] = ()):
        self._ids: dict[str, int] = {}
        self._names: list[str] = []
        for name in names:
            self.add(name)

    def add(self, name: str) -> int:
        if name not in self._ids:
            self._ids[name] = len(self._names)
            self._names.append(name)
        return self._ids[name]

    def id_of(self, name: str) -> int:
        return self._ids[name]

    @property
    def names(self) -> list[str]:
        return list(self._names)

    def __len__(self):
        return len(self._names)

    def __contains__(self, name):
        return name in self._ids

    def __eq__(self, other):
        if not isinstance(other, FeatureVocabulary):
            return NotImplemented
        return self._names == other._names

    def featurize(self, template: QueryTemplate, grow: bool = True) -> RawCounts:
        counts: dict[int, int] = {}
        for name in template.feature_names():
            if grow:
                fid = self.add(name)
            elif name in self._ids:
                fid = self._ids[name]
            else:
                raise UnknownFeatureError(f"feature {name!r} is not in the vocabulary")
            counts[fid] = counts.get(fid, 0) + 1
        return RawCounts(counts)
