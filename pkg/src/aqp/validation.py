"""Input checking and coercion shared by the estimator wrappers."""

from __future__ import annotations

import math
import numbers
from collections.abc import Iterable, Mapping

import numpy as np

from .exceptions import DomainError
from .vector import QueryTemplate, QueryVector, RawCounts


def check_vector(v) -> QueryVector:
    """Coerce a mapping, dense 1-d array or QueryVector into a QueryVector."""
    if isinstance(v, QueryVector):
        return v
    if isinstance(v, Mapping):
        return QueryVector(v)
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1:
        raise DomainError(f"expected a 1-d vector, got shape {arr.shape}")
    return QueryVector.from_dense(arr)


def check_vectors(X) -> list[QueryVector]:
    if isinstance(X, np.ndarray) and X.ndim == 2:
        return [QueryVector.from_dense(row) for row in X]
    if isinstance(X, (QueryVector, Mapping)):
        raise DomainError("expected a collection of vectors, got a single vector")
    return [check_vector(v) for v in X]


def check_raw(x) -> RawCounts:
    if isinstance(x, RawCounts):
        return x
    if isinstance(x, Mapping):
        return RawCounts(x)
    raise DomainError(f"cannot interpret {type(x).__name__} as feature counts")


def check_templates(X: Iterable) -> list[QueryTemplate]:
    out = []
    for x in X:
        if isinstance(x, QueryTemplate):
            out.append(x)
        elif isinstance(x, Mapping):
            out.append(QueryTemplate(x["command"], tuple(x.get("relations", ())),
                                     tuple(x.get("predicates", ()))))
        else:
            raise DomainError(f"cannot interpret {type(x).__name__} as a query template")
    return out


def check_unit_interval(value, name: str, *, open_left: bool = False) -> float:
    if not isinstance(value, numbers.Real) or not math.isfinite(value):
        raise DomainError(f"{name} must be a finite real, got {value!r}")
    low_ok = value > 0 if open_left else value >= 0
    if not (low_ok and value <= 1):
        bracket = "(" if open_left else "["
        raise DomainError(f"{name} must lie in {bracket}0, 1], got {value}")
    return float(value)


def check_nonnegative(value, name: str) -> float:
    if not isinstance(value, numbers.Real) or not math.isfinite(value) or value < 0:
        raise DomainError(f"{name} must be a finite nonnegative real, got {value!r}")
    return float(value)


def check_positive_int(value, name: str, minimum: int = 1) -> int:
    if not isinstance(value, numbers.Integral) or value < minimum:
        raise DomainError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def check_users(users, n: int) -> list[int]:
    if users is None:
        return [0] * n
    if isinstance(users, numbers.Integral):
        return [int(users)] * n
    users = [int(u) for u in users]
    if len(users) != n:
        raise DomainError(f"got {len(users)} user ids for {n} queries")
    return users
