"""scikit-learn style wrappers around the functional core.

``QueryVectorizer`` turns query fingerprints into weighted vectors,
``ProfileAdviser`` learns per-user profiles online and predicts prepared
plans, and ``CategoryOptimizer`` evolves a category's positive descriptor.
All three follow the estimator conventions (constructor stores parameters
verbatim, learned state ends in an underscore) so they work with
``get_params``/``set_params``/``clone``.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .adviser import (DEFAULT_ADVISE_THRESHOLD, DEFAULT_FRESH_COST, DEFAULT_PREPARED_COST,
                      PlanRegistry, Recommendation, ScoredCategory, advise, rank)
from .exceptions import DomainError
from .ga import EvaluationSet, GaConfig, fitness, run_ga
from .profile import Category, FeedbackType, LearnConfig, UserProfile, learn
from .validation import (check_nonnegative, check_raw, check_templates, check_unit_interval,
                         check_users, check_vector, check_vectors)
from .vector import CorpusStats, FeatureVocabulary, QueryVector, build_vector, observe


class QueryVectorizer(TransformerMixin, BaseEstimator):
    """Weight query fingerprints against running corpus statistics.

    Parameters
    ----------
    input : {"template", "counts"}
        ``"template"`` accepts :class:`QueryTemplate` objects or dicts with
        ``command``/``relations``/``predicates``; ``"counts"`` accepts
        ``RawCounts`` or ``{feature_id: frequency}`` mappings.
    """

    def __init__(self, input="template"):
        self.input = input

    def _raw(self, X, grow):
        if self.input == "template":
            return [self.vocabulary_.featurize(t, grow=grow) for t in check_templates(X)]
        if self.input == "counts":
            return [check_raw(x) for x in X]
        raise DomainError(f"input must be 'template' or 'counts', got {self.input!r}")

    def fit(self, X, y=None):
        self.vocabulary_ = FeatureVocabulary()
        self.corpus_stats_ = CorpusStats()
        return self.partial_fit(X)

    def partial_fit(self, X, y=None):
        if not hasattr(self, "corpus_stats_"):
            self.vocabulary_ = FeatureVocabulary()
            self.corpus_stats_ = CorpusStats()
        for raw in self._raw(X, grow=True):
            self.corpus_stats_ = observe(self.corpus_stats_, raw.features)
        return self

    def transform(self, X) -> list[QueryVector]:
        check_is_fitted(self, "corpus_stats_")
        return [build_vector(raw, self.corpus_stats_) for raw in self._raw(X, grow=False)]

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "vocabulary_")
        return np.asarray(self.vocabulary_.names, dtype=object)


class ProfileAdviser(BaseEstimator):
    """Online profile learner that recommends prepared plans per user.

    ``partial_fit`` folds queries into the issuing users' profiles and
    registers a plan for every category it creates. ``predict`` returns the
    advised plan id per query, ``-1`` meaning fresh optimization.
    """

    def __init__(self, theta=0.5, gamma=1.0, beta=0.75, lambda_=0.15, alpha=1.0,
                 clamp_negative=True, advise_threshold=DEFAULT_ADVISE_THRESHOLD,
                 prepared_cost=DEFAULT_PREPARED_COST, fresh_cost=DEFAULT_FRESH_COST):
        self.theta = theta
        self.gamma = gamma
        self.beta = beta
        self.lambda_ = lambda_
        self.alpha = alpha
        self.clamp_negative = clamp_negative
        self.advise_threshold = advise_threshold
        self.prepared_cost = prepared_cost
        self.fresh_cost = fresh_cost

    @property
    def learn_config(self) -> LearnConfig:
        return LearnConfig(theta=self.theta, gamma=self.gamma, beta=self.beta,
                           lambda_=self.lambda_, alpha=self.alpha,
                           clamp_negative=self.clamp_negative)

    def _validate_params(self):
        check_unit_interval(self.advise_threshold, "advise_threshold")
        check_nonnegative(self.prepared_cost, "prepared_cost")
        check_nonnegative(self.fresh_cost, "fresh_cost")
        if self.prepared_cost > self.fresh_cost:
            raise DomainError("prepared_cost must not exceed fresh_cost")
        return self.learn_config

    def _reset(self):
        self.profiles_: dict[int, UserProfile] = {}
        self.registry_ = PlanRegistry(default_fresh_cost=self.fresh_cost)
        self.n_events_ = 0

    def fit(self, X, users=None, feedback=None):
        self._reset()
        return self.partial_fit(X, users, feedback)

    def partial_fit(self, X, users=None, feedback=None):
        cfg = self._validate_params()
        if not hasattr(self, "profiles_"):
            self._reset()
        queries = check_vectors(X)
        users = check_users(users, len(queries))
        if feedback is None:
            feedback = [FeedbackType.POSITIVE] * len(queries)
        elif isinstance(feedback, (str, FeedbackType)):
            feedback = [FeedbackType(feedback)] * len(queries)
        for q, user, fb in zip(queries, users, feedback):
            before = self.profile(user)
            after = learn(before, q, FeedbackType(fb), cfg, event_index=self.n_events_)
            if len(after) > len(before):
                new = after.categories[-1]
                plan = self.registry_.register(user, new.id, self.prepared_cost, self.fresh_cost)
                after = after.replace_category(replace(new, linked_plan=plan.plan_id))
            self.profiles_[user] = after
            self.n_events_ += 1
        return self

    def profile(self, user: int) -> UserProfile:
        check_is_fitted(self, "profiles_")
        return self.profiles_.get(user) or UserProfile(user)

    def recommend(self, X, users=None) -> list[Recommendation]:
        check_is_fitted(self, "profiles_")
        threshold = check_unit_interval(self.advise_threshold, "advise_threshold")
        queries = check_vectors(X)
        users = check_users(users, len(queries))
        return [advise(q, self.profile(u), self.registry_, threshold)
                for q, u in zip(queries, users)]

    def predict(self, X, users=None) -> np.ndarray:
        recs = self.recommend(X, users)
        return np.array([-1 if r.fallback else r.plan_id for r in recs], dtype=int)

    def rank(self, q, user: int = 0) -> list[ScoredCategory]:
        return rank(self.profile(user), check_vector(q))


class CategoryOptimizer(BaseEstimator):
    """Genetic search for a category's positive descriptor.

    ``fit(X, category)`` uses the queries in ``X`` as the evaluation sample.
    """

    def __init__(self, population_size=20, generations=50, crossover_rate=0.9,
                 mutation_sigma=0.1, mutation_rate=0.1, elitism=1, tournament_size=2, seed=0):
        self.population_size = population_size
        self.generations = generations
        self.crossover_rate = crossover_rate
        self.mutation_sigma = mutation_sigma
        self.mutation_rate = mutation_rate
        self.elitism = elitism
        self.tournament_size = tournament_size
        self.seed = seed

    @property
    def ga_config(self) -> GaConfig:
        return GaConfig(**self.get_params())

    def fit(self, X, category: Category):
        if not isinstance(category, Category):
            raise DomainError("fit needs the Category to optimize")
        self.evaluation_set_ = EvaluationSet(tuple(check_vectors(X)))
        self.category_ = category
        self.best_, self.history_ = run_ga(category, self.evaluation_set_, self.ga_config)
        return self

    @property
    def best_chromosome_(self) -> QueryVector:
        check_is_fitted(self, "best_")
        return self.best_.chromosome

    def score(self, X, category: Category | None = None) -> float:
        """Fitness of the evolved chromosome on a (possibly new) sample."""
        check_is_fitted(self, "best_")
        category = category or self.category_
        return fitness(self.best_.chromosome, category, EvaluationSet(tuple(check_vectors(X))))

    def optimized_category(self) -> Category:
        check_is_fitted(self, "best_")
        if self.best_.chromosome.is_zero:
            return self.category_
        return replace(self.category_, desc_pos=self.best_.chromosome)
