"""Adaptive query processing with per-user query profiles.

Queries are vectorized over fingerprint features, grouped into per-user
categories learned with Rocchio feedback, and matched to prepared execution
plans. A genetic search can refine category descriptors, and a synthetic
workload simulator compares the adaptive system to always re-optimizing.
"""

from .adviser import (PlanCandidate, PlanRegistry, Recommendation, ScoredCategory, advise,
                      rank, record_outcome, score)
from .estimators import CategoryOptimizer, ProfileAdviser, QueryVectorizer
from .ga import EvaluationSet, GaConfig, Individual, crossover, evolve, fitness, mutate, phi
from .profile import (Category, FeedbackBatch, FeedbackType, LearnConfig, UserProfile,
                      best_category, category_weight, learn, relevance, rocchio)
from .simulation import (Metrics, SimConfig, WorkloadEvent, generate, inject_drift,
                         proficiency, run)
from .store import ProfileStore, RunManifest, export_metrics, load_store, save_store
from .vector import (CorpusStats, FeatureVocabulary, QueryTemplate, QueryVector, RawCounts,
                     build_vector, cosine, idf_weight, observe)

__version__ = "0.1.0"
