"""Gradual machine learning over relational factor graphs.

Labeled (evidence) and unlabeled instances are connected by similar or
opposite pairwise relations per category; relational factor weights are
learned from evidence, and unlabeled variables are committed one at a
time in order of evidential certainty.
"""

__version__ = "0.1.0"

from gradualml.config import InferenceConfig
from gradualml.graph import (
    EVIDENCE,
    INFERRED,
    UNLABELED,
    CommitRecord,
    FactorGraph,
    InstanceRecord,
    Polarity,
    Relation,
    Variable,
    build_graph,
    load_instances,
)
from gradualml.inference import (
    conditional_marginal,
    entropy,
    evidential_support,
    exact_marginal,
    factor_value,
    gradual_inference,
    one_shot_labels,
)
from gradualml.learning import PseudoLikelihood, WeightTable, learn_weights
from gradualml.metrics import MetricsReport, evaluate
from gradualml.relations import (
    EmbeddingRecord,
    KnnConfig,
    RelationRecord,
    knn_extract,
    load_relations,
    sample_relation_budget,
)
from gradualml.synth import SynthSpec, generate, oracle_accuracy

__all__ = [
    "__version__",
    "InferenceConfig",
    "EVIDENCE",
    "INFERRED",
    "UNLABELED",
    "CommitRecord",
    "FactorGraph",
    "InstanceRecord",
    "Polarity",
    "Relation",
    "Variable",
    "build_graph",
    "load_instances",
    "conditional_marginal",
    "entropy",
    "evidential_support",
    "exact_marginal",
    "factor_value",
    "gradual_inference",
    "one_shot_labels",
    "PseudoLikelihood",
    "WeightTable",
    "learn_weights",
    "MetricsReport",
    "evaluate",
    "EmbeddingRecord",
    "KnnConfig",
    "RelationRecord",
    "knn_extract",
    "load_relations",
    "sample_relation_budget",
    "SynthSpec",
    "generate",
    "oracle_accuracy",
]
