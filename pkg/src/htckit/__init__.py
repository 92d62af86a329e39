"""Hierarchical text classification toolkit.

Taxonomy-aware data preparation, flat and LCPN+VC classification over
TF-IDF / word-embedding representations, and flat, hierarchical, and
LCA-based evaluation measures.
"""

from .corpus import (
    CorpusSplit,
    LabeledDocument,
    LocalDataset,
    RawDocument,
    hierarchical_split,
    holdout_split,
    ingest_rcv1_xml,
    local_dataset_stats,
    normalize,
    reduce_to_single_label,
    vc_label_for,
)
from .features import (
    EmbeddingAverager,
    EmbeddingTable,
    TfidfEncoder,
    Vocabulary,
    average_doc_vector,
    build_vocabulary,
    load_embeddings,
    tfidf_vector,
)
from .learner import (
    JointEmbeddingClassifier,
    SoftmaxLinearClassifier,
    extract_embeddings,
)
from .metrics import (
    MetricsReport,
    PredictionPair,
    evaluate_pairs,
    flat_scores,
    hier_scores,
    lca_scores,
    pearson,
)
from .strategy import (
    FlatClassifier,
    PredictionPath,
    TopDownClassifier,
    build_base_estimator,
)
from .taxonomy import AncestorSet, Taxonomy, load_hierarchy_file, load_taxonomy, read_hierarchy_file

__version__ = "0.1.0"

__all__ = [
    "AncestorSet",
    "CorpusSplit",
    "EmbeddingAverager",
    "EmbeddingTable",
    "FlatClassifier",
    "JointEmbeddingClassifier",
    "LabeledDocument",
    "LocalDataset",
    "MetricsReport",
    "PredictionPair",
    "PredictionPath",
    "RawDocument",
    "SoftmaxLinearClassifier",
    "Taxonomy",
    "TfidfEncoder",
    "Vocabulary",
    "average_doc_vector",
    "build_base_estimator",
    "build_vocabulary",
    "evaluate_pairs",
    "extract_embeddings",
    "flat_scores",
    "hier_scores",
    "hierarchical_split",
    "holdout_split",
    "ingest_rcv1_xml",
    "lca_scores",
    "load_embeddings",
    "load_hierarchy_file",
    "load_taxonomy",
    "local_dataset_stats",
    "normalize",
    "pearson",
    "read_hierarchy_file",
    "reduce_to_single_label",
    "tfidf_vector",
    "vc_label_for",
]
