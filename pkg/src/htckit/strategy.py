"""Flat and LCPN+VC classification strategies over a base estimator.

Both strategies are sklearn-style meta-estimators whose inputs are token
lists. The base estimator is anything with ``fit``/``predict_proba`` and
a ``classes_`` attribute and is cloned per use: once for the flat model,
once per internal taxonomy node for the local-classifier-per-parent-node
(LCPN) model. Per-node clones get a derived seed (``seed`` plus a stable
hash of the node label) wherever they expose a ``seed`` parameter, so
node models stay individually reproducible and could be trained
concurrently without changing results.

Top-down prediction descends from the root, at each node taking the
argmax of the local distribution over the node's children plus its
virtual category (children in lexicographic order, VC last; ties break
to the earliest class in that order). Predicting the virtual category
stops the descent at the current node; reaching a node without a local
model means a leaf was reached.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, clone
from sklearn.pipeline import Pipeline
from sklearn.utils.validation import check_is_fitted

from .corpus import LabeledDocument, LocalDataset, hierarchical_split, vc_label_for
from .errors import EmptyInput, MissingInternalNode, UnknownLabel
from .features import EmbeddingAverager, EmbeddingTable, TfidfEncoder, TokenDoc
from .learner import JointEmbeddingClassifier, SoftmaxLinearClassifier, fnv1a64
from .taxonomy import Taxonomy

LEAF_REACHED = "leaf_reached"
VIRTUAL_CATEGORY = "virtual_category"


@dataclass(frozen=True)
class PredictionPath:
    """Nodes visited during one top-down descent, shallowest first.

    The first entry is the child chosen at the root; the last entry is
    the returned label.
    """

    nodes: tuple[str, ...]
    stop_reason: str

    @property
    def label(self) -> str:
        return self.nodes[-1]


def derive_node_seed(seed: int, node: str) -> int:
    """Deterministic per-node seed: ``(seed + fnv1a64(node)) mod 2**32``."""
    return (seed + fnv1a64(node)) % (2**32)


def _set_seed_params(estimator, seed: int) -> None:
    seed_keys = [
        key
        for key in estimator.get_params(deep=True)
        if key == "seed" or key.endswith("__seed")
    ]
    if seed_keys:
        estimator.set_params(**{key: seed for key in seed_keys})


class _ConstantLocal:
    """Fallback local model for a node that received no training examples.

    Always predicts the virtual category, i.e. stops the descent at the
    node itself.
    """

    def __init__(self, label: str):
        self.classes_ = np.array([label], dtype=object)

    def fit(self, X, y):  # pragma: no cover - trivially fitted
        return self

    def predict_proba(self, X):
        return np.ones((len(X), 1), dtype=np.float64)


class FlatClassifier(BaseEstimator, ClassifierMixin):
    """Single multi-class model over every observed label, hierarchy ignored."""

    def __init__(self, base_estimator=None, taxonomy: Taxonomy | None = None):
        self.base_estimator = base_estimator
        self.taxonomy = taxonomy

    def fit(self, docs: Sequence[TokenDoc], y):
        if len(docs) == 0:
            raise EmptyInput("no training documents")
        if self.taxonomy is not None:
            for label in set(y):
                if label not in self.taxonomy:
                    raise UnknownLabel(f"label {label!r} not in the taxonomy")
                if label == self.taxonomy.root:
                    raise UnknownLabel("the root is not a valid training label")
        self.model_ = clone(self.base_estimator)
        self.model_.fit(list(docs), y)
        self.classes_ = self.model_.classes_
        return self

    def predict_proba(self, docs: Sequence[TokenDoc]) -> np.ndarray:
        check_is_fitted(self, "model_")
        return self.model_.predict_proba(list(docs))

    def predict(self, docs: Sequence[TokenDoc]) -> np.ndarray:
        check_is_fitted(self, "model_")
        probs = self.predict_proba(docs)
        return self.classes_[np.argmax(probs, axis=1)]


class TopDownClassifier(BaseEstimator, ClassifierMixin):
    """LCPN + virtual category: one local model per internal taxonomy node.

    ``fit`` performs the hierarchical split internally; use
    :meth:`fit_local_datasets` to train from pre-built local datasets, or
    :meth:`from_node_models` to assemble a classifier around existing
    (possibly stub) local models.
    """

    def __init__(
        self,
        base_estimator=None,
        taxonomy: Taxonomy | None = None,
        seed: int = 0,
    ):
        self.base_estimator = base_estimator
        self.taxonomy = taxonomy
        self.seed = seed

    # -- training ------------------------------------------------------------

    def fit(self, docs: Sequence[TokenDoc], y):
        if len(docs) == 0:
            raise EmptyInput("no training documents")
        labeled = [
            LabeledDocument(doc_id=str(i), tokens=tuple(tokens), label=label)
            for i, (tokens, label) in enumerate(zip(docs, y))
        ]
        return self.fit_local_datasets(hierarchical_split(labeled, self.taxonomy))

    def fit_local_datasets(self, local_datasets: Sequence[LocalDataset]):
        """Train one local model per dataset (one dataset per internal node)."""
        tax = self.taxonomy
        by_parent = {ds.parent: ds for ds in local_datasets}
        missing = [n for n in tax.internal_nodes() if n not in by_parent]
        if missing:
            raise MissingInternalNode(f"no local dataset for internal nodes {missing}")

        self.local_models_ = {}
        self.local_class_order_ = {}
        for node in tax.internal_nodes():
            ds = by_parent[node]
            order = list(tax.children(node))
            if ds.vc_label is not None:
                order.append(ds.vc_label)
            self.local_class_order_[node] = order

            if not ds.examples:
                if node == tax.root:
                    raise EmptyInput("the root local dataset is empty")
                self.local_models_[node] = _ConstantLocal(ds.vc_label)
                continue

            estimator = clone(self.base_estimator)
            _set_seed_params(estimator, derive_node_seed(self.seed, node))
            X = [doc.tokens for doc, _ in ds.examples]
            local_y = [label for _, label in ds.examples]
            estimator.fit(X, local_y)
            self.local_models_[node] = estimator
        return self

    @classmethod
    def from_node_models(cls, taxonomy: Taxonomy, node_models: dict) -> "TopDownClassifier":
        """Assemble a top-down classifier around pre-fitted local models.

        ``node_models`` maps every internal node to an object exposing
        ``classes_`` and ``predict_proba``. Useful for composing stubs or
        separately trained locals.
        """
        missing = [n for n in taxonomy.internal_nodes() if n not in node_models]
        if missing:
            raise MissingInternalNode(f"no local model for internal nodes {missing}")
        instance = cls(base_estimator=None, taxonomy=taxonomy)
        instance.local_models_ = dict(node_models)
        instance.local_class_order_ = {}
        for node in taxonomy.internal_nodes():
            order = list(taxonomy.children(node))
            if node != taxonomy.root:
                order.append(vc_label_for(node))
            instance.local_class_order_[node] = order
        return instance

    # -- prediction ------------------------------------------------------------

    def _predict_one(self, tokens: TokenDoc) -> tuple[str, PredictionPath]:
        tax = self.taxonomy
        node = tax.root
        visited: list[str] = []
        while True:
            model = self.local_models_.get(node)
            if model is None:
                return node, PredictionPath(tuple(visited), LEAF_REACHED)
            row = model.predict_proba([tokens])[0]
            probs = dict(zip(model.classes_, row))
            best = None
            best_p = -1.0
            for candidate in self.local_class_order_[node]:
                p = probs.get(candidate, 0.0)
                if p > best_p:
                    best, best_p = candidate, p
            if best == vc_label_for(node):
                return node, PredictionPath(tuple(visited), VIRTUAL_CATEGORY)
            visited.append(best)
            node = best

    def predict_with_paths(
        self, docs: Sequence[TokenDoc]
    ) -> list[tuple[str, PredictionPath]]:
        check_is_fitted(self, "local_models_")
        return [self._predict_one(tokens) for tokens in docs]

    def predict(self, docs: Sequence[TokenDoc]) -> np.ndarray:
        check_is_fitted(self, "local_models_")
        return np.array([self._predict_one(tokens)[0] for tokens in docs], dtype=object)


# -- base-estimator construction -----------------------------------------------

LEARNER_NAMES = ("softmax-linear", "joint-embedding")
REPRESENTATION_NAMES = ("tfidf", "embedding-average", "learned")


def build_base_estimator(
    learner: str,
    representation: str,
    table: EmbeddingTable | None = None,
    learning_rate: float = 0.1,
    epochs: int = 5,
    dim: int = 30,
    bigram_buckets: int = 2_000_000,
    min_token_count: int = 1,
    seed: int = 0,
    stopwords=None,
    stemming: bool = False,
    min_df: int = 1,
):
    """Compose a token-list base estimator for a learner/representation pair.

    ``joint-embedding`` consumes tokens directly (representation
    ``learned``); ``softmax-linear`` is wrapped behind a TF-IDF or
    embedding-averaging step in a two-step pipeline.
    """
    if learner not in LEARNER_NAMES:
        raise ValueError(f"unknown learner {learner!r}")
    if representation not in REPRESENTATION_NAMES:
        raise ValueError(f"unknown representation {representation!r}")

    if learner == "joint-embedding":
        if representation != "learned":
            raise ValueError("joint-embedding implies representation 'learned'")
        return JointEmbeddingClassifier(
            dim=dim,
            learning_rate=learning_rate,
            epochs=epochs,
            bigram_buckets=bigram_buckets,
            min_token_count=min_token_count,
            seed=seed,
        )

    if representation == "learned":
        raise ValueError("softmax-linear needs representation 'tfidf' or 'embedding-average'")
    classifier = SoftmaxLinearClassifier(
        learning_rate=learning_rate, epochs=epochs, seed=seed
    )
    if representation == "tfidf":
        encoder = TfidfEncoder(stopwords=stopwords, stemming=stemming, min_df=min_df)
    else:
        if table is None:
            raise ValueError("representation 'embedding-average' needs an embedding table")
        encoder = EmbeddingAverager(table=table)
    return Pipeline([("rep", encoder), ("clf", classifier)])
