"""Built-in base classifiers trained with deterministic single-sequence SGD.

Two learners live here:

* :class:`SoftmaxLinearClassifier` -- a multinomial logistic model over
  fixed feature vectors (dense arrays or sparse ``index -> value`` maps).
* :class:`JointEmbeddingClassifier` -- learns word and hashed-bigram
  embeddings jointly with the class weights; a document is represented
  as the mean of its feature embeddings and classified by a softmax
  over an output matrix.

Both minimize cross-entropy with per-example updates, a learning rate
decayed linearly to zero over ``epochs * n_examples`` updates, and a
seeded PCG64 generator for initialization and per-epoch shuffling, so a
fixed seed reproduces parameters bit for bit. Updates are intentionally
sequential; parallel intra-model training would break reproducibility.

Bigram features use a fixed 64-bit FNV-1a hash of ``"tok1 tok2"`` (UTF-8)
reduced modulo the bucket count, with bucket rows stored after the
unigram rows. The hash is pinned here so persisted models are portable.
"""

from __future__ import annotations

import logging
import warnings
from collections import Counter
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .errors import DimensionMismatch, EmptyInput, SingleClassDegenerate
from .features import EmbeddingTable, TokenDoc

logger = logging.getLogger(__name__)

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_U64_MASK = 0xFFFFFFFFFFFFFFFF


def fnv1a64(text: str) -> int:
    """64-bit FNV-1a hash of the UTF-8 encoding of ``text``."""
    h = FNV_OFFSET
    for byte in text.encode("utf-8"):
        h ^= byte
        h = (h * FNV_PRIME) & _U64_MASK
    return h


def softmax(scores: np.ndarray) -> np.ndarray:
    """Numerically stable softmax over the last axis."""
    shifted = scores - np.max(scores, axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / np.sum(exp, axis=-1, keepdims=True)


def _log_loss(scores: np.ndarray, class_index: int) -> float:
    shifted = scores - scores.max()
    return float(np.log(np.exp(shifted).sum()) - shifted[class_index])


# -- per-example gradients (shared by training and the finite-difference tests) --

def linear_example_grads(weights, bias, x, class_index):
    """Cross-entropy loss and gradients for one dense example.

    Returns ``(loss, grad_weights, grad_bias)`` with full dense shapes.
    """
    scores = weights @ x + bias
    loss = _log_loss(scores, class_index)
    g = softmax(scores)
    g[class_index] -= 1.0
    return loss, np.outer(g, x), g


def joint_example_grads(input_embeddings, output_weights, ids, class_index):
    """Cross-entropy loss and gradients for one bag-of-ids example.

    ``ids`` may repeat; each occurrence contributes to the mean and
    receives its share of the hidden-vector gradient. Returns
    ``(loss, grad_input_embeddings, grad_output_weights)`` dense.
    """
    ids = np.asarray(ids)
    hidden = input_embeddings[ids].mean(axis=0)
    scores = output_weights @ hidden
    g = softmax(scores)
    g[class_index] -= 1.0
    grad_out = np.outer(g, hidden)
    grad_hidden = output_weights.T @ g
    grad_in = np.zeros_like(input_embeddings)
    np.add.at(grad_in, ids, grad_hidden / len(ids))
    return _log_loss(scores, class_index), grad_in, grad_out


# -- feature-input normalization ---------------------------------------------------

def _as_feature_rows(X, n_features: int | None):
    """Normalize input to ('dense', matrix) or ('sparse', [(idx, val), ...])."""
    if isinstance(X, np.ndarray) or (
        len(X) > 0 and isinstance(X[0], (np.ndarray, list, tuple))
    ):
        matrix = np.asarray(X, dtype=np.float64)
        if matrix.ndim != 2:
            raise DimensionMismatch(
                f"dense feature input must be 2-D with consistent rows, got ndim={matrix.ndim}"
            )
        if n_features is not None and matrix.shape[1] != n_features:
            raise DimensionMismatch(
                f"expected {n_features} features, got {matrix.shape[1]}"
            )
        return "dense", matrix, matrix.shape[1]

    if len(X) > 0 and isinstance(X[0], dict):
        rows = []
        max_index = -1
        for vec in X:
            if vec:
                idx = np.fromiter(vec.keys(), dtype=np.int64, count=len(vec))
                val = np.fromiter(vec.values(), dtype=np.float64, count=len(vec))
            else:
                idx = np.empty(0, dtype=np.int64)
                val = np.empty(0, dtype=np.float64)
            if idx.size:
                max_index = max(max_index, int(idx.max()))
            rows.append((idx, val))
        dim = n_features if n_features is not None else max_index + 1
        if max_index >= dim:
            raise DimensionMismatch(
                f"sparse index {max_index} out of range for {dim} features"
            )
        return "sparse", rows, dim

    raise DimensionMismatch("feature input must be a 2-D array or a sequence of dicts")


class SoftmaxLinearClassifier(BaseEstimator, ClassifierMixin):
    """Multinomial logistic regression trained by plain SGD.

    Parameters
    ----------
    learning_rate : float
        Initial step size; decays linearly to zero over all updates.
    epochs : int
        Full passes over the training data.
    seed : int
        Seeds the per-epoch shuffling.
    n_features : int or None
        Feature-space size for sparse inputs; inferred when omitted.

    Weights and bias start at zero, so an untrained-equivalent model
    yields the uniform distribution.
    """

    def __init__(
        self,
        learning_rate: float = 0.1,
        epochs: int = 5,
        seed: int = 0,
        n_features: int | None = None,
    ):
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.seed = seed
        self.n_features = n_features

    def fit(self, X, y):
        y = np.asarray(y)
        if len(y) == 0:
            raise EmptyInput("no training examples")
        if len(X) != len(y):
            raise DimensionMismatch(f"{len(X)} feature rows vs {len(y)} labels")

        kind, rows, dim = _as_feature_rows(X, self.n_features)
        self.classes_ = np.unique(y)
        if len(self.classes_) == 1:
            warnings.warn(
                f"training data holds a single class {self.classes_[0]!r}",
                SingleClassDegenerate,
            )
        class_index = {c: i for i, c in enumerate(self.classes_)}
        targets = np.array([class_index[label] for label in y])

        n_classes = len(self.classes_)
        n = len(y)
        weights = np.zeros((n_classes, dim), dtype=np.float64)
        bias = np.zeros(n_classes, dtype=np.float64)

        rng = np.random.default_rng(self.seed)
        total_updates = self.epochs * n
        step = 0
        self.epoch_losses_ = []
        for epoch in range(self.epochs):
            order = rng.permutation(n)
            loss_sum = 0.0
            for i in order:
                lr = self.learning_rate * (1.0 - step / total_updates)
                target = targets[i]
                if kind == "dense":
                    x = rows[i]
                    scores = weights @ x + bias
                    probs = softmax(scores)
                    loss_sum += _log_loss(scores, target)
                    probs[target] -= 1.0
                    weights -= lr * np.outer(probs, x)
                    bias -= lr * probs
                else:
                    idx, val = rows[i]
                    scores = weights[:, idx] @ val + bias
                    probs = softmax(scores)
                    loss_sum += _log_loss(scores, target)
                    probs[target] -= 1.0
                    if idx.size:
                        weights[:, idx] -= lr * np.outer(probs, val)
                    bias -= lr * probs
                step += 1
            self.epoch_losses_.append(loss_sum / n)
            logger.debug("linear epoch %d/%d mean loss %.6f", epoch + 1, self.epochs, self.epoch_losses_[-1])

        self.weights_ = weights
        self.bias_ = bias
        self.n_features_ = dim
        return self

    def _scores(self, X) -> np.ndarray:
        kind, rows, _ = _as_feature_rows(X, self.n_features_)
        if kind == "dense":
            return rows @ self.weights_.T + self.bias_
        out = np.empty((len(rows), len(self.classes_)), dtype=np.float64)
        for i, (idx, val) in enumerate(rows):
            out[i] = self.weights_[:, idx] @ val + self.bias_
        return out

    def predict_proba(self, X) -> np.ndarray:
        """Per-class probabilities, columns aligned to ``classes_``."""
        check_is_fitted(self, "weights_")
        return softmax(self._scores(X))

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "weights_")
        return self.classes_[np.argmax(self._scores(X), axis=1)]


class JointEmbeddingClassifier(BaseEstimator, ClassifierMixin):
    """Linear softmax classifier over jointly learned embeddings.

    A document's feature ids are its in-vocabulary unigrams plus hashed
    bigrams over the consecutive in-vocabulary tokens (``bigram_buckets``
    of 0 disables bigrams). The hidden vector is the mean of the feature
    embeddings; SGD updates both the embedding matrix and the output
    weights. Input embeddings start uniform in ``[-1/dim, +1/dim]``,
    output weights at zero.
    """

    def __init__(
        self,
        dim: int = 30,
        learning_rate: float = 0.1,
        epochs: int = 5,
        bigram_buckets: int = 2_000_000,
        min_token_count: int = 1,
        seed: int = 0,
    ):
        self.dim = dim
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.bigram_buckets = bigram_buckets
        self.min_token_count = min_token_count
        self.seed = seed

    def _doc_feature_ids(self, tokens: TokenDoc) -> np.ndarray:
        known = [t for t in tokens if t in self.token_index_]
        ids = [self.token_index_[t] for t in known]
        if self.bigram_buckets > 0:
            base = len(self.token_index_)
            for first, second in zip(known, known[1:]):
                bucket = fnv1a64(f"{first} {second}") % self.bigram_buckets
                ids.append(base + bucket)
        # Sorted ids make the mean depend only on the feature multiset,
        # bit for bit, regardless of token order.
        ids.sort()
        return np.asarray(ids, dtype=np.int64)

    def fit(self, docs: Sequence[TokenDoc], y):
        y = np.asarray(y)
        if len(y) == 0:
            raise EmptyInput("no training examples")
        if len(docs) != len(y):
            raise DimensionMismatch(f"{len(docs)} documents vs {len(y)} labels")

        counts: Counter[str] = Counter()
        for tokens in docs:
            counts.update(tokens)
        self.vocab_ = sorted(t for t, c in counts.items() if c >= self.min_token_count)
        self.token_index_ = {t: i for i, t in enumerate(self.vocab_)}

        self.classes_ = np.unique(y)
        if len(self.classes_) == 1:
            warnings.warn(
                f"training data holds a single class {self.classes_[0]!r}",
                SingleClassDegenerate,
            )
        class_index = {c: i for i, c in enumerate(self.classes_)}

        examples = []
        self.n_skipped_ = 0
        for tokens, label in zip(docs, y):
            ids = self._doc_feature_ids(tokens)
            if ids.size == 0:
                self.n_skipped_ += 1
                continue
            examples.append((ids, class_index[label]))
        if self.n_skipped_:
            logger.debug("skipped %d empty documents", self.n_skipped_)
        if not examples:
            raise EmptyInput("every document was empty after vocabulary filtering")

        n_rows = len(self.vocab_) + max(self.bigram_buckets, 0)
        rng = np.random.default_rng(self.seed)
        bound = 1.0 / self.dim
        input_emb = rng.uniform(-bound, bound, size=(n_rows, self.dim))
        output_w = np.zeros((len(self.classes_), self.dim), dtype=np.float64)

        n = len(examples)
        total_updates = self.epochs * n
        step = 0
        self.epoch_losses_ = []
        for epoch in range(self.epochs):
            order = rng.permutation(n)
            loss_sum = 0.0
            for i in order:
                lr = self.learning_rate * (1.0 - step / total_updates)
                ids, target = examples[i]
                hidden = input_emb[ids].mean(axis=0)
                scores = output_w @ hidden
                probs = softmax(scores)
                loss_sum += _log_loss(scores, target)
                probs[target] -= 1.0
                grad_hidden = output_w.T @ probs
                output_w -= lr * np.outer(probs, hidden)
                np.add.at(input_emb, ids, -lr * grad_hidden / len(ids))
                step += 1
            self.epoch_losses_.append(loss_sum / n)
            logger.debug(
                "joint epoch %d/%d mean loss %.6f", epoch + 1, self.epochs, self.epoch_losses_[-1]
            )

        self.input_embeddings_ = input_emb
        self.output_weights_ = output_w
        return self

    def _hidden(self, tokens: TokenDoc) -> np.ndarray:
        ids = self._doc_feature_ids(tokens)
        if ids.size == 0:
            return np.zeros(self.dim, dtype=np.float64)
        return self.input_embeddings_[ids].mean(axis=0)

    def predict_proba(self, docs: Sequence[TokenDoc]) -> np.ndarray:
        """Per-class probabilities, columns aligned to ``classes_``.

        A document with no known features scores uniformly.
        """
        check_is_fitted(self, "input_embeddings_")
        hidden = np.stack([self._hidden(tokens) for tokens in docs])
        return softmax(hidden @ self.output_weights_.T)

    def predict(self, docs: Sequence[TokenDoc]) -> np.ndarray:
        check_is_fitted(self, "input_embeddings_")
        hidden = np.stack([self._hidden(tokens) for tokens in docs])
        return self.classes_[np.argmax(hidden @ self.output_weights_.T, axis=1)]


def extract_embeddings(model: JointEmbeddingClassifier) -> EmbeddingTable:
    """Export a trained model's unigram embeddings (bigram buckets omitted)."""
    check_is_fitted(model, "input_embeddings_")
    vectors = {
        token: model.input_embeddings_[index].copy()
        for token, index in model.token_index_.items()
    }
    return EmbeddingTable(dimension=model.dim, vectors=vectors)
