"""Numeric document representations: TF-IDF and averaged word embeddings.

TF-IDF weights use the natural logarithm: ``tf * ln(N / df)``. The base
only rescales all weights uniformly, so it cannot change the argmax of a
linear model trained on them; natural log is pinned for reproducibility.

Embedding tables are plain text, one ``token v1 ... vd`` line each, with
an optional ``count dimension`` header line (both common distribution
conventions are auto-detected). Document vectors are the arithmetic mean
of the in-table token vectors, counting repeated tokens per occurrence;
a document with no in-table tokens maps to the zero vector.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .errors import (
    DimensionMismatch,
    EmptyCorpus,
    EmptyFile,
    NonFiniteValue,
)

TokenDoc = Sequence[str]
SparseVector = dict[int, float]


def light_stem(token: str) -> str:
    """Strip common English plural/verbal/adverbial suffixes.

    Deliberately tiny: enough to merge obvious inflections without a
    linguistic dependency. Stems shorter than three characters are never
    produced.
    """
    if token.endswith("sses"):
        candidate = token[:-2]
    elif token.endswith("ies"):
        candidate = token[:-2]
    elif token.endswith("ss"):
        candidate = token
    elif token.endswith("s"):
        candidate = token[:-1]
    else:
        candidate = token
    for suffix in ("ing", "ed", "ly"):
        if candidate.endswith(suffix) and len(candidate) - len(suffix) >= 3:
            candidate = candidate[: -len(suffix)]
            break
    return candidate if len(candidate) >= 3 else token


@dataclass(frozen=True)
class Vocabulary:
    """Token index plus document frequencies for a fixed corpus.

    ``token_index`` is dense over ``[0, len(vocabulary))`` in lexicographic
    token order; ``df`` holds per-token document frequencies against the
    ``n_docs`` documents seen at build time.
    """

    token_index: dict[str, int]
    df: dict[str, int]
    n_docs: int
    stopwords: frozenset[str] | None = None
    stemming: bool = False
    min_df: int = 1

    def __len__(self) -> int:
        return len(self.token_index)

    def transform_tokens(self, tokens: TokenDoc) -> list[str]:
        """Apply the vocabulary's stopword/stemming pipeline to a document."""
        return _filter_tokens(tokens, self.stopwords, self.stemming)


def _filter_tokens(tokens: TokenDoc, stopwords, stemming: bool) -> list[str]:
    out = tokens if stopwords is None else [t for t in tokens if t not in stopwords]
    if stemming:
        out = [light_stem(t) for t in out]
    return list(out)


def build_vocabulary(
    docs: Sequence[TokenDoc],
    stopwords: Iterable[str] | None = None,
    stemming: bool = False,
    min_df: int = 1,
) -> Vocabulary:
    """Index the tokens of ``docs`` that survive the configured filters."""
    if not docs:
        raise EmptyCorpus("cannot build a vocabulary from zero documents")
    stopset = frozenset(stopwords) if stopwords is not None else None

    df: Counter[str] = Counter()
    for tokens in docs:
        df.update(set(_filter_tokens(tokens, stopset, stemming)))

    kept = sorted(t for t, count in df.items() if count >= min_df)
    return Vocabulary(
        token_index={t: i for i, t in enumerate(kept)},
        df={t: df[t] for t in kept},
        n_docs=len(docs),
        stopwords=stopset,
        stemming=stemming,
        min_df=min_df,
    )


def tfidf_vector(tokens: TokenDoc, vocab: Vocabulary) -> SparseVector:
    """Sparse ``index -> tf * ln(N / df)`` map; zero weights are omitted."""
    counts = Counter(vocab.transform_tokens(tokens))
    out: SparseVector = {}
    for token, tf in counts.items():
        index = vocab.token_index.get(token)
        if index is None:
            continue
        weight = tf * math.log(vocab.n_docs / vocab.df[token])
        if weight != 0.0:
            out[index] = weight
    return out


def format_sparse_vector(vec: SparseVector) -> str:
    """Debug serialization: ``index:weight`` fields sorted by index."""
    return " ".join(f"{i}:{repr(w)}" for i, w in sorted(vec.items()))


def parse_sparse_vector(line: str) -> SparseVector:
    out: SparseVector = {}
    for fieldno, chunk in enumerate(line.split(), start=1):
        index_str, _, weight_str = chunk.partition(":")
        if not _:
            raise DimensionMismatch(f"sparse field {fieldno}: expected 'index:weight'")
        out[int(index_str)] = float(weight_str)
    return out


# -- vocabulary persistence ----------------------------------------------------

def save_vocabulary(path, vocab: Vocabulary) -> None:
    payload = {
        "n_docs": vocab.n_docs,
        "min_df": vocab.min_df,
        "stemming": vocab.stemming,
        "stopwords": sorted(vocab.stopwords) if vocab.stopwords is not None else None,
        "df": {t: vocab.df[t] for t in sorted(vocab.df)},
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=0, sort_keys=True)


def load_vocabulary(path) -> Vocabulary:
    with open(path, "r", encoding="utf-8") as handle:
        payload = json.load(handle)
    tokens = sorted(payload["df"])
    return Vocabulary(
        token_index={t: i for i, t in enumerate(tokens)},
        df=dict(payload["df"]),
        n_docs=int(payload["n_docs"]),
        stopwords=(
            frozenset(payload["stopwords"]) if payload["stopwords"] is not None else None
        ),
        stemming=bool(payload["stemming"]),
        min_df=int(payload["min_df"]),
    )


# -- embedding tables ------------------------------------------------------------

class EmbeddingTable:
    """token -> dense vector map with a fixed dimension.

    ``bucket_count``/``bucket_vectors`` optionally hold hashed-bigram
    rows when a table is exported with them; the loaders here only ever
    produce unigram tables.
    """

    def __init__(
        self,
        dimension: int,
        vectors: dict[str, np.ndarray],
        bucket_count: int = 0,
        bucket_vectors: dict[int, np.ndarray] | None = None,
    ):
        self.dimension = dimension
        self.vectors = vectors
        self.bucket_count = bucket_count
        self.bucket_vectors = bucket_vectors

    def __contains__(self, token: str) -> bool:
        return token in self.vectors

    def __len__(self) -> int:
        return len(self.vectors)

    def get(self, token: str) -> np.ndarray | None:
        return self.vectors.get(token)


def load_embeddings(source: Iterable[str]) -> EmbeddingTable:
    """Read a text embedding table, auto-detecting an optional header.

    If the first line is exactly two integers it is taken as a
    ``count dimension`` header; otherwise the dimension is inferred from
    the first data line. Duplicate tokens keep their first occurrence.

    Raises
    ------
    EmptyFile
        No data lines at all.
    DimensionMismatch
        A line's value count differs from the established dimension
        (reported with its line number).
    NonFiniteValue
        A vector component parses to NaN or infinity.
    """
    dimension: int | None = None
    vectors: dict[str, np.ndarray] = {}

    for lineno, raw in enumerate(source, start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            continue
        fields = line.split()
        if lineno == 1 and len(fields) == 2:
            try:
                int(fields[0]), int(fields[1])
            except ValueError:
                pass
            else:
                dimension = int(fields[1])
                continue
        token, values = fields[0], fields[1:]
        if dimension is None:
            if not values:
                raise DimensionMismatch(f"line {lineno}: no vector components")
            dimension = len(values)
        if len(values) != dimension:
            raise DimensionMismatch(
                f"line {lineno}: expected {dimension} components, got {len(values)}"
            )
        if token in vectors:
            continue
        try:
            vector = np.array([float(v) for v in values], dtype=np.float64)
        except ValueError as exc:
            raise NonFiniteValue(f"line {lineno}: unparseable component ({exc})") from exc
        if not np.all(np.isfinite(vector)):
            raise NonFiniteValue(f"line {lineno}: non-finite component for {token!r}")
        vectors[token] = vector

    if not vectors:
        raise EmptyFile("embedding stream has no data lines")
    return EmbeddingTable(dimension=int(dimension), vectors=vectors)


def load_embeddings_file(path) -> EmbeddingTable:
    with open(path, "r", encoding="utf-8") as handle:
        return load_embeddings(handle)


def save_embeddings(path, table: EmbeddingTable, header: bool = False) -> None:
    """Write a table back out; ``repr(float)`` keeps full stored precision."""
    with open(path, "w", encoding="utf-8") as handle:
        if header:
            handle.write(f"{len(table)} {table.dimension}\n")
        for token, vector in table.vectors.items():
            components = " ".join(repr(float(v)) for v in vector)
            handle.write(f"{token} {components}\n")


def average_doc_vector(tokens: TokenDoc, table: EmbeddingTable) -> np.ndarray:
    """Column-wise mean of the in-table token vectors (zeros when none)."""
    rows = [table.vectors[t] for t in tokens if t in table.vectors]
    if not rows:
        return np.zeros(table.dimension, dtype=np.float64)
    return np.mean(rows, axis=0)


# -- sklearn-style transformers ---------------------------------------------------

class TfidfEncoder(BaseEstimator, TransformerMixin):
    """Fit a vocabulary on token lists; transform them to sparse TF-IDF maps."""

    def __init__(self, stopwords=None, stemming: bool = False, min_df: int = 1):
        self.stopwords = stopwords
        self.stemming = stemming
        self.min_df = min_df

    def fit(self, X, y=None):
        self.vocabulary_ = build_vocabulary(
            X, stopwords=self.stopwords, stemming=self.stemming, min_df=self.min_df
        )
        self.n_features_ = len(self.vocabulary_)
        return self

    def transform(self, X) -> list[SparseVector]:
        check_is_fitted(self, "vocabulary_")
        return [tfidf_vector(tokens, self.vocabulary_) for tokens in X]


class EmbeddingAverager(BaseEstimator, TransformerMixin):
    """Stateless transformer mapping token lists to averaged embeddings."""

    def __init__(self, table: EmbeddingTable | None = None):
        self.table = table

    def fit(self, X, y=None):
        if self.table is None:
            raise EmptyFile("EmbeddingAverager needs an embedding table")
        return self

    def transform(self, X) -> np.ndarray:
        if self.table is None:
            raise EmptyFile("EmbeddingAverager needs an embedding table")
        return np.stack([average_doc_vector(tokens, self.table) for tokens in X])
