"""Model persistence: key=value manifests plus raw float32 parameter blobs.

A base model is a ``<name>.manifest`` / ``<name>.blob`` pair (plus a
``<name>.vocab`` JSON sidecar when a TF-IDF step is attached). The blob
is the magic bytes ``HTXM1`` followed by all parameters as little-endian
32-bit reals in row-major order: weights then bias for the linear model,
input embeddings then output weights for the joint model.

A strategy-level model is a directory: a ``manifest.txt`` describing the
run, the flat base model at ``model.*``, or (for LCPN+VC) a
``taxonomy.txt`` edge list plus one base model per internal node under
``nodes/``, file names percent-escaped from node labels
(``urllib.parse.quote`` with ``safe=""``).
"""

from __future__ import annotations

import urllib.parse
from pathlib import Path

import numpy as np
from sklearn.pipeline import Pipeline

from .errors import ConfigError, HtcError
from .features import (
    EmbeddingAverager,
    EmbeddingTable,
    TfidfEncoder,
    load_embeddings_file,
    load_vocabulary,
    save_vocabulary,
)
from .learner import JointEmbeddingClassifier, SoftmaxLinearClassifier
from .strategy import FlatClassifier, TopDownClassifier, _ConstantLocal
from .taxonomy import load_hierarchy_file

MAGIC = b"HTXM1"
FORMAT_VERSION = "1"

KIND_LINEAR = "softmax-linear"
KIND_JOINT = "joint-embedding"
KIND_CONSTANT = "constant-vc"

REP_NONE = "none"
REP_TFIDF = "tfidf"
REP_AVERAGE = "embedding-average"


def escape_label(label: str) -> str:
    return urllib.parse.quote(label, safe="")


def unescape_label(name: str) -> str:
    return urllib.parse.unquote(name)


def write_manifest(path: Path, entries: list[tuple[str, str]]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for key, value in entries:
            handle.write(f"{key}={value}\n")


def read_manifest(path: Path) -> dict[str, str]:
    entries: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as handle:
        for raw in handle:
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise HtcError(f"bad manifest line in {path}: {line!r}")
            entries[key] = value
    return entries


def _write_blob(path: Path, arrays: list[np.ndarray]) -> None:
    with open(path, "wb") as handle:
        handle.write(MAGIC)
        for array in arrays:
            handle.write(np.ascontiguousarray(array, dtype="<f4").tobytes())


def _read_blob(path: Path) -> np.ndarray:
    data = Path(path).read_bytes()
    if not data.startswith(MAGIC):
        raise HtcError(f"{path}: missing {MAGIC!r} magic bytes")
    return np.frombuffer(data[len(MAGIC):], dtype="<f4")


def _join_labels(labels) -> str:
    out = []
    for label in labels:
        text = str(label)
        if not text or any(ch.isspace() for ch in text):
            raise HtcError(f"cannot persist label {text!r}: labels must be whitespace-free")
        out.append(text)
    return " ".join(out)


# -- base estimators ----------------------------------------------------------

def _split_pipeline(estimator):
    """Return (representation name, encoder or None, classifier)."""
    if isinstance(estimator, Pipeline):
        if len(estimator.steps) != 2:
            raise HtcError("only two-step (encoder, classifier) pipelines persist")
        encoder = estimator.steps[0][1]
        classifier = estimator.steps[1][1]
        if isinstance(encoder, TfidfEncoder):
            return REP_TFIDF, encoder, classifier
        if isinstance(encoder, EmbeddingAverager):
            return REP_AVERAGE, encoder, classifier
        raise HtcError(f"unsupported pipeline encoder {type(encoder).__name__}")
    return REP_NONE, None, estimator


def save_base_estimator(prefix, estimator) -> None:
    """Write ``<prefix>.manifest`` + ``<prefix>.blob`` (+ ``.vocab``)."""
    prefix = Path(prefix)
    representation, encoder, classifier = _split_pipeline(estimator)

    if isinstance(classifier, _ConstantLocal):
        write_manifest(
            prefix.with_suffix(".manifest"),
            [
                ("format_version", FORMAT_VERSION),
                ("kind", KIND_CONSTANT),
                ("representation", REP_NONE),
                ("classes", _join_labels(classifier.classes_)),
            ],
        )
        return

    if isinstance(classifier, JointEmbeddingClassifier):
        entries = [
            ("format_version", FORMAT_VERSION),
            ("kind", KIND_JOINT),
            ("representation", representation),
            ("dimension", str(classifier.dim)),
            ("classes", _join_labels(classifier.classes_)),
            ("vocab_size", str(len(classifier.vocab_))),
            ("bucket_count", str(classifier.bigram_buckets)),
            ("seed", str(classifier.seed)),
            ("learning_rate", repr(float(classifier.learning_rate))),
            ("epochs", str(classifier.epochs)),
            ("min_token_count", str(classifier.min_token_count)),
            ("vocab", _join_labels(classifier.vocab_)),
        ]
        arrays = [classifier.input_embeddings_, classifier.output_weights_]
    elif isinstance(classifier, SoftmaxLinearClassifier):
        entries = [
            ("format_version", FORMAT_VERSION),
            ("kind", KIND_LINEAR),
            ("representation", representation),
            ("dimension", str(classifier.n_features_)),
            ("classes", _join_labels(classifier.classes_)),
            ("vocab_size", "0"),
            ("bucket_count", "0"),
            ("seed", str(classifier.seed)),
            ("learning_rate", repr(float(classifier.learning_rate))),
            ("epochs", str(classifier.epochs)),
        ]
        arrays = [classifier.weights_, classifier.bias_]
    else:
        raise HtcError(f"cannot persist estimator of type {type(classifier).__name__}")

    write_manifest(prefix.with_suffix(".manifest"), entries)
    _write_blob(prefix.with_suffix(".blob"), arrays)
    if isinstance(encoder, TfidfEncoder):
        save_vocabulary(prefix.with_suffix(".vocab"), encoder.vocabulary_)


def load_base_estimator(prefix, table: EmbeddingTable | None = None):
    """Rebuild a fitted base estimator saved by :func:`save_base_estimator`."""
    prefix = Path(prefix)
    manifest = read_manifest(prefix.with_suffix(".manifest"))
    kind = manifest["kind"]
    classes = np.array(manifest["classes"].split(), dtype=object)

    if kind == KIND_CONSTANT:
        return _ConstantLocal(str(classes[0]))

    if kind == KIND_JOINT:
        classifier = JointEmbeddingClassifier(
            dim=int(manifest["dimension"]),
            learning_rate=float(manifest["learning_rate"]),
            epochs=int(manifest["epochs"]),
            bigram_buckets=int(manifest["bucket_count"]),
            min_token_count=int(manifest["min_token_count"]),
            seed=int(manifest["seed"]),
        )
        vocab = manifest["vocab"].split() if manifest["vocab"] else []
        if len(vocab) != int(manifest["vocab_size"]):
            raise HtcError(f"{prefix}: vocab size mismatch in manifest")
        classifier.vocab_ = vocab
        classifier.token_index_ = {t: i for i, t in enumerate(vocab)}
        classifier.classes_ = classes
        flat = _read_blob(prefix.with_suffix(".blob"))
        n_rows = len(vocab) + classifier.bigram_buckets
        dim = classifier.dim
        expected = n_rows * dim + len(classes) * dim
        if flat.size != expected:
            raise HtcError(f"{prefix}: blob holds {flat.size} values, expected {expected}")
        classifier.input_embeddings_ = flat[: n_rows * dim].reshape(n_rows, dim)
        classifier.output_weights_ = flat[n_rows * dim:].reshape(len(classes), dim)
        classifier.n_skipped_ = 0
    elif kind == KIND_LINEAR:
        classifier = SoftmaxLinearClassifier(
            learning_rate=float(manifest["learning_rate"]),
            epochs=int(manifest["epochs"]),
            seed=int(manifest["seed"]),
        )
        dim = int(manifest["dimension"])
        classifier.classes_ = classes
        classifier.n_features_ = dim
        flat = _read_blob(prefix.with_suffix(".blob"))
        expected = len(classes) * dim + len(classes)
        if flat.size != expected:
            raise HtcError(f"{prefix}: blob holds {flat.size} values, expected {expected}")
        classifier.weights_ = flat[: len(classes) * dim].reshape(len(classes), dim)
        classifier.bias_ = flat[len(classes) * dim:]
    else:
        raise HtcError(f"{prefix}: unknown model kind {kind!r}")

    representation = manifest.get("representation", REP_NONE)
    if representation == REP_NONE:
        return classifier
    if representation == REP_TFIDF:
        vocabulary = load_vocabulary(prefix.with_suffix(".vocab"))
        encoder = TfidfEncoder(
            stopwords=sorted(vocabulary.stopwords) if vocabulary.stopwords else None,
            stemming=vocabulary.stemming,
            min_df=vocabulary.min_df,
        )
        encoder.vocabulary_ = vocabulary
        encoder.n_features_ = len(vocabulary)
        return Pipeline([("rep", encoder), ("clf", classifier)])
    if representation == REP_AVERAGE:
        if table is None:
            raise ConfigError(
                f"{prefix}: model uses averaged embeddings; an embedding table is required"
            )
        encoder = EmbeddingAverager(table=table)
        return Pipeline([("rep", encoder), ("clf", classifier)])
    raise HtcError(f"{prefix}: unknown representation {representation!r}")


# -- strategy-level model directories --------------------------------------------

def _clear_model_artifacts(dirpath: Path) -> None:
    """Drop artifacts from a previous save so strategies can swap in place."""
    for name in ("taxonomy.txt", "model.manifest", "model.blob", "model.vocab"):
        (dirpath / name).unlink(missing_ok=True)
    nodes_dir = dirpath / "nodes"
    if nodes_dir.is_dir():
        for stale in nodes_dir.iterdir():
            stale.unlink()
        nodes_dir.rmdir()


def save_model_dir(
    dirpath,
    model,
    learner: str,
    representation: str,
    seed: int,
    embeddings_path: str = "",
) -> None:
    """Persist a flat or top-down model as a self-describing directory."""
    dirpath = Path(dirpath)
    dirpath.mkdir(parents=True, exist_ok=True)
    _clear_model_artifacts(dirpath)

    if isinstance(model, FlatClassifier):
        strategy = "flat"
        save_base_estimator(dirpath / "model", model.model_)
        n_nodes = 1
    elif isinstance(model, TopDownClassifier):
        strategy = "lcpn-vc"
        with open(dirpath / "taxonomy.txt", "w", encoding="utf-8") as handle:
            for parent, child in model.taxonomy.edges():
                handle.write(f"{parent} {child}\n")
        nodes_dir = dirpath / "nodes"
        nodes_dir.mkdir(exist_ok=True)
        for node in model.taxonomy.internal_nodes():
            save_base_estimator(nodes_dir / escape_label(node), model.local_models_[node])
        n_nodes = len(model.local_models_)
    else:
        raise HtcError(f"cannot persist model of type {type(model).__name__}")

    write_manifest(
        dirpath / "manifest.txt",
        [
            ("format_version", FORMAT_VERSION),
            ("strategy", strategy),
            ("learner", learner),
            ("representation", representation),
            ("seed", str(seed)),
            ("embeddings", embeddings_path),
            ("n_models", str(n_nodes)),
        ],
    )


def load_model_dir(dirpath, table: EmbeddingTable | None = None):
    """Load a model directory; returns ``(model, manifest)``.

    For the averaged-embedding representation the table is re-read from
    the path recorded in the manifest unless one is passed in.
    """
    dirpath = Path(dirpath)
    manifest = read_manifest(dirpath / "manifest.txt")
    if manifest.get("representation") == REP_AVERAGE and table is None:
        recorded = manifest.get("embeddings", "")
        if not recorded:
            raise ConfigError(f"{dirpath}: manifest records no embeddings path")
        path = Path(recorded)
        if not path.is_absolute():
            path = dirpath / path
        if not path.exists():
            raise ConfigError(f"{dirpath}: embeddings path not found: {path}")
        table = load_embeddings_file(path)

    strategy = manifest.get("strategy")
    if strategy == "flat":
        base = load_base_estimator(dirpath / "model", table)
        model = FlatClassifier()
        model.model_ = base
        model.classes_ = base.classes_
        return model, manifest
    if strategy == "lcpn-vc":
        taxonomy = load_hierarchy_file(dirpath / "taxonomy.txt")
        node_models = {}
        for node in taxonomy.internal_nodes():
            node_models[node] = load_base_estimator(
                dirpath / "nodes" / escape_label(node), table
            )
        return TopDownClassifier.from_node_models(taxonomy, node_models), manifest
    raise HtcError(f"{dirpath}: unknown strategy {strategy!r}")
