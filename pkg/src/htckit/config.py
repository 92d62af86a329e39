"""Experiment configuration: flat ``key=value`` files with ``#`` comments."""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ConfigError

STRATEGIES = ("flat", "lcpn-vc")
LEARNERS = ("softmax-linear", "joint-embedding")
REPRESENTATIONS = ("tfidf", "embedding-average", "learned")
CORPUS_FORMATS = ("plain", "rcv1-xml")

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


@dataclass
class ExperimentConfig:
    """One experiment-grid cell: paths, strategy, learner, and training knobs."""

    taxonomy: str = ""
    corpus: str = ""
    out_dir: str = ""
    corpus_format: str = "plain"
    xml_encoding: str = "utf-8"
    embeddings: str = ""
    stopwords: str = ""
    strategy: str = "flat"
    learner: str = "joint-embedding"
    representation: str = "learned"
    learning_rate: float = 0.1
    epochs: int = 5
    dimension: int = 30
    bigram_buckets: int = 2_000_000
    min_token_count: int = 1
    min_df: int = 1
    stemming: bool = False
    holdout_fraction: float = 0.1
    seed: int = 13
    results_file: str = ""
    model_dir: str = ""

    def resolved_results_file(self) -> Path:
        return Path(self.results_file) if self.results_file else Path(self.out_dir) / "results.tsv"

    def resolved_model_dir(self) -> Path:
        return Path(self.model_dir) if self.model_dir else Path(self.out_dir) / "model"

    def validate_enums(self) -> None:
        checks = (
            ("strategy", self.strategy, STRATEGIES),
            ("learner", self.learner, LEARNERS),
            ("representation", self.representation, REPRESENTATIONS),
            ("corpus_format", self.corpus_format, CORPUS_FORMATS),
        )
        for name, value, allowed in checks:
            if value not in allowed:
                raise ConfigError(f"{name} must be one of {allowed}, got {value!r}")
        if self.learner == "joint-embedding" and self.representation != "learned":
            raise ConfigError("learner joint-embedding requires representation=learned")
        if self.learner == "softmax-linear" and self.representation == "learned":
            raise ConfigError(
                "learner softmax-linear requires representation=tfidf or embedding-average"
            )
        if self.representation == "embedding-average" and not self.embeddings:
            raise ConfigError("representation embedding-average requires an embeddings path")


def _convert(name: str, raw: str, target_type) -> object:
    if target_type is bool:
        lowered = raw.strip().lower()
        if lowered in _TRUE:
            return True
        if lowered in _FALSE:
            return False
        raise ConfigError(f"{name}: expected a boolean, got {raw!r}")
    try:
        return target_type(raw)
    except ValueError as exc:
        raise ConfigError(f"{name}: expected {target_type.__name__}, got {raw!r}") from exc


def parse_config(lines, source: str = "<config>") -> ExperimentConfig:
    known = {f.name: f.type for f in fields(ExperimentConfig)}
    types = {
        f.name: type(getattr(ExperimentConfig(), f.name)) for f in fields(ExperimentConfig)
    }
    config = ExperimentConfig()
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{source} line {lineno}: expected key=value, got {line!r}")
        key = key.strip()
        value = value.strip()
        if key not in known:
            raise ConfigError(f"{source} line {lineno}: unknown key {key!r}")
        setattr(config, key, _convert(key, value, types[key]))
    return config


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config path not found: {path}")
    with open(path, "r", encoding="utf-8") as handle:
        return parse_config(handle, source=str(path))


def require_path(path_str: str, what: str) -> Path:
    """Resolve a config-referenced path, failing with its name when absent."""
    if not path_str:
        raise ConfigError(f"{what} path not set in the configuration")
    path = Path(path_str)
    if not path.exists():
        raise ConfigError(f"{what} path not found: {path}")
    return path
