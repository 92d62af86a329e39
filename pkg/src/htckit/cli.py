"""Batch command line: prepare, train, predict, eval, report.

Logs go to standard error; data outputs go to files or standard output.
Exit codes: 0 success, 1 computation/data error, 2 usage or
configuration error.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

from . import corpus as corpus_mod
from . import persistence
from .config import ExperimentConfig, load_config, require_path
from .errors import ConfigError, HtcError
from .features import load_embeddings_file
from .metrics import (
    PredictionPair,
    evaluate_pairs,
    join_gold_predictions,
    read_label_file,
)
from .results import ResultRow, aggregate_results, append_result, read_results
from .strategy import FlatClassifier, TopDownClassifier, build_base_estimator
from .taxonomy import load_hierarchy_file

logger = logging.getLogger("htckit")


def _load_stopwords(cfg: ExperimentConfig):
    if not cfg.stopwords:
        return None
    path = require_path(cfg.stopwords, "stopwords")
    with open(path, "r", encoding="utf-8") as handle:
        return sorted({line.strip() for line in handle if line.strip()})


def _load_table_if_needed(cfg: ExperimentConfig):
    if cfg.representation != "embedding-average":
        return None
    path = require_path(cfg.embeddings, "embeddings")
    return load_embeddings_file(path)


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "strategy", None):
        cfg.strategy = args.strategy
    if getattr(args, "learner", None):
        cfg.learner = args.learner
        if args.learner == "joint-embedding":
            cfg.representation = "learned"
    if getattr(args, "out", None):
        cfg.out_dir = args.out
    return cfg


def _require_out_dir(cfg: ExperimentConfig) -> Path:
    if not cfg.out_dir:
        raise ConfigError("out_dir not set in the configuration")
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _ingest_corpus(cfg: ExperimentConfig, tax):
    corpus_path = require_path(cfg.corpus, "corpus")
    if cfg.corpus_format == "plain":
        docs = corpus_mod.load_corpus_file(corpus_path)
        for doc in docs:
            if doc.label not in tax or doc.label == tax.root:
                raise HtcError(f"doc {doc.doc_id!r}: bad label {doc.label!r}")
        return docs

    xml_files = sorted(corpus_path.glob("*.xml")) if corpus_path.is_dir() else [corpus_path]
    if not xml_files:
        raise HtcError(f"no .xml files under {corpus_path}")
    raw_docs = []
    for xml_path in xml_files:
        text = xml_path.read_bytes().decode(cfg.xml_encoding)
        raw = corpus_mod.ingest_rcv1_xml(text)
        if not raw.doc_id:
            raw = corpus_mod.RawDocument(
                doc_id=xml_path.stem, text=raw.text, topic_codes=raw.topic_codes
            )
        raw_docs.append(raw)
    return corpus_mod.reduce_to_single_label(raw_docs, tax)


def cmd_prepare(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    tax = load_hierarchy_file(require_path(cfg.taxonomy, "taxonomy"))
    out = _require_out_dir(cfg)

    docs = _ingest_corpus(cfg, tax)
    corpus_mod.write_corpus_file(out / "corpus.tsv", docs)
    logger.info("ingested %d documents", len(docs))

    split = corpus_mod.holdout_split(docs, cfg.holdout_fraction, cfg.seed)
    corpus_mod.write_corpus_file(out / "train.tsv", split.train)
    corpus_mod.write_corpus_file(out / "test.tsv", split.test)
    logger.info("holdout split: %d train / %d test", len(split.train), len(split.test))

    local_dir = out / "local"
    local_dir.mkdir(exist_ok=True)
    datasets = corpus_mod.hierarchical_split(list(split.train), tax)
    print(f"documents\t{len(docs)}")
    print(f"train\t{len(split.train)}")
    print(f"test\t{len(split.test)}")
    print(f"local_datasets\t{len(datasets)}")
    for ds in datasets:
        corpus_mod.write_local_dataset(
            local_dir / (persistence.escape_label(ds.parent) + ".tsv"), ds
        )
        if ds.examples:
            n, k, imbalance = corpus_mod.local_dataset_stats(ds)
            print(f"local\t{ds.parent}\tn_examples={n}\tn_labels={k}\timbalance={imbalance:.2f}")
        else:
            print(f"local\t{ds.parent}\tn_examples=0\tn_labels=0\timbalance=n/a")
    return 0


def _read_local_datasets(cfg: ExperimentConfig, tax, out: Path):
    local_dir = out / "local"
    if not local_dir.is_dir():
        raise ConfigError(f"prepared local datasets not found: {local_dir} (run prepare)")
    datasets = []
    for node in tax.internal_nodes():
        path = local_dir / (persistence.escape_label(node) + ".tsv")
        if not path.exists():
            raise ConfigError(f"local dataset file not found: {path}")
        docs = corpus_mod.load_corpus_file(path)
        ds = corpus_mod.LocalDataset(
            parent=node,
            examples=[(doc, doc.label) for doc in docs],
            vc_label=None if node == tax.root else corpus_mod.vc_label_for(node),
        )
        datasets.append(ds)
    return datasets


def _representation_size(cfg: ExperimentConfig, model) -> int:
    if cfg.representation == "learned":
        return cfg.dimension
    if isinstance(model, FlatClassifier):
        base = model.model_
    else:
        base = model.local_models_[model.taxonomy.root]
    encoder = base.steps[0][1]
    if cfg.representation == "tfidf":
        return len(encoder.vocabulary_)
    return encoder.table.dimension


def cmd_train(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    cfg.validate_enums()
    tax = load_hierarchy_file(require_path(cfg.taxonomy, "taxonomy"))
    out = _require_out_dir(cfg)
    table = _load_table_if_needed(cfg)

    base = build_base_estimator(
        cfg.learner,
        cfg.representation,
        table=table,
        learning_rate=cfg.learning_rate,
        epochs=cfg.epochs,
        dim=cfg.dimension,
        bigram_buckets=cfg.bigram_buckets,
        min_token_count=cfg.min_token_count,
        seed=cfg.seed,
        stopwords=_load_stopwords(cfg),
        stemming=cfg.stemming,
        min_df=cfg.min_df,
    )

    started = time.perf_counter()
    if cfg.strategy == "flat":
        train_path = out / "train.tsv"
        if not train_path.exists():
            raise ConfigError(f"prepared train corpus not found: {train_path} (run prepare)")
        docs = corpus_mod.load_corpus_file(train_path)
        if not docs:
            raise HtcError(f"{train_path}: no training documents")
        model = FlatClassifier(base_estimator=base, taxonomy=tax)
        model.fit([doc.tokens for doc in docs], [doc.label for doc in docs])
        losses = getattr(model.model_, "epoch_losses_", None) or getattr(
            model.model_.steps[-1][1], "epoch_losses_", None
        )
        logger.info("flat model epoch losses: %s", [round(v, 6) for v in losses])
    else:
        datasets = _read_local_datasets(cfg, tax, out)
        model = TopDownClassifier(base_estimator=base, taxonomy=tax, seed=cfg.seed)
        model.fit_local_datasets(datasets)
        for node in tax.internal_nodes():
            local = model.local_models_[node]
            losses = getattr(local, "epoch_losses_", None)
            if losses is None and hasattr(local, "steps"):
                losses = getattr(local.steps[-1][1], "epoch_losses_", None)
            if losses is not None:
                logger.info(
                    "local model %s epoch losses: %s", node, [round(v, 6) for v in losses]
                )
    elapsed = time.perf_counter() - started
    logger.info("training took %.2f s", elapsed)

    model_dir = cfg.resolved_model_dir()
    persistence.save_model_dir(
        model_dir,
        model,
        learner=cfg.learner,
        representation=cfg.representation,
        seed=cfg.seed,
        embeddings_path=cfg.embeddings,
    )
    print(str(model_dir))
    return 0


def _load_model(cfg: ExperimentConfig, model_dir: Path):
    table = None
    manifest = persistence.read_manifest(model_dir / "manifest.txt")
    if manifest.get("representation") == "embedding-average" and cfg.embeddings:
        table = load_embeddings_file(require_path(cfg.embeddings, "embeddings"))
    model, manifest = persistence.load_model_dir(model_dir, table)
    return model, manifest


def cmd_predict(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    model_dir = Path(args.model) if args.model else cfg.resolved_model_dir()
    if not model_dir.is_dir():
        raise ConfigError(f"model directory not found: {model_dir}")
    model, _ = _load_model(cfg, model_dir)

    input_path = Path(args.input) if args.input else Path(cfg.out_dir) / "test.tsv"
    if not input_path.exists():
        raise ConfigError(f"input corpus not found: {input_path}")
    docs = corpus_mod.load_corpus_file(input_path)
    labels = model.predict([doc.tokens for doc in docs])

    lines = [f"{doc.doc_id}\t{label}" for doc, label in zip(docs, labels)]
    if args.predictions:
        Path(args.predictions).write_text("\n".join(lines) + "\n", encoding="utf-8")
    else:
        for line in lines:
            print(line)
    return 0


def cmd_eval(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    tax = load_hierarchy_file(require_path(cfg.taxonomy, "taxonomy"))

    if args.gold or args.predictions:
        if not (args.gold and args.predictions):
            raise ConfigError("file scoring needs both --gold and --predictions")
        gold_path, pred_path = Path(args.gold), Path(args.predictions)
        for path, what in ((gold_path, "gold"), (pred_path, "predictions")):
            if not path.exists():
                raise ConfigError(f"{what} path not found: {path}")
        with open(gold_path, encoding="utf-8") as handle:
            gold = read_label_file(handle)
        with open(pred_path, encoding="utf-8") as handle:
            predicted = read_label_file(handle)
        pairs = join_gold_predictions(gold, predicted)
        descriptor = ("external", "predictions", 0, "file")
    else:
        model_dir = Path(args.model) if args.model else cfg.resolved_model_dir()
        if not model_dir.is_dir():
            raise ConfigError(f"model directory not found: {model_dir}")
        model, manifest = _load_model(cfg, model_dir)
        test_path = Path(args.test) if args.test else Path(cfg.out_dir) / "test.tsv"
        if not test_path.exists():
            raise ConfigError(f"test corpus not found: {test_path}")
        docs = corpus_mod.load_corpus_file(test_path)
        if not docs:
            raise HtcError(f"{test_path}: no test documents")
        predicted_labels = model.predict([doc.tokens for doc in docs])
        pairs = [
            PredictionPair(doc_id=doc.doc_id, true_label=doc.label, predicted_label=str(label))
            for doc, label in zip(docs, predicted_labels)
        ]
        descriptor = (
            manifest.get("learner", cfg.learner),
            manifest.get("representation", cfg.representation),
            _representation_size(cfg, model),
            manifest.get("strategy", cfg.strategy),
        )

    report = evaluate_pairs(pairs, tax)
    for key, value in report.as_dict().items():
        if key == "n_pairs":
            print(f"{key}\t{value}")
        else:
            print(f"{key}\t{value:.6f}")

    results_file = Path(args.results) if args.results else cfg.resolved_results_file()
    results_file.parent.mkdir(parents=True, exist_ok=True)
    append_result(
        results_file,
        ResultRow.from_report(report, *descriptor),
    )
    logger.info("appended a result row to %s", results_file)
    return 0


def cmd_report(args) -> int:
    if args.results:
        results_file = Path(args.results)
    else:
        cfg = _apply_overrides(load_config(args.config), args) if args.config else None
        if cfg is None:
            raise ConfigError("report needs --results or --config")
        results_file = cfg.resolved_results_file()
    if not results_file.exists():
        raise ConfigError(f"results file not found: {results_file}")

    summary = aggregate_results(read_results(results_file))
    print(f"n_rows\t{summary['n_rows']}")
    for column, mean in summary["means"].items():
        print(f"mean\t{column}\t{mean:.6f}")
    for (a, b), value in summary["correlations"].items():
        print(f"pearson\t{a}\t{b}\t{value:.6f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="htckit",
        description="Hierarchical text classification: prepare, train, predict, eval, report.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="key=value config file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="override the output directory")

    p_prepare = sub.add_parser("prepare", help="ingest, reduce labels, and split the corpus")
    common(p_prepare)
    p_prepare.set_defaults(func=cmd_prepare)

    p_train = sub.add_parser("train", help="train a flat or lcpn-vc model")
    common(p_train)
    p_train.add_argument("--strategy", choices=("flat", "lcpn-vc"), default=None)
    p_train.add_argument(
        "--learner", choices=("softmax-linear", "joint-embedding"), default=None
    )
    p_train.set_defaults(func=cmd_train)

    p_predict = sub.add_parser("predict", help="label a corpus file with a trained model")
    common(p_predict)
    p_predict.add_argument("--model", default=None, help="model directory")
    p_predict.add_argument("--input", default=None, help="corpus file to label")
    p_predict.add_argument(
        "--predictions", default=None, help="write doc_id/label lines here (default stdout)"
    )
    p_predict.set_defaults(func=cmd_predict)

    p_eval = sub.add_parser("eval", help="score a model or a predictions file")
    common(p_eval)
    p_eval.add_argument("--model", default=None, help="model directory")
    p_eval.add_argument("--test", default=None, help="test corpus file")
    p_eval.add_argument("--gold", default=None, help="gold doc_id/label file")
    p_eval.add_argument("--predictions", default=None, help="predicted doc_id/label file")
    p_eval.add_argument("--results", default=None, help="results file to append to")
    p_eval.set_defaults(func=cmd_eval)

    p_report = sub.add_parser("report", help="aggregate a results file")
    p_report.add_argument("--config", required=False, default=None)
    p_report.add_argument("--seed", type=int, default=None)
    p_report.add_argument("--out", default=None)
    p_report.add_argument("--results", default=None, help="results file to aggregate")
    p_report.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(name)s: %(message)s"
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except HtcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:  # pragma: no cover - console script shim
    sys.exit(main())


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
