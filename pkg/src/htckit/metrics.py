"""Flat, hierarchical, and LCA-based evaluation measures.

All measures operate on single-label prediction pairs. The hierarchical
measures augment each label with its self-inclusive, root-exclusive
ancestor set:

    hP = sum_i |Anc_i & pAnc_i| / sum_i |pAnc_i|
    hR = sum_i |Anc_i & pAnc_i| / sum_i |Anc_i|

The LCA measures instead augment true and predicted labels only up to
their lowest common ancestor: with l = lca(true, pred), the augmented
sets are the node paths true..l and pred..l (inclusive, root removed).
Both families are pooled over pairs (the sums run over pairs before the
division). Any ratio with a zero denominator evaluates to 0.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import EmptyInput, LengthMismatch, UnknownLabel, ZeroVariance
from .taxonomy import Taxonomy

Triple = tuple[float, float, float]


@dataclass(frozen=True)
class PredictionPair:
    """One scored document: gold label vs. predicted label."""

    doc_id: str
    true_label: str
    predicted_label: str


@dataclass(frozen=True)
class MetricsReport:
    """All nine measures for one evaluation run, plus the pair count."""

    flat_macro: Triple
    flat_micro: Triple
    hier: Triple
    lca: Triple
    n_pairs: int

    def as_dict(self) -> dict[str, float]:
        out: dict[str, float] = {}
        for prefix, triple in (
            ("flat_macro", self.flat_macro),
            ("flat_micro", self.flat_micro),
            ("h", self.hier),
            ("lca", self.lca),
        ):
            for name, value in zip(("P", "R", "F1"), triple):
                out[f"{prefix}_{name}"] = value
        out["n_pairs"] = self.n_pairs
        return out


def f1(precision: float, recall: float) -> float:
    """Harmonic mean of precision and recall; 0 when both are 0."""
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def _ratio(numerator: float, denominator: float) -> float:
    return numerator / denominator if denominator else 0.0


def flat_scores(
    pairs: Sequence[PredictionPair],
    class_set: Iterable[str],
    averaging: str = "macro",
    macro_f1_mode: str = "pr-harmonic",
) -> Triple:
    """Flat precision/recall/F1 over prediction pairs.

    Parameters
    ----------
    pairs
        Non-empty sequence of prediction pairs.
    class_set
        Admissible labels. Every label in ``pairs`` must belong to it.
    averaging
        ``"macro"``: unweighted mean of per-class P and R over the classes
        with at least one true or predicted occurrence; a per-class ratio
        with zero denominator counts as 0. ``"micro"``: pooled contingency
        counts.
    macro_f1_mode
        How the macro F1 is formed: ``"pr-harmonic"`` (harmonic mean of
        the macro-averaged P and R, the default) or ``"f1-mean"`` (mean of
        per-class F1 values).
    """
    if not pairs:
        raise EmptyInput("no prediction pairs")
    classes = set(class_set)
    if averaging not in ("macro", "micro"):
        raise ValueError(f"averaging must be 'macro' or 'micro', got {averaging!r}")
    if macro_f1_mode not in ("pr-harmonic", "f1-mean"):
        raise ValueError(f"unknown macro_f1_mode {macro_f1_mode!r}")

    true_counts: Counter[str] = Counter()
    pred_counts: Counter[str] = Counter()
    hit_counts: Counter[str] = Counter()
    for pair in pairs:
        for label in (pair.true_label, pair.predicted_label):
            if label not in classes:
                raise UnknownLabel(f"label {label!r} not in the class set")
        true_counts[pair.true_label] += 1
        pred_counts[pair.predicted_label] += 1
        if pair.true_label == pair.predicted_label:
            hit_counts[pair.true_label] += 1

    if averaging == "micro":
        correct = sum(hit_counts.values())
        precision = _ratio(correct, sum(pred_counts.values()))
        recall = _ratio(correct, sum(true_counts.values()))
        return precision, recall, f1(precision, recall)

    observed = sorted(set(true_counts) | set(pred_counts))
    per_p = [_ratio(hit_counts[c], pred_counts[c]) for c in observed]
    per_r = [_ratio(hit_counts[c], true_counts[c]) for c in observed]
    macro_p = sum(per_p) / len(observed)
    macro_r = sum(per_r) / len(observed)
    if macro_f1_mode == "pr-harmonic":
        macro_f = f1(macro_p, macro_r)
    else:
        macro_f = sum(f1(p, r) for p, r in zip(per_p, per_r)) / len(observed)
    return macro_p, macro_r, macro_f


def _check_pair_labels(pairs: Sequence[PredictionPair], tax: Taxonomy) -> None:
    if not pairs:
        raise EmptyInput("no prediction pairs")
    for pair in pairs:
        for label in (pair.true_label, pair.predicted_label):
            if label not in tax:
                raise UnknownLabel(f"label {label!r} not in the taxonomy")
            if label == tax.root:
                raise UnknownLabel("the root is not a valid document label")


def hier_scores(pairs: Sequence[PredictionPair], tax: Taxonomy) -> Triple:
    """Hierarchical P/R/F1 over pooled ancestor-set overlaps."""
    _check_pair_labels(pairs, tax)
    overlap_sum = 0
    true_sum = 0
    pred_sum = 0
    for pair in pairs:
        anc_true = tax.ancestors(pair.true_label).members
        anc_pred = tax.ancestors(pair.predicted_label).members
        overlap_sum += len(anc_true & anc_pred)
        true_sum += len(anc_true)
        pred_sum += len(anc_pred)
    precision = _ratio(overlap_sum, pred_sum)
    recall = _ratio(overlap_sum, true_sum)
    return precision, recall, f1(precision, recall)


def lca_scores(pairs: Sequence[PredictionPair], tax: Taxonomy) -> Triple:
    """LCA-based P/R/F1 over pooled path-to-LCA overlaps."""
    _check_pair_labels(pairs, tax)
    overlap_sum = 0
    true_sum = 0
    pred_sum = 0
    for pair in pairs:
        meet = tax.lca(pair.true_label, pair.predicted_label)
        true_aug = set(tax.path_up(pair.true_label, meet)) - {tax.root}
        pred_aug = set(tax.path_up(pair.predicted_label, meet)) - {tax.root}
        overlap_sum += len(true_aug & pred_aug)
        true_sum += len(true_aug)
        pred_sum += len(pred_aug)
    precision = _ratio(overlap_sum, pred_sum)
    recall = _ratio(overlap_sum, true_sum)
    return precision, recall, f1(precision, recall)


def evaluate_pairs(
    pairs: Sequence[PredictionPair],
    tax: Taxonomy,
    class_set: Iterable[str] | None = None,
    macro_f1_mode: str = "pr-harmonic",
) -> MetricsReport:
    """Compute the full report: flat macro/micro, hierarchical, and LCA."""
    if class_set is None:
        class_set = tax.nodes - {tax.root}
    classes = set(class_set)
    return MetricsReport(
        flat_macro=flat_scores(pairs, classes, "macro", macro_f1_mode),
        flat_micro=flat_scores(pairs, classes, "micro"),
        hier=hier_scores(pairs, tax),
        lca=lca_scores(pairs, tax),
        n_pairs=len(pairs),
    )


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Sample Pearson correlation coefficient, clipped to [-1, 1].

    Raises
    ------
    LengthMismatch
        Different lengths, or fewer than two observations.
    ZeroVariance
        Either sequence is constant.
    """
    if len(xs) != len(ys):
        raise LengthMismatch(f"lengths differ: {len(xs)} vs {len(ys)}")
    if len(xs) < 2:
        raise LengthMismatch("need at least two observations")
    n = len(xs)
    mean_x = sum(xs) / n
    mean_y = sum(ys) / n
    var_x = sum((x - mean_x) ** 2 for x in xs)
    var_y = sum((y - mean_y) ** 2 for y in ys)
    if var_x == 0.0 or var_y == 0.0:
        raise ZeroVariance("correlation undefined for a constant sequence")
    cov = sum((x - mean_x) * (y - mean_y) for x, y in zip(xs, ys))
    return max(-1.0, min(1.0, cov / math.sqrt(var_x * var_y)))


# -- pair file I/O ------------------------------------------------------------

def read_label_file(lines: Iterable[str]) -> dict[str, str]:
    """Parse ``doc_id<TAB>label`` lines into a mapping.

    Blank lines are ignored. A repeated doc_id keeps the last entry.
    """
    out: dict[str, str] = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 2:
            raise LengthMismatch(
                f"label file line {lineno}: expected 'doc_id<TAB>label', got {line!r}"
            )
        out[fields[0]] = fields[1]
    return out


def join_gold_predictions(
    gold: dict[str, str], predicted: dict[str, str]
) -> list[PredictionPair]:
    """Join gold and predicted label maps on doc_id.

    Every gold doc_id must be present in the predictions; extra predicted
    ids are an error too, so silent misalignment cannot happen.
    """
    missing = sorted(set(gold) - set(predicted))
    if missing:
        raise EmptyInput(f"doc ids without predictions: {missing[:10]}")
    extra = sorted(set(predicted) - set(gold))
    if extra:
        raise EmptyInput(f"predicted doc ids without gold labels: {extra[:10]}")
    return [
        PredictionPair(doc_id=doc_id, true_label=gold[doc_id], predicted_label=predicted[doc_id])
        for doc_id in sorted(gold)
    ]
