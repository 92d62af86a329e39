"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines as
they pass. Every tolerance is pinned here; nothing is deferred to later
calibration.
"""

import time

import numpy as np
import pytest

from htckit.cli import main
from htckit.corpus import hierarchical_split, holdout_split, vc_label_for
from htckit.learner import (
    JointEmbeddingClassifier,
    joint_example_grads,
    linear_example_grads,
)
from htckit.metrics import PredictionPair, hier_scores, lca_scores
from htckit.persistence import load_base_estimator, save_base_estimator
from htckit.results import aggregate_results, read_results
from htckit.strategy import FlatClassifier, TopDownClassifier
from htckit.taxonomy import load_taxonomy

import synthdata
from oracle_metrics import oracle_hier, oracle_lca, random_pairs, random_tree

EXACT = 1e-9
GRAD_H = 1e-5
GRAD_MAX_REL_ERR = 1e-4


def _pairs(raw):
    return [PredictionPair(d, t, p) for d, t, p in raw]


def _corpus_and_split(seed=7):
    tax = synthdata.make_taxonomy()
    docs = synthdata.make_corpus(n_docs=5000, internal_fraction=0.1, seed=seed)
    split = holdout_split(docs, 0.1, seed=13)
    return tax, split


def _lca_f1_of(model, tax, split):
    predicted = model.predict([d.tokens for d in split.test])
    pairs = [
        PredictionPair(d.doc_id, d.label, str(p)) for d, p in zip(split.test, predicted)
    ]
    return lca_scores(pairs, tax)[2]


def test_criterion_1_metric_oracle_equivalence():
    started = time.perf_counter()
    rng = np.random.default_rng(1234)
    for tree_index in range(20):
        n_nodes = int(rng.integers(5, 31))
        edges = random_tree(rng, n_nodes=n_nodes, max_depth=4)
        tax = load_taxonomy(edges)
        raw = random_pairs(rng, edges, 1000)
        pairs = _pairs(raw)
        ours_h = hier_scores(pairs, tax)
        ours_l = lca_scores(pairs, tax)
        ref_h = oracle_hier(raw, edges)
        ref_l = oracle_lca(raw, edges)
        for ours, ref in ((ours_h, ref_h), (ours_l, ref_l)):
            for a, b in zip(ours, ref):
                assert abs(a - b) <= EXACT, (tree_index, ours, ref)
    elapsed = time.perf_counter() - started
    assert elapsed < 10.0
    print(
        f"[acceptance] criterion 1 PASS: 20 random trees x 1000 pairs match the "
        f"brute-force oracle exactly ({elapsed:.2f}s)"
    )


def test_criterion_2_hand_computed_fixtures(excerpt_tax):
    sibling = _pairs([("d", "E131", "E132")])
    assert hier_scores(sibling, excerpt_tax) == (2 / 3, 2 / 3, 2 / 3)
    assert lca_scores(sibling, excerpt_tax) == (0.5, 0.5, 0.5)

    cross = _pairs([("d", "C11", "E11")])
    assert hier_scores(cross, excerpt_tax) == (0.0, 0.0, 0.0)
    assert lca_scores(cross, excerpt_tax) == (0.0, 0.0, 0.0)

    exact = _pairs([("d", "C1511", "C1511")])
    assert hier_scores(exact, excerpt_tax) == (1.0, 1.0, 1.0)
    assert lca_scores(exact, excerpt_tax) == (1.0, 1.0, 1.0)
    print(
        "[acceptance] criterion 2 PASS: sibling case hF1=2/3 and lcaF1=1/2, "
        "cross-branch 0, exact match 1 (exact equality)"
    )


def test_criterion_3_benchmark_aggregate_reproduction(data_dir, capsys):
    started = time.perf_counter()
    rows = read_results(data_dir / "benchmark_results.tsv")
    summary = aggregate_results(rows)
    elapsed = time.perf_counter() - started
    assert summary["n_rows"] == 16
    assert summary["means"]["flat_F1"] == pytest.approx(0.533, abs=0.001)
    assert summary["means"]["lca_F1"] == pytest.approx(0.823, abs=0.001)
    assert summary["correlations"][("flat_F1", "lca_F1")] == pytest.approx(0.756, abs=0.005)
    assert summary["correlations"][("h_F1", "lca_F1")] == pytest.approx(0.923, abs=0.005)
    assert elapsed < 1.0

    # the report command reproduces the same numbers end to end
    assert main(["report", "--results", str(data_dir / "benchmark_results.tsv")]) == 0
    out = capsys.readouterr().out
    assert "mean\tflat_F1\t0.53" in out
    assert "mean\tlca_F1\t0.82" in out
    with capsys.disabled():
        print(
            f"\n[acceptance] criterion 3 PASS: 16-row fixture gives mean flat F1 "
            f"{summary['means']['flat_F1']:.4f} (0.533±0.001), mean lcaF1 "
            f"{summary['means']['lca_F1']:.4f} (0.823±0.001), r(flat,lca)="
            f"{summary['correlations'][('flat_F1', 'lca_F1')]:.4f} (0.756±0.005), "
            f"r(h,lca)={summary['correlations'][('h_F1', 'lca_F1')]:.4f} (0.923±0.005) "
            f"in {elapsed * 1000:.0f} ms"
        )


def test_criterion_4_gradient_checks():
    started = time.perf_counter()
    rng = np.random.default_rng(99)

    def central(diff_fn, params):
        numeric = np.zeros_like(params)
        it = np.nditer(params, flags=["multi_index"])
        while not it.finished:
            idx = it.multi_index
            up, down = params.copy(), params.copy()
            up[idx] += GRAD_H
            down[idx] -= GRAD_H
            numeric[idx] = (diff_fn(up) - diff_fn(down)) / (2 * GRAD_H)
            it.iternext()
        return numeric

    def max_rel_err(analytic, numeric):
        denom = np.maximum(np.abs(analytic) + np.abs(numeric), 1e-8)
        return float(np.max(np.abs(analytic - numeric) / denom))

    # linear learner: 3 classes x 4 features (+3 bias) = 15 parameters
    weights = rng.standard_normal((3, 4)) * 0.4
    bias = rng.standard_normal(3) * 0.2
    x = rng.standard_normal(4)
    target = 2
    _, grad_w, grad_b = linear_example_grads(weights, bias, x, target)

    def linear_loss_w(w):
        return linear_example_grads(w, bias, x, target)[0]

    def linear_loss_b(b):
        return linear_example_grads(weights, b, x, target)[0]

    err_w = max_rel_err(grad_w, central(linear_loss_w, weights))
    err_b = max_rel_err(grad_b, central(linear_loss_b, bias))

    # joint learner: (3 vocab + 2 bucket) x 4 embeddings + 2 x 4 outputs = 28
    input_emb = rng.standard_normal((5, 4)) * 0.3
    output_w = rng.standard_normal((2, 4)) * 0.3
    ids = np.array([0, 1, 1, 4])
    _, grad_in, grad_out = joint_example_grads(input_emb, output_w, ids, 0)

    def joint_loss_in(emb):
        return joint_example_grads(emb, output_w, ids, 0)[0]

    def joint_loss_out(out):
        return joint_example_grads(input_emb, out, ids, 0)[0]

    err_in = max_rel_err(grad_in, central(joint_loss_in, input_emb))
    err_out = max_rel_err(grad_out, central(joint_loss_out, output_w))

    elapsed = time.perf_counter() - started
    for err in (err_w, err_b, err_in, err_out):
        assert err < GRAD_MAX_REL_ERR
    assert elapsed < 5.0
    print(
        f"[acceptance] criterion 4 PASS: finite-difference gradient checks, max "
        f"relative errors linear={max(err_w, err_b):.2e}, joint={max(err_in, err_out):.2e} "
        f"({elapsed:.2f}s)"
    )


def test_criterion_5_end_to_end_synthetic_experiment():
    started = time.perf_counter()
    tax, split = _corpus_and_split()
    X = [d.tokens for d in split.train]
    y = [d.label for d in split.train]

    def base():
        return JointEmbeddingClassifier(
            dim=30, learning_rate=0.1, epochs=5, bigram_buckets=4096, seed=3
        )

    flat = FlatClassifier(base(), taxonomy=tax).fit(X, y)
    flat_lca_f1 = _lca_f1_of(flat, tax, split)

    lcpn = TopDownClassifier(base(), taxonomy=tax, seed=3).fit(X, y)
    lcpn_lca_f1 = _lca_f1_of(lcpn, tax, split)

    elapsed = time.perf_counter() - started
    assert flat_lca_f1 >= 0.95
    assert lcpn_lca_f1 >= flat_lca_f1 - 0.005
    assert elapsed < 120.0
    print(
        f"[acceptance] criterion 5 PASS: held-out lcaF1 flat={flat_lca_f1:.4f} "
        f"(>=0.95), lcpn-vc={lcpn_lca_f1:.4f} (>= flat-0.005) ({elapsed:.1f}s)"
    )


def test_criterion_6_dimension_sweep_trend():
    tax, split = _corpus_and_split()
    X = [d.tokens for d in split.train]
    y = [d.label for d in split.train]
    scores = []
    for dim in (5, 10, 20, 30):
        model = FlatClassifier(
            JointEmbeddingClassifier(
                dim=dim, learning_rate=0.1, epochs=5, bigram_buckets=4096, seed=3
            ),
            taxonomy=tax,
        ).fit(X, y)
        scores.append(_lca_f1_of(model, tax, split))
    for smaller, larger in zip(scores, scores[1:]):
        assert larger >= smaller - 0.005
    print(
        "[acceptance] criterion 6 PASS: lcaF1 over dims 5/10/20/30 = "
        + ", ".join(f"{s:.4f}" for s in scores)
        + " (non-decreasing within 0.005)"
    )


def test_criterion_7_pipeline_invariants(tmp_path):
    started = time.perf_counter()
    tax = synthdata.make_taxonomy()
    docs = synthdata.make_corpus(n_docs=800, internal_fraction=0.1, seed=17)

    # holdout determinism and partitioning
    split_a = holdout_split(docs, 0.1, seed=5)
    split_b = holdout_split(docs, 0.1, seed=5)
    assert [d.doc_id for d in split_a.test] == [d.doc_id for d in split_b.test]
    assert len(split_a.test) == round(0.1 * len(docs))
    assert {d.doc_id for d in split_a.train} | {d.doc_id for d in split_a.test} == {
        d.doc_id for d in docs
    }

    # hierarchical split conservation and VC placement
    datasets = hierarchical_split(list(split_a.train), tax)
    assert len(datasets) == len(tax.internal_nodes())
    by_parent = {ds.parent: ds for ds in datasets}
    for node in tax.internal_nodes():
        in_subtree = sum(1 for d in split_a.train if d.label in tax.subtree(node))
        assert len(by_parent[node].examples) == in_subtree
        for doc, local_label in by_parent[node].examples:
            if local_label.startswith("VC:"):
                assert doc.label == node and local_label == vc_label_for(node)
            else:
                assert doc.label in tax.subtree(local_label)
    assert by_parent[tax.root].vc_label is None
    assert len(by_parent[tax.root].examples) == len(split_a.train)

    # one local model per internal node
    base = JointEmbeddingClassifier(dim=8, bigram_buckets=256, epochs=3, seed=0)
    model = TopDownClassifier(base, tax, seed=0).fit_local_datasets(datasets)
    assert len(model.local_models_) == len(tax.internal_nodes())

    # persistence round-trip byte identity
    trained = model.local_models_[tax.root]
    save_base_estimator(tmp_path / "one", trained)
    reloaded = load_base_estimator(tmp_path / "one")
    save_base_estimator(tmp_path / "two", reloaded)
    assert (tmp_path / "one.blob").read_bytes() == (tmp_path / "two.blob").read_bytes()
    assert (
        (tmp_path / "one.manifest").read_bytes() == (tmp_path / "two.manifest").read_bytes()
    )

    elapsed = time.perf_counter() - started
    assert elapsed < 10.0
    print(
        f"[acceptance] criterion 7 PASS: split conservation, VC placement, one "
        f"model per internal node, holdout determinism, persistence byte identity "
        f"({elapsed:.2f}s)"
    )
