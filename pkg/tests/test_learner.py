import io

import numpy as np
import pytest

from htckit.errors import DimensionMismatch, EmptyInput, SingleClassDegenerate
from htckit.features import average_doc_vector, load_embeddings, save_embeddings
from htckit.learner import (
    JointEmbeddingClassifier,
    SoftmaxLinearClassifier,
    extract_embeddings,
    fnv1a64,
    joint_example_grads,
    linear_example_grads,
    softmax,
)

H = 1e-5
MAX_REL_ERR = 1e-4


def rel_err(analytic, numeric):
    denom = np.maximum(np.abs(analytic) + np.abs(numeric), 1e-8)
    return float(np.max(np.abs(analytic - numeric) / denom))


def separable_dense(n=100, n_classes=2, seed=0):
    rng = np.random.default_rng(seed)
    X = np.zeros((n, n_classes))
    y = []
    for i in range(n):
        c = int(rng.integers(n_classes))
        X[i, c] = 1.0
        y.append(f"class{c}")
    return X, np.array(y)


def separable_docs(n=200, seed=0):
    rng = np.random.default_rng(seed)
    vocab_a = ["alpha", "beta", "gamma", "delta"]
    vocab_b = ["omega", "psi", "chi", "phi"]
    docs, labels = [], []
    for _ in range(n):
        if rng.random() < 0.5:
            docs.append(list(rng.choice(vocab_a, size=5)))
            labels.append("A")
        else:
            docs.append(list(rng.choice(vocab_b, size=5)))
            labels.append("B")
    return docs, np.array(labels)


class TestHashAndSoftmax:
    def test_fnv1a64_reference_values(self):
        # published FNV-1a 64 test vectors
        assert fnv1a64("") == 0xCBF29CE484222325
        assert fnv1a64("a") == 0xAF63DC4C8601EC8C
        assert fnv1a64("foobar") == 0x85944171F73967E8

    def test_softmax_rows_sum_to_one(self):
        rng = np.random.default_rng(1)
        scores = rng.standard_normal((50, 7)) * 10
        probs = softmax(scores)
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-12)
        assert np.all(probs >= 0)

    def test_softmax_of_zeros_uniform(self):
        np.testing.assert_allclose(softmax(np.zeros(4)), 0.25)


class TestSoftmaxLinear:
    def test_separable_training_accuracy(self):
        X, y = separable_dense()
        clf = SoftmaxLinearClassifier(seed=1).fit(X, y)
        assert (clf.predict(X) == y).mean() == 1.0

    def test_probabilities_sum_to_one(self):
        X, y = separable_dense()
        clf = SoftmaxLinearClassifier(seed=1).fit(X, y)
        rng = np.random.default_rng(2)
        inputs = rng.standard_normal((1000, X.shape[1]))
        probs = clf.predict_proba(inputs)
        assert np.all(probs >= 0)
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-6)

    def test_zero_parameter_model_uniform(self):
        clf = SoftmaxLinearClassifier()
        clf.classes_ = np.array(["a", "b", "c"])
        clf.weights_ = np.zeros((3, 4))
        clf.bias_ = np.zeros(3)
        clf.n_features_ = 4
        np.testing.assert_allclose(clf.predict_proba(np.ones((2, 4))), 1 / 3)
        assert list(clf.predict(np.ones((2, 4)))) == ["a", "a"]

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(3)
        weights = rng.standard_normal((3, 4)) * 0.5
        bias = rng.standard_normal(3) * 0.1
        x = rng.standard_normal(4)
        target = 1

        def loss_at(w, b):
            scores = w @ x + b
            shifted = scores - scores.max()
            return float(np.log(np.exp(shifted).sum()) - shifted[target])

        _, grad_w, grad_b = linear_example_grads(weights, bias, x, target)
        num_w = np.zeros_like(weights)
        for i in range(weights.shape[0]):
            for j in range(weights.shape[1]):
                up, down = weights.copy(), weights.copy()
                up[i, j] += H
                down[i, j] -= H
                num_w[i, j] = (loss_at(up, bias) - loss_at(down, bias)) / (2 * H)
        num_b = np.zeros_like(bias)
        for i in range(bias.size):
            up, down = bias.copy(), bias.copy()
            up[i] += H
            down[i] -= H
            num_b[i] = (loss_at(weights, up) - loss_at(weights, down)) / (2 * H)

        assert rel_err(grad_w, num_w) < MAX_REL_ERR
        assert rel_err(grad_b, num_b) < MAX_REL_ERR

    def test_one_sgd_step_applies_example_gradient(self):
        X = np.array([[0.5, -1.0, 2.0]])
        y = np.array(["a"])
        clf = SoftmaxLinearClassifier(learning_rate=0.1, epochs=1, seed=0)
        clf.fit(np.vstack([X, -X]), np.array(["a", "b"]))
        # replay the two updates by hand, same shuffling
        rng = np.random.default_rng(0)
        order = rng.permutation(2)
        weights = np.zeros((2, 3))
        bias = np.zeros(2)
        rows = np.vstack([X, -X])
        targets = [0, 1]
        total = 2
        for step, i in enumerate(order):
            lr = 0.1 * (1 - step / total)
            _, grad_w, grad_b = linear_example_grads(weights, bias, rows[i], targets[i])
            weights = weights - lr * grad_w
            bias = bias - lr * grad_b
        np.testing.assert_array_equal(clf.weights_, weights)
        np.testing.assert_array_equal(clf.bias_, bias)

    def test_epoch_losses_decrease_on_separable_data(self):
        X, y = separable_dense()
        clf = SoftmaxLinearClassifier(seed=4).fit(X, y)
        losses = clf.epoch_losses_
        assert losses[0] > losses[1] > losses[2]

    def test_bitwise_determinism(self):
        X, y = separable_dense(seed=6)
        a = SoftmaxLinearClassifier(seed=9).fit(X, y)
        b = SoftmaxLinearClassifier(seed=9).fit(X, y)
        assert np.array_equal(a.weights_, b.weights_)
        assert np.array_equal(a.bias_, b.bias_)

    def test_sparse_and_dense_agree(self):
        X, y = separable_dense(seed=8)
        sparse = [
            {j: value for j, value in enumerate(row) if value != 0.0} for row in X
        ]
        dense_clf = SoftmaxLinearClassifier(seed=2).fit(X, y)
        sparse_clf = SoftmaxLinearClassifier(seed=2, n_features=X.shape[1]).fit(sparse, y)
        assert np.array_equal(dense_clf.weights_, sparse_clf.weights_)

    def test_feature_scaling_leaves_argmax_unchanged(self):
        rng = np.random.default_rng(12)
        weights = rng.standard_normal((5, 8))
        bias = rng.standard_normal(5)
        clf = SoftmaxLinearClassifier()
        clf.classes_ = np.array([f"c{i}" for i in range(5)])
        clf.n_features_ = 8
        inputs = rng.standard_normal((200, 8))
        for scale in (0.5, 2.0, 4.0, 3.7):
            clf.weights_, clf.bias_ = weights, bias
            base = clf.predict(inputs)
            clf.weights_ = weights / scale
            scaled = clf.predict(inputs * scale)
            assert list(base) == list(scaled)

    def test_single_class_degenerate(self):
        X = np.ones((4, 2))
        with pytest.warns(SingleClassDegenerate):
            clf = SoftmaxLinearClassifier(seed=0).fit(X, np.array(["only"] * 4))
        assert list(clf.predict(X)) == ["only"] * 4

    def test_errors(self):
        with pytest.raises(EmptyInput):
            SoftmaxLinearClassifier().fit(np.zeros((0, 2)), np.array([]))
        with pytest.raises(DimensionMismatch):
            SoftmaxLinearClassifier().fit(np.zeros((2, 2)), np.array(["a"]))
        with pytest.raises(DimensionMismatch):
            SoftmaxLinearClassifier(n_features=2).fit([{5: 1.0}], np.array(["a"]))
        clf = SoftmaxLinearClassifier(seed=0).fit(*separable_dense())
        with pytest.raises(DimensionMismatch):
            clf.predict_proba(np.ones((2, 9)))


class TestJointEmbedding:
    def test_separable_training_accuracy(self):
        docs, labels = separable_docs()
        clf = JointEmbeddingClassifier(dim=10, bigram_buckets=256, seed=5).fit(docs, labels)
        assert (clf.predict(docs) == labels).mean() == 1.0

    def test_bigrams_capture_order(self):
        doc_a = ["red", "fish", "blue", "sky"]
        doc_b = ["sky", "red", "blue", "fish"]  # same multiset, different order
        base = dict(dim=6, epochs=1, seed=3)
        docs = [doc_a, doc_b]
        labels = np.array(["x", "y"])
        no_bigrams = JointEmbeddingClassifier(bigram_buckets=0, **base).fit(docs, labels)
        np.testing.assert_array_equal(no_bigrams._hidden(doc_a), no_bigrams._hidden(doc_b))
        with_bigrams = JointEmbeddingClassifier(bigram_buckets=512, **base).fit(docs, labels)
        assert not np.array_equal(with_bigrams._hidden(doc_a), with_bigrams._hidden(doc_b))

    def test_bucket_ids_in_range(self):
        docs, labels = separable_docs(n=60)
        clf = JointEmbeddingClassifier(dim=4, bigram_buckets=32, epochs=1, seed=0)
        clf.fit(docs, labels)
        vocab_size = len(clf.vocab_)
        for tokens in docs:
            ids = clf._doc_feature_ids(tokens)
            bigram_ids = ids[ids >= vocab_size]
            assert np.all(bigram_ids < vocab_size + 32)
            unigram_ids = ids[ids < vocab_size]
            assert np.all(unigram_ids >= 0)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(7)
        input_emb = rng.standard_normal((5, 4)) * 0.3  # 3 vocab rows + 2 buckets
        output_w = rng.standard_normal((2, 4)) * 0.3
        ids = np.array([0, 2, 2, 4])  # includes a repeated id
        target = 1

        def loss_at(emb, out):
            hidden = emb[ids].mean(axis=0)
            scores = out @ hidden
            shifted = scores - scores.max()
            return float(np.log(np.exp(shifted).sum()) - shifted[target])

        _, grad_in, grad_out = joint_example_grads(input_emb, output_w, ids, target)

        num_in = np.zeros_like(input_emb)
        for i in range(input_emb.shape[0]):
            for j in range(input_emb.shape[1]):
                up, down = input_emb.copy(), input_emb.copy()
                up[i, j] += H
                down[i, j] -= H
                num_in[i, j] = (loss_at(up, output_w) - loss_at(down, output_w)) / (2 * H)
        num_out = np.zeros_like(output_w)
        for i in range(output_w.shape[0]):
            for j in range(output_w.shape[1]):
                up, down = output_w.copy(), output_w.copy()
                up[i, j] += H
                down[i, j] -= H
                num_out[i, j] = (loss_at(input_emb, up) - loss_at(input_emb, down)) / (2 * H)

        assert rel_err(grad_in, num_in) < MAX_REL_ERR
        assert rel_err(grad_out, num_out) < MAX_REL_ERR

    def test_epoch_losses_decrease(self):
        docs, labels = separable_docs()
        clf = JointEmbeddingClassifier(dim=8, bigram_buckets=128, seed=2).fit(docs, labels)
        losses = clf.epoch_losses_
        assert losses[0] > losses[1] > losses[2]

    def test_bitwise_determinism(self):
        docs, labels = separable_docs(seed=4)
        a = JointEmbeddingClassifier(dim=6, bigram_buckets=64, seed=11).fit(docs, labels)
        b = JointEmbeddingClassifier(dim=6, bigram_buckets=64, seed=11).fit(docs, labels)
        assert np.array_equal(a.input_embeddings_, b.input_embeddings_)
        assert np.array_equal(a.output_weights_, b.output_weights_)

    def test_empty_documents_skipped_and_counted(self):
        docs = [["alpha"], [], ["beta"], []]
        labels = np.array(["A", "A", "B", "B"])
        clf = JointEmbeddingClassifier(dim=4, bigram_buckets=0, seed=0).fit(docs, labels)
        assert clf.n_skipped_ == 2

    def test_all_empty_raises(self):
        with pytest.raises(EmptyInput):
            JointEmbeddingClassifier(dim=4, seed=0).fit([[], []], np.array(["A", "B"]))

    def test_oov_document_scores_uniform(self):
        docs, labels = separable_docs(n=50)
        clf = JointEmbeddingClassifier(dim=6, bigram_buckets=0, seed=1).fit(docs, labels)
        probs = clf.predict_proba([["totally", "unknown", "tokens"]])
        np.testing.assert_allclose(probs[0], 0.5, atol=1e-12)

    def test_min_token_count_filters_vocabulary(self):
        docs = [["common", "common", "rare"], ["common"]]
        labels = np.array(["A", "B"])
        clf = JointEmbeddingClassifier(dim=4, min_token_count=2, bigram_buckets=0, seed=0)
        clf.fit(docs, labels)
        assert clf.vocab_ == ["common"]

    def test_initialization_bounds(self):
        docs, labels = separable_docs(n=40)
        clf = JointEmbeddingClassifier(dim=10, bigram_buckets=16, epochs=0, seed=0)
        clf.epochs = 1
        clf.fit(docs, labels)
        # after one epoch most bucket rows were never touched; all rows finite
        assert np.all(np.isfinite(clf.input_embeddings_))


class TestExtractEmbeddings:
    def test_shape_contract(self):
        docs, labels = separable_docs(n=80)
        clf = JointEmbeddingClassifier(dim=30, bigram_buckets=32, seed=0).fit(docs, labels)
        table = extract_embeddings(clf)
        assert table.dimension == 30
        assert set(table.vectors) == set(clf.vocab_)

    def test_export_round_trip_identical(self, tmp_path):
        docs, labels = separable_docs(n=60)
        clf = JointEmbeddingClassifier(dim=7, bigram_buckets=16, seed=3).fit(docs, labels)
        table = extract_embeddings(clf)
        path = tmp_path / "sup_vectors.txt"
        save_embeddings(path, table)
        with open(path, encoding="utf-8") as handle:
            again = load_embeddings(handle)
        for token in table.vectors:
            np.testing.assert_array_equal(again.vectors[token], table.vectors[token])

    def test_exported_embeddings_feed_linear_pipeline(self):
        docs, labels = separable_docs(n=150, seed=9)
        joint = JointEmbeddingClassifier(dim=12, bigram_buckets=64, seed=1).fit(docs, labels)
        table = extract_embeddings(joint)
        X = np.stack([average_doc_vector(tokens, table) for tokens in docs])
        linear = SoftmaxLinearClassifier(seed=0).fit(X, labels)
        assert (linear.predict(X) == labels).mean() == 1.0
