"""Independent brute-force re-implementations of the hierarchical measures.

Everything here works straight off a child->parent map built from raw
edges, materializing full root chains per label, so it shares no code
with the package implementations it cross-checks.
"""

from __future__ import annotations

import numpy as np


def parent_map(edges) -> dict[str, str]:
    return {child: parent for parent, child in edges}


def find_root(edges) -> str:
    parents = {p for p, _ in edges}
    children = {c for _, c in edges}
    (root,) = parents - children
    return root


def chain_to_root(parents: dict[str, str], node: str) -> list[str]:
    """[node, parent(node), ..., root]."""
    out = [node]
    while out[-1] in parents:
        out.append(parents[out[-1]])
    return out


def oracle_hier(pairs, edges):
    parents = parent_map(edges)
    root = find_root(edges)
    overlap = true_total = pred_total = 0
    for _, true_label, pred_label in pairs:
        anc_true = set(chain_to_root(parents, true_label)) - {root}
        anc_pred = set(chain_to_root(parents, pred_label)) - {root}
        overlap += len(anc_true & anc_pred)
        true_total += len(anc_true)
        pred_total += len(anc_pred)
    precision = overlap / pred_total if pred_total else 0.0
    recall = overlap / true_total if true_total else 0.0
    f = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f


def oracle_lca(pairs, edges):
    parents = parent_map(edges)
    root = find_root(edges)
    overlap = true_total = pred_total = 0
    for _, true_label, pred_label in pairs:
        true_chain = chain_to_root(parents, true_label)
        pred_set = set(chain_to_root(parents, pred_label))
        meet = next(node for node in true_chain if node in pred_set)
        true_aug = set(true_chain[: true_chain.index(meet) + 1]) - {root}
        pred_chain = chain_to_root(parents, pred_label)
        pred_aug = set(pred_chain[: pred_chain.index(meet) + 1]) - {root}
        overlap += len(true_aug & pred_aug)
        true_total += len(true_aug)
        pred_total += len(pred_aug)
    precision = overlap / pred_total if pred_total else 0.0
    recall = overlap / true_total if true_total else 0.0
    f = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f


def oracle_lca_node(edges, a: str, b: str) -> str:
    """Deepest node on both full root chains (checked by set intersection)."""
    parents = parent_map(edges)
    chain_a = chain_to_root(parents, a)
    chain_b = set(chain_to_root(parents, b))
    common = [node for node in chain_a if node in chain_b]
    return common[0]


def random_tree(rng: np.random.Generator, n_nodes: int, max_depth: int):
    """Random rooted tree as an edge list; node labels n000, n001, ..."""
    labels = [f"n{i:03d}" for i in range(n_nodes)]
    depth = {labels[0]: 0}
    edges = []
    for label in labels[1:]:
        candidates = [n for n, d in depth.items() if d < max_depth]
        parent = candidates[int(rng.integers(len(candidates)))]
        edges.append((parent, label))
        depth[label] = depth[parent] + 1
    return edges


def random_pairs(rng: np.random.Generator, edges, n_pairs: int):
    root = find_root(edges)
    nodes = sorted({c for _, c in edges} | {p for p, _ in edges} - {root})
    nodes = [n for n in nodes if n != root]
    picks = rng.integers(len(nodes), size=(n_pairs, 2))
    return [
        (f"doc{i}", nodes[int(a)], nodes[int(b)]) for i, (a, b) in enumerate(picks)
    ]
