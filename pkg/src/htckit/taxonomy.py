"""Class hierarchy handling: loading, validation, and tree queries.

The taxonomy is a rooted tree of opaque string labels. All queries needed
downstream (ancestor sets, lowest common ancestors, subtrees, internal
nodes) live here. A :class:`Taxonomy` is immutable after construction, so
instances are safe to share between threads and processes.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Iterator

from .errors import (
    CycleDetected,
    EmptyInput,
    HtcError,
    MultipleParents,
    MultipleRoots,
    UnknownNode,
)

Edge = tuple[str, str]


@dataclass(frozen=True)
class AncestorSet:
    """A node plus all of its proper ancestors, with the root excluded.

    ``len(members) == depth(node)`` always holds; for the root itself the
    set is empty.
    """

    node: str
    members: frozenset[str]

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, label: str) -> bool:
        return label in self.members

    def __iter__(self) -> Iterator[str]:
        return iter(self.members)


class Taxonomy:
    """Validated rooted tree of class labels.

    Use :func:`load_taxonomy` or :func:`read_hierarchy_file` to build one;
    the constructor assumes already-consistent maps.

    Attributes
    ----------
    root : str
        The unique label that never appears as a child.
    nodes : frozenset[str]
        All labels, root included.
    """

    def __init__(self, root: str, parent_of: dict[str, str]):
        self.root = root
        self._parent_of = dict(parent_of)
        self.nodes = frozenset(parent_of) | {root}

        children: dict[str, list[str]] = {n: [] for n in self.nodes}
        for child, parent in parent_of.items():
            children[parent].append(child)
        # Sorted child lists give deterministic iteration everywhere.
        self._children_of = {n: tuple(sorted(cs)) for n, cs in children.items()}

        self._depth_of: dict[str, int] = {root: 0}
        queue = deque([root])
        while queue:
            node = queue.popleft()
            for child in self._children_of[node]:
                self._depth_of[child] = self._depth_of[node] + 1
                queue.append(child)

    # -- basic queries ------------------------------------------------------

    def __contains__(self, label: str) -> bool:
        return label in self.nodes

    def __len__(self) -> int:
        return len(self.nodes)

    def _require(self, label: str) -> None:
        if label not in self.nodes:
            raise UnknownNode(f"label {label!r} is not a taxonomy node")

    def parent(self, node: str) -> str | None:
        """Parent label, or None for the root."""
        self._require(node)
        return self._parent_of.get(node)

    def children(self, node: str) -> tuple[str, ...]:
        """Children of ``node`` in lexicographic order."""
        self._require(node)
        return self._children_of[node]

    def depth(self, node: str) -> int:
        """Edge distance from the root (root is 0)."""
        self._require(node)
        return self._depth_of[node]

    def is_internal(self, node: str) -> bool:
        self._require(node)
        return bool(self._children_of[node])

    # -- structural queries ---------------------------------------------------

    def ancestors(self, node: str) -> AncestorSet:
        """Self-inclusive, root-exclusive ancestor set of ``node``.

        This is the augmentation used by the hierarchical precision/recall
        measures: the node itself plus every proper ancestor, except the
        root. For the root the set is empty.
        """
        self._require(node)
        members = []
        current: str | None = node
        while current is not None and current != self.root:
            members.append(current)
            current = self._parent_of.get(current)
        return AncestorSet(node=node, members=frozenset(members))

    def lca(self, a: str, b: str) -> str:
        """Lowest common ancestor of ``a`` and ``b`` (ancestor-or-self).

        May be the root when the two labels sit in different top-level
        branches.
        """
        self._require(a)
        self._require(b)
        da, db = self._depth_of[a], self._depth_of[b]
        while da > db:
            a = self._parent_of[a]
            da -= 1
        while db > da:
            b = self._parent_of[b]
            db -= 1
        while a != b:
            a = self._parent_of[a]
            b = self._parent_of[b]
        return a

    def path_up(self, node: str, stop: str) -> list[str]:
        """Nodes on the path from ``node`` up to ``stop``, both inclusive.

        ``stop`` must be an ancestor-or-self of ``node``.
        """
        self._require(node)
        self._require(stop)
        path = [node]
        current = node
        while current != stop:
            if current == self.root:
                raise UnknownNode(
                    f"{stop!r} is not an ancestor-or-self of {path[0]!r}"
                )
            current = self._parent_of[current]
            path.append(current)
        return path

    def subtree(self, node: str) -> frozenset[str]:
        """``node`` plus all of its descendants."""
        self._require(node)
        seen = {node}
        queue = deque([node])
        while queue:
            for child in self._children_of[queue.popleft()]:
                seen.add(child)
                queue.append(child)
        return frozenset(seen)

    def internal_nodes(self) -> list[str]:
        """All nodes with at least one child: root first, rest lexicographic."""
        rest = sorted(
            n for n in self.nodes if self._children_of[n] and n != self.root
        )
        return [self.root] + rest

    def edges(self) -> list[Edge]:
        """All (parent, child) edges, ordered parent-major lexicographically."""
        return sorted((p, c) for c, p in self._parent_of.items())

    def __repr__(self) -> str:  # pragma: no cover
        return (
            f"Taxonomy(root={self.root!r}, nodes={len(self.nodes)}, "
            f"internal={len(self.internal_nodes())})"
        )


def load_taxonomy(edge_source: Iterable[Edge]) -> Taxonomy:
    """Build and validate a :class:`Taxonomy` from (parent, child) pairs.

    The root is inferred as the unique label that never appears as a
    child. Duplicate identical edges collapse; the result depends only on
    the edge multiset, not its order.

    Raises
    ------
    EmptyInput
        No edges given.
    MultipleParents
        Some child is listed under two or more distinct parents.
    MultipleRoots
        More than one label never appears as a child.
    CycleDetected
        The edges contain a cycle (equivalently: no root exists, or some
        nodes are unreachable from the root).
    """
    edges = list(edge_source)
    if not edges:
        raise EmptyInput("no hierarchy edges given")

    for parent, child in edges:
        for label in (parent, child):
            if not label or any(ch.isspace() for ch in label):
                raise HtcError(
                    f"bad label {label!r}: labels must be non-empty and "
                    "whitespace-free"
                )

    parent_of: dict[str, str] = {}
    conflicts: dict[str, set[str]] = {}
    for parent, child in edges:
        prior = parent_of.get(child)
        if prior is not None and prior != parent:
            conflicts.setdefault(child, {prior}).add(parent)
        parent_of[child] = parent
    if conflicts:
        detail = "; ".join(
            f"{child} <- {sorted(parents)}" for child, parents in sorted(conflicts.items())
        )
        raise MultipleParents(f"labels with multiple parents: {detail}")

    all_labels = set(parent_of) | set(parent_of.values())
    roots = sorted(all_labels - set(parent_of))
    if not roots:
        raise CycleDetected(
            f"no root label exists; the edges form a cycle among {sorted(all_labels)}"
        )
    if len(roots) > 1:
        raise MultipleRoots(f"multiple root candidates: {roots}")

    taxonomy = Taxonomy(roots[0], parent_of)
    unreachable = sorted(all_labels - set(taxonomy._depth_of))
    if unreachable:
        raise CycleDetected(f"labels unreachable from the root (cycle): {unreachable}")
    return taxonomy


def read_hierarchy_file(lines: Iterable[str]) -> Taxonomy:
    """Parse the plain hierarchy format: one ``parent child`` pair per line.

    Any whitespace separates the two labels, ``#`` starts a comment line,
    and blank lines are ignored.
    """
    edges: list[Edge] = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) != 2:
            raise HtcError(
                f"hierarchy line {lineno}: expected 'parent child', got {line!r}"
            )
        edges.append((fields[0], fields[1]))
    return load_taxonomy(edges)


def load_hierarchy_file(path) -> Taxonomy:
    """Read a hierarchy file from ``path`` (UTF-8 text)."""
    with open(path, "r", encoding="utf-8") as handle:
        return read_hierarchy_file(handle)
