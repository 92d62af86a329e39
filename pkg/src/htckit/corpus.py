"""Corpus ingestion, label reduction, and train/test + per-node splits.

Raw documents arrive either as RCV1-style XML (one document per file) or
as the plain tab-separated corpus format ``label<TAB>doc_id<TAB>text``.
Multi-label documents are reduced to a single label by keeping the code
that is least frequent corpus-wide. The "hierarchical split" then builds
one local dataset per internal taxonomy node, relabelling each document
with the child whose subtree contains its label, and adding a virtual
category (VC) for documents labeled with the parent node itself.
"""

from __future__ import annotations

import re
import xml.etree.ElementTree as ET
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    BadFraction,
    EmptyDataset,
    EmptyInput,
    HtcError,
    MalformedXml,
    NoTopicCodes,
    UnknownLabel,
)
from .taxonomy import Taxonomy

TOPIC_CODE_CLASS = "bip:topics:1.0"
VC_PREFIX = "VC:"

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)
_XML_DECL_RE = re.compile(r"^\s*<\?xml[^>]*\?>")


@dataclass(frozen=True)
class RawDocument:
    """A document as ingested: raw text plus its full topic-code set."""

    doc_id: str
    text: str
    topic_codes: frozenset[str]


@dataclass(frozen=True)
class LabeledDocument:
    """A normalized, single-labeled document."""

    doc_id: str
    tokens: tuple[str, ...]
    label: str

    @property
    def text(self) -> str:
        return " ".join(self.tokens)


@dataclass(frozen=True)
class CorpusSplit:
    """Disjoint train/test partition produced by :func:`holdout_split`."""

    train: tuple[LabeledDocument, ...]
    test: tuple[LabeledDocument, ...]
    seed: int


@dataclass
class LocalDataset:
    """Training subset for one internal node of the taxonomy.

    ``examples`` pairs each document with its local label: a child of
    ``parent``, or the reserved virtual-category label for documents whose
    original label is ``parent`` itself. The root dataset never has a
    virtual category.
    """

    parent: str
    examples: list[tuple[LabeledDocument, str]] = field(default_factory=list)
    vc_label: str | None = None

    def local_labels(self) -> list[str]:
        """Distinct local labels with at least one example, in class order."""
        present = {label for _, label in self.examples}
        ordered = sorted(present - {self.vc_label} if self.vc_label else present)
        if self.vc_label in present:
            ordered.append(self.vc_label)
        return ordered


def vc_label_for(parent: str) -> str:
    """Reserved virtual-category label for ``parent`` (namespaced to avoid
    collisions with real taxonomy nodes)."""
    return VC_PREFIX + parent


def normalize(text: str) -> list[str]:
    """Lowercase and split on every non-alphanumeric character.

    >>> normalize("Tylan stock jumps; weighs sale.")
    ['tylan', 'stock', 'jumps', 'weighs', 'sale']
    """
    return _TOKEN_RE.findall(text.lower())


def ingest_rcv1_xml(xml_text: str, doc_id: str | None = None) -> RawDocument:
    """Extract text and topic codes from one RCV1-style XML document.

    The text is the headline followed by the paragraph contents, joined
    with single spaces. Topic codes come from the ``<codes>`` group whose
    ``class`` attribute is ``bip:topics:1.0``; all other code groups are
    ignored. ``doc_id`` defaults to the root element's ``itemid``
    attribute when present.
    """
    # ElementTree refuses str input carrying an encoding declaration; the
    # caller is responsible for transcoding, so the declaration is stale.
    cleaned = _XML_DECL_RE.sub("", xml_text, count=1)
    try:
        root = ET.fromstring(cleaned)
    except ET.ParseError as exc:
        raise MalformedXml(f"unparseable document XML: {exc}") from exc

    headline_el = root.find("headline")
    text_el = root.find("text")
    if headline_el is None or text_el is None:
        missing = "headline" if headline_el is None else "text"
        raise MalformedXml(f"document XML lacks a <{missing}> section")

    parts = []
    if headline_el.text and headline_el.text.strip():
        parts.append(headline_el.text.strip())
    for paragraph in text_el:
        if paragraph.text and paragraph.text.strip():
            parts.append(paragraph.text.strip())

    codes: set[str] = set()
    metadata = root.find("metadata")
    if metadata is None:
        raise MalformedXml("document XML lacks a <metadata> section")
    for group in metadata.iter("codes"):
        if group.get("class") != TOPIC_CODE_CLASS:
            continue
        for code_el in group.iter("code"):
            code = code_el.get("code")
            if code:
                codes.add(code)
    if not codes:
        raise NoTopicCodes("document has no topic codes")

    resolved_id = doc_id if doc_id is not None else (root.get("itemid") or "")
    return RawDocument(doc_id=resolved_id, text=" ".join(parts), topic_codes=frozenset(codes))


def reduce_to_single_label(
    docs: Sequence[RawDocument], tax: Taxonomy | None = None
) -> list[LabeledDocument]:
    """Keep, per document, its least frequent topic code.

    Code frequencies are counted over the raw code occurrences of all
    input documents (before any reduction); ties break to the
    lexicographically smallest code. When ``tax`` is given, every code
    must be a non-root taxonomy node.
    """
    if tax is not None:
        for doc in docs:
            for code in doc.topic_codes:
                if code not in tax:
                    raise UnknownLabel(
                        f"doc {doc.doc_id!r}: topic code {code!r} not in the taxonomy"
                    )
                if code == tax.root:
                    raise UnknownLabel(
                        f"doc {doc.doc_id!r}: the root is not a valid topic code"
                    )

    frequency: Counter[str] = Counter()
    for doc in docs:
        frequency.update(doc.topic_codes)

    reduced = []
    for doc in docs:
        label = min(doc.topic_codes, key=lambda code: (frequency[code], code))
        reduced.append(
            LabeledDocument(doc_id=doc.doc_id, tokens=tuple(normalize(doc.text)), label=label)
        )
    return reduced


def holdout_split(
    docs: Sequence[LabeledDocument], fraction: float, seed: int
) -> CorpusSplit:
    """Reserve a uniform random fraction of ``docs`` for testing.

    The test size is ``round(fraction * len(docs))``. Selection uses a
    PCG64 generator (``numpy.random.default_rng``) seeded with ``seed``,
    so the split is bit-reproducible across platforms. Both partitions
    keep the input document order.
    """
    if not 0.0 < fraction < 1.0:
        raise BadFraction(f"holdout fraction must be in (0, 1), got {fraction}")
    if len(docs) < 2:
        raise EmptyInput("holdout split needs at least two documents")

    n = len(docs)
    n_test = int(round(fraction * n))
    rng = np.random.default_rng(seed)
    test_indices = set(rng.choice(n, size=n_test, replace=False).tolist())
    train = tuple(doc for i, doc in enumerate(docs) if i not in test_indices)
    test = tuple(doc for i, doc in enumerate(docs) if i in test_indices)
    return CorpusSplit(train=train, test=test, seed=seed)


def hierarchical_split(
    train: Sequence[LabeledDocument], tax: Taxonomy
) -> list[LocalDataset]:
    """Build one :class:`LocalDataset` per internal taxonomy node.

    A document labeled ``x`` joins the dataset of every internal node on
    the path from the root down to ``x``: under ancestor ``P`` it carries
    the child of ``P`` that leads toward ``x``, and under ``x`` itself
    (when ``x`` is internal) it carries the virtual category. The root
    dataset therefore contains every training document and no VC
    examples.
    """
    datasets = {
        node: LocalDataset(
            parent=node,
            vc_label=None if node == tax.root else vc_label_for(node),
        )
        for node in tax.internal_nodes()
    }

    for doc in train:
        if doc.label not in tax:
            raise UnknownLabel(f"doc {doc.doc_id!r}: label {doc.label!r} not in the taxonomy")
        if doc.label == tax.root:
            raise UnknownLabel(f"doc {doc.doc_id!r}: the root is not a valid label")
        if doc.label in datasets:
            datasets[doc.label].examples.append((doc, datasets[doc.label].vc_label))
        child = doc.label
        parent = tax.parent(child)
        while parent is not None:
            datasets[parent].examples.append((doc, child))
            child = parent
            parent = tax.parent(child)

    return [datasets[node] for node in tax.internal_nodes()]


def local_dataset_stats(ds: LocalDataset) -> tuple[int, int, float]:
    """(example count, distinct local labels, max/min label-count ratio)."""
    if not ds.examples:
        raise EmptyDataset(f"local dataset for {ds.parent!r} has no examples")
    counts = Counter(label for _, label in ds.examples)
    largest = max(counts.values())
    smallest = min(counts.values())
    return len(ds.examples), len(counts), largest / smallest


# -- plain corpus file I/O -----------------------------------------------------

def read_corpus_file(lines: Iterable[str]) -> list[LabeledDocument]:
    """Parse ``label<TAB>doc_id<TAB>text`` lines; text is re-normalized."""
    docs = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            continue
        fields = line.split("\t", 2)
        if len(fields) != 3:
            raise HtcError(
                f"corpus line {lineno}: expected 'label<TAB>doc_id<TAB>text', got {line!r}"
            )
        label, doc_id, text = fields
        docs.append(
            LabeledDocument(doc_id=doc_id, tokens=tuple(normalize(text)), label=label)
        )
    return docs


def load_corpus_file(path) -> list[LabeledDocument]:
    with open(path, "r", encoding="utf-8") as handle:
        return read_corpus_file(handle)


def write_corpus_file(path, docs: Iterable[LabeledDocument]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for doc in docs:
            handle.write(f"{doc.label}\t{doc.doc_id}\t{doc.text}\n")


def write_local_dataset(path, ds: LocalDataset) -> None:
    """Write a local dataset in corpus format, labels replaced by local ones."""
    with open(path, "w", encoding="utf-8") as handle:
        for doc, local_label in ds.examples:
            handle.write(f"{local_label}\t{doc.doc_id}\t{doc.text}\n")
