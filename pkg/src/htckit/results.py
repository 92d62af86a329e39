"""Cumulative results table: append-only TSV plus aggregate statistics."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .errors import HtcError, TooFewRows
from .metrics import MetricsReport, pearson

COLUMNS = (
    "classifier",
    "representation",
    "size",
    "strategy",
    "flat_P",
    "flat_R",
    "flat_F1",
    "h_P",
    "h_R",
    "h_F1",
    "lca_P",
    "lca_R",
    "lca_F1",
)
METRIC_COLUMNS = COLUMNS[4:]
F1_PAIRS = (("flat_F1", "h_F1"), ("flat_F1", "lca_F1"), ("h_F1", "lca_F1"))


@dataclass(frozen=True)
class ResultRow:
    classifier: str
    representation: str
    size: int
    strategy: str
    flat: tuple[float, float, float]
    hier: tuple[float, float, float]
    lca: tuple[float, float, float]

    def metric(self, column: str) -> float:
        family, _, part = column.partition("_")
        triple = {"flat": self.flat, "h": self.hier, "lca": self.lca}[family]
        return triple[("P", "R", "F1").index(part)]

    @classmethod
    def from_report(
        cls, report: MetricsReport, classifier: str, representation: str, size: int, strategy: str
    ) -> "ResultRow":
        return cls(
            classifier=classifier,
            representation=representation,
            size=size,
            strategy=strategy,
            flat=report.flat_macro,
            hier=report.hier,
            lca=report.lca,
        )


def append_result(path, row: ResultRow) -> None:
    """Append one row, creating the file with a header when needed."""
    path = Path(path)
    is_new = not path.exists()
    with open(path, "a", encoding="utf-8") as handle:
        if is_new:
            handle.write("\t".join(COLUMNS) + "\n")
        fields = [row.classifier, row.representation, str(row.size), row.strategy]
        fields += [f"{value:.6f}" for triple in (row.flat, row.hier, row.lca) for value in triple]
        handle.write("\t".join(fields) + "\n")


def read_results(path) -> list[ResultRow]:
    path = Path(path)
    rows = []
    with open(path, "r", encoding="utf-8") as handle:
        header = handle.readline().rstrip("\n").split("\t")
        if tuple(header) != COLUMNS:
            raise HtcError(f"{path}: unexpected results header {header}")
        for lineno, raw in enumerate(handle, start=2):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != len(COLUMNS):
                raise HtcError(f"{path} line {lineno}: expected {len(COLUMNS)} columns")
            values = [float(v) for v in fields[4:]]
            rows.append(
                ResultRow(
                    classifier=fields[0],
                    representation=fields[1],
                    size=int(fields[2]),
                    strategy=fields[3],
                    flat=tuple(values[0:3]),
                    hier=tuple(values[3:6]),
                    lca=tuple(values[6:9]),
                )
            )
    return rows


def aggregate_results(rows: list[ResultRow]) -> dict:
    """Column means plus pairwise Pearson correlations of the three F1s."""
    if len(rows) < 2:
        raise TooFewRows(f"aggregate report needs at least 2 rows, got {len(rows)}")
    means = {
        column: sum(row.metric(column) for row in rows) / len(rows)
        for column in METRIC_COLUMNS
    }
    correlations = {
        (a, b): pearson([row.metric(a) for row in rows], [row.metric(b) for row in rows])
        for a, b in F1_PAIRS
    }
    return {"n_rows": len(rows), "means": means, "correlations": correlations}
