"""Feature-label correlation ranking and matrix comparison.

Each feature column is correlated with the class label (Pearson; against a
binary label this is the point-biserial coefficient). Zero-variance columns
have no defined coefficient and are reported as such rather than as 0.0 --
"carries no signal" and "uncorrelated" are different statements.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import AnalysisError, SchemaMismatch, SingleClassMatrix
from .features import FEATURE_NAMES, RESULT_COLUMN

_IGNORED_COLUMNS = {"", "index", "id", "sample_id"}


@dataclass
class FeatureMatrix:
    feature_names: list[str]
    rows: np.ndarray    # shape (n_samples, n_features), values in {-1, 0, 1}
    labels: np.ndarray  # shape (n_samples,), values in {-1, 1}

    @property
    def n_samples(self) -> int:
        return int(self.rows.shape[0])


@dataclass
class CorrelationReport:
    coefficients: dict          # feature name -> float or None (undefined)
    ranking: list[str]          # all features, strongest |coefficient| first

    def ranked(self) -> list[tuple[str, float | None]]:
        return [(name, self.coefficients[name]) for name in self.ranking]


@dataclass
class ComparisonRow:
    feature: str
    coefficient_a: float | None
    coefficient_b: float | None
    difference: float | None


def load_matrix_csv(path) -> FeatureMatrix:
    """Read a UCI-schema CSV: feature columns plus a Result label column.

    Index-ish columns (id, index, unnamed) are ignored. Every feature value
    must be -1/0/1 and every label -1/1; anything else is a hard error with the
    offending row number.
    """
    with open(path, newline="", encoding="utf-8-sig") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise AnalysisError(f"{path}: empty file") from None
        keep: list[int] = []
        names: list[str] = []
        label_idx = None
        for idx, name in enumerate(header):
            stripped = name.strip()
            if stripped == RESULT_COLUMN:
                label_idx = idx
            elif stripped.lower() in _IGNORED_COLUMNS:
                continue
            else:
                keep.append(idx)
                names.append(stripped)
        if label_idx is None:
            raise AnalysisError(f"{path}: no {RESULT_COLUMN} column")
        if not names:
            raise AnalysisError(f"{path}: no feature columns")
        rows: list[list[int]] = []
        labels: list[int] = []
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                values = [int(row[i]) for i in keep]
                label = int(row[label_idx])
            except (ValueError, IndexError) as err:
                raise AnalysisError(f"{path}:{line_no}: bad row: {err}") from None
            bad = [v for v in values if v not in (-1, 0, 1)]
            if bad:
                raise AnalysisError(f"{path}:{line_no}: non-ternary value {bad[0]}")
            if label not in (-1, 1):
                raise AnalysisError(f"{path}:{line_no}: bad label {label}")
            rows.append(values)
            labels.append(label)
    if not rows:
        raise AnalysisError(f"{path}: no data rows")
    return FeatureMatrix(
        feature_names=names,
        rows=np.array(rows, dtype=np.float64),
        labels=np.array(labels, dtype=np.float64),
    )


def pearson(x, y) -> float | None:
    """Pearson correlation, or None when either side has zero variance."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    dx = x - x.mean()
    dy = y - y.mean()
    sx = float(np.sqrt(np.dot(dx, dx)))
    sy = float(np.sqrt(np.dot(dy, dy)))
    if sx == 0.0 or sy == 0.0:
        return None
    return float(np.dot(dx, dy) / (sx * sy))


def correlation_with_label(matrix: FeatureMatrix) -> CorrelationReport:
    """Correlate every feature with the label and rank by |coefficient|.

    Ties break lexicographically by feature name; undefined coefficients sort
    after everything defined, alphabetically.
    """
    if matrix.n_samples < 2:
        raise AnalysisError("need at least two samples to correlate")
    if len(set(matrix.labels.tolist())) < 2:
        raise SingleClassMatrix("all labels identical; correlation undefined")
    coefficients = {
        name: pearson(matrix.rows[:, i], matrix.labels)
        for i, name in enumerate(matrix.feature_names)
    }
    ranking = sorted(
        coefficients,
        key=lambda n: (coefficients[n] is None,
                       -abs(coefficients[n]) if coefficients[n] is not None else 0.0,
                       n),
    )
    return CorrelationReport(coefficients=coefficients, ranking=ranking)


def top_k_report(report: CorrelationReport, k: int) -> list[tuple[str, float | None]]:
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return report.ranked()[:k]


def compare_matrices(matrix_a: FeatureMatrix, matrix_b: FeatureMatrix) -> list[ComparisonRow]:
    """Side-by-side coefficients for two datasets sharing one schema."""
    if set(matrix_a.feature_names) != set(matrix_b.feature_names):
        only_a = sorted(set(matrix_a.feature_names) - set(matrix_b.feature_names))
        only_b = sorted(set(matrix_b.feature_names) - set(matrix_a.feature_names))
        raise SchemaMismatch(f"feature sets differ: only_a={only_a} only_b={only_b}")
    report_a = correlation_with_label(matrix_a)
    report_b = correlation_with_label(matrix_b)
    rows = []
    for name in matrix_a.feature_names:
        a = report_a.coefficients[name]
        b = report_b.coefficients[name]
        diff = (a - b) if a is not None and b is not None else None
        rows.append(ComparisonRow(name, a, b, diff))
    return rows


# renderings -----------------------------------------------------------------


def report_to_csv(report: CorrelationReport, path):
    """rank,feature,coefficient with undefined coefficients as empty cells."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["rank", "feature", "coefficient"])
        for rank, (name, coefficient) in enumerate(report.ranked(), start=1):
            writer.writerow([rank, name, _fmt(coefficient)])


def report_to_json(report: CorrelationReport, path, dataset: str = "collected"):
    """A horizontal-bar-friendly series, strongest first, nulls for undefined."""
    series = [
        {"feature": name, "coefficient": coefficient}
        for name, coefficient in report.ranked()
    ]
    payload = {"dataset": dataset, "label": RESULT_COLUMN, "series": series}
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def comparison_to_csv(rows: list[ComparisonRow], path, name_a: str = "a", name_b: str = "b"):
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["feature", f"coefficient_{name_a}", f"coefficient_{name_b}", "difference"])
        for row in rows:
            writer.writerow([
                row.feature, _fmt(row.coefficient_a), _fmt(row.coefficient_b),
                _fmt(row.difference),
            ])


def report_table(report: CorrelationReport, k: int | None = None) -> str:
    entries = report.ranked() if k is None else top_k_report(report, k)
    width = max(len(name) for name, _ in entries)
    lines = [f"{'rank':>4}  {'feature':<{width}}  coefficient"]
    for rank, (name, coefficient) in enumerate(entries, start=1):
        shown = "undefined" if coefficient is None else f"{coefficient:+.4f}"
        lines.append(f"{rank:>4}  {name:<{width}}  {shown}")
    return "\n".join(lines) + "\n"


def comparison_table(rows: list[ComparisonRow], name_a: str = "a", name_b: str = "b") -> str:
    width = max(len(r.feature) for r in rows) if rows else 7
    lines = [f"{'feature':<{width}}  {name_a:>10}  {name_b:>10}  {'diff':>10}"]
    for row in rows:
        lines.append(
            f"{row.feature:<{width}}  {_cell(row.coefficient_a):>10}  "
            f"{_cell(row.coefficient_b):>10}  {_cell(row.difference):>10}"
        )
    return "\n".join(lines) + "\n"


def _fmt(value: float | None) -> str:
    return "" if value is None else f"{value:.10f}"


def _cell(value: float | None) -> str:
    return "undef" if value is None else f"{value:+.4f}"
