"""Binarized expression-data pipeline.

Reads a numeric CSV (one header row of column names, one row per sample),
binarizes each column against its cohort mean, fits a k-spin model per
cohort, and writes ranked-hyperedge, node-frequency, and node-name-mapping
reports.  An optional class column splits the rows into cohorts that are
analyzed separately.
"""

from __future__ import annotations

import csv
import os
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError
from .learner import BicGrid, FixedLambda, LearnConfig, TheoremLambda, recover_tensor
from .optimizer import SolverConfig

__all__ = ["GenePipelineConfig", "binarize_columns", "load_expression_csv", "run_gene_pipeline"]


@dataclass(frozen=True)
class GenePipelineConfig:
    k: int = 3
    method: str = "rise"
    top_m: int = 20
    class_column: str | None = None
    lambda_rule: FixedLambda | TheoremLambda | BicGrid = field(default_factory=BicGrid)
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if self.top_m < 1:
            raise ValueError("top_m must be >= 1")


def load_expression_csv(
    path: str, class_column: str | None = None
) -> tuple[list[str], list[list[str]], list[str] | None]:
    """Read the header and raw cells; splits off the class column if named.

    Returns (gene column names, raw value rows, class labels or None).
    Numeric parsing is deferred to :func:`binarize_columns` so that
    non-numeric columns can degrade per-column instead of failing the file.
    """
    with open(path, "r", encoding="utf-8") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(path, 1, "empty file") from None
        header = [h.strip() for h in header]
        class_idx = None
        if class_column is not None:
            if class_column not in header:
                raise ValueError(f"class column {class_column!r} not found in header")
            class_idx = header.index(class_column)
        names = [h for i, h in enumerate(header) if i != class_idx]
        rows: list[list[str]] = []
        classes: list[str] | None = [] if class_idx is not None else None
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise ParseError(path, lineno, f"expected {len(header)} cells, got {len(row)}")
            if class_idx is not None:
                classes.append(row[class_idx].strip())
                row = [cell for i, cell in enumerate(row) if i != class_idx]
            rows.append([cell.strip() for cell in row])
    if not rows:
        raise ParseError(path, 2, "no data rows found")
    return names, rows, classes


def binarize_columns(names: list[str], rows: list[list[str]]) -> np.ndarray:
    """Map each column to +1 where strictly above its mean, else -1.

    Columns with non-numeric cells or zero variance are mapped to all -1
    with a warning.
    """
    n, p = len(rows), len(names)
    out = np.full((n, p), -1, dtype=np.int8)
    for j, name in enumerate(names):
        try:
            col = np.array([float(rows[i][j]) for i in range(n)])
        except ValueError:
            warnings.warn(f"column {name!r} has non-numeric cells; mapped to all -1")
            continue
        if np.all(col == col[0]):
            warnings.warn(f"column {name!r} is constant; mapped to all -1")
            continue
        out[:, j] = np.where(col > col.mean(), 1, -1)
    return out


def _sanitize(label: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_" else "_" for ch in label) or "cohort"


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def run_gene_pipeline(
    data_csv: str, out_dir: str, cfg: GenePipelineConfig | None = None
) -> dict[str, dict]:
    """Fit each cohort and write its reports into ``out_dir``.

    Per cohort ``<label>_hyperedges.csv`` holds the top_m hyperedges by
    absolute weight (signed weights kept) and
    ``<label>_node_frequency.csv`` the node occurrence counts over those
    hyperedges; ``node_mapping.csv`` records the node-id/column-name
    correspondence once.  Output bytes depend only on the inputs.
    """
    cfg = cfg or GenePipelineConfig()
    names, rows, classes = load_expression_csv(data_csv, cfg.class_column)
    os.makedirs(out_dir, exist_ok=True)

    k = cfg.k
    _write_csv(
        os.path.join(out_dir, "node_mapping.csv"),
        ["node", "gene"],
        [[j + 1, name] for j, name in enumerate(names)],
    )

    cohorts: dict[str, list[int]]
    if classes is None:
        cohorts = {"all": list(range(len(rows)))}
    else:
        cohorts = {}
        for i, label in enumerate(classes):
            cohorts.setdefault(label, []).append(i)

    learn = LearnConfig(
        method=cfg.method,
        lambda_rule=cfg.lambda_rule,
        support_threshold=0.0,
        solver=cfg.solver,
    )

    summary: dict[str, dict] = {}
    for label in sorted(cohorts):
        subset = [rows[i] for i in cohorts[label]]
        X = binarize_columns(names, subset)
        report = recover_tensor(X, k, learn)
        ranked = report.ranked_edges()[: cfg.top_m]

        tag = _sanitize(label)
        edge_rows = [
            [rank, *edge, *(names[s - 1] for s in edge), f"{w:.10g}"]
            for rank, (edge, w) in enumerate(ranked, start=1)
        ]
        node_cols = [f"node{i+1}" for i in range(k)]
        gene_cols = [f"gene{i+1}" for i in range(k)]
        edge_path = os.path.join(out_dir, f"{tag}_hyperedges.csv")
        _write_csv(edge_path, ["rank", *node_cols, *gene_cols, "weight"], edge_rows)

        freq: dict[int, int] = {}
        for edge, _ in ranked:
            for s in edge:
                freq[s] = freq.get(s, 0) + 1
        freq_rows = [
            [node, names[node - 1], count]
            for node, count in sorted(freq.items(), key=lambda kv: (-kv[1], kv[0]))
        ]
        freq_path = os.path.join(out_dir, f"{tag}_node_frequency.csv")
        _write_csv(freq_path, ["node", "gene", "frequency"], freq_rows)

        summary[label] = {
            "n_samples": len(subset),
            "hyperedges": [(edge, w) for edge, w in ranked],
            "files": [edge_path, freq_path],
        }
    return summary
