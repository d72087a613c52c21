"""Ranking and correlation analysis over per-architecture measurements.

A MetricTable holds one row per architecture and one column per named
measurement; everything downstream (Kendall correlation matrices, top-k
filtering, harmonic accuracy/calibration scores, boxplot and size-bracket
summaries) operates on such tables.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.stats import kendalltau


@dataclass
class MetricTable:
    """Rectangular table: arch_index rows, named real-valued columns."""

    arch_index: np.ndarray
    columns: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        self.arch_index = np.asarray(self.arch_index, dtype=np.int64)
        n = self.arch_index.size
        cols = {}
        for name, vals in self.columns.items():
            v = np.asarray(vals, dtype=np.float64)
            if v.shape != (n,):
                raise ValueError(f"column {name!r} has shape {v.shape}, "
                                 f"expected ({n},)")
            cols[name] = v
        self.columns = cols

    @property
    def n_rows(self) -> int:
        return self.arch_index.size

    def column(self, name: str) -> np.ndarray:
        if name not in self.columns:
            raise KeyError(f"no column {name!r}; have "
                           f"{sorted(self.columns)}")
        return self.columns[name]

    def select(self, row_idx) -> "MetricTable":
        idx = np.asarray(row_idx, dtype=np.int64)
        return MetricTable(self.arch_index[idx],
                           {k: v[idx] for k, v in self.columns.items()})


def kendall_tau(x, y) -> float:
    """Kendall tau-b rank correlation; NaN when either side is degenerate."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("inputs must be 1-D arrays of equal length")
    if x.size < 2 or np.all(x == x[0]) or np.all(y == y[0]):
        return float("nan")
    tau, _ = kendalltau(x, y, variant="b")
    return float(tau)


def correlation_matrix(table: MetricTable,
                       column_names: Optional[Sequence[str]] = None):
    """Pairwise Kendall tau-b over the chosen columns.

    Returns (names, matrix); the matrix is symmetric with unit diagonal.
    """
    names = list(column_names) if column_names is not None \
        else sorted(table.columns)
    for name in names:
        table.column(name)
    k = len(names)
    mat = np.eye(k)
    for i in range(k):
        for j in range(i + 1, k):
            t = kendall_tau(table.column(names[i]), table.column(names[j]))
            mat[i, j] = mat[j, i] = t
    return names, mat


def top_k_by(table: MetricTable, column: str, k: int,
             largest: bool = True) -> MetricTable:
    """The k best rows by a column; ties broken by ascending arch index."""
    if k < 1:
        raise ValueError("k must be positive")
    v = table.column(column)
    sign = -1.0 if largest else 1.0
    order = np.lexsort((table.arch_index, sign * v))
    return table.select(order[:min(k, table.n_rows)])


@dataclass(frozen=True)
class HcsParams:
    """Weight of the accuracy/calibration harmonic mean (beta > 0)."""

    beta: float = 1.0

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be positive")


def hcs(accuracy, ece, beta: float = 1.0):
    """Harmonic calibration score blending accuracy and 1 - ECE.

    hcs = (1 + beta) * acc * (1 - ece) / (beta * acc + (1 - ece)),
    with accuracy and ece as fractions in [0, 1].  The score is bounded by
    min-max of its two ingredients and never exceeds 1.  Larger beta shifts
    the weight toward the calibration term 1 - ece.
    """
    if not beta > 0:
        raise ValueError("beta must be positive")
    acc = np.asarray(accuracy, dtype=np.float64)
    q = 1.0 - np.asarray(ece, dtype=np.float64)
    if np.any(acc < 0) or np.any(acc > 1) or np.any(q < 0) or np.any(q > 1):
        raise ValueError("accuracy and ece must lie in [0, 1]")
    num = (1.0 + beta) * acc * q
    den = beta * acc + q
    out = np.where(den > 0.0, num / np.maximum(den, 1e-300), 0.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class BoxplotStats:
    """Five-number summary with 1.5*IQR whiskers clipped to the data."""

    n: int
    median: float
    q1: float
    q3: float
    whisker_lo: float
    whisker_hi: float
    n_outliers: int


def boxplot_stats(values) -> BoxplotStats:
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("need a non-empty 1-D array")
    q1, med, q3 = np.percentile(v, [25.0, 50.0, 75.0])
    iqr = q3 - q1
    lo_lim, hi_lim = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = v[(v >= lo_lim) & (v <= hi_lim)]
    return BoxplotStats(int(v.size), float(med), float(q1), float(q3),
                        float(inside.min()), float(inside.max()),
                        int(v.size - inside.size))


def size_brackets(sizes, edges: Sequence[float]) -> np.ndarray:
    """Assign each size to a half-open bracket [e_i, e_{i+1}).

    Returns integer bracket ids; 0 is everything below the first edge and
    len(edges) everything at or above the last.
    """
    e = np.asarray(edges, dtype=np.float64)
    if e.ndim != 1 or e.size == 0 or np.any(np.diff(e) <= 0):
        raise ValueError("edges must be strictly increasing and non-empty")
    return np.searchsorted(e, np.asarray(sizes, dtype=np.float64),
                           side="right")


def edge_preference(archs) -> np.ndarray:
    """Count operation choices per cell edge over a set of TSS archs.

    Returns a (6, 5) count matrix indexed by (edge position, op index in
    the canonical op order).
    """
    from .archspace import TSS_OPS, TssArch
    counts = np.zeros((6, len(TSS_OPS)), dtype=np.int64)
    op_idx = {op: i for i, op in enumerate(TSS_OPS)}
    for a in archs:
        if not isinstance(a, TssArch):
            raise TypeError("edge_preference expects TssArch values")
        for e, op in enumerate(a.ops):
            counts[e, op_idx[op]] += 1
    return counts


def write_table_csv(table: MetricTable, path) -> None:
    names = sorted(table.columns)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["arch_index"] + names)
        for i in range(table.n_rows):
            w.writerow([int(table.arch_index[i])] +
                       [repr(float(table.columns[c][i])) for c in names])


def write_matrix_csv(names: Sequence[str], matrix: np.ndarray, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["metric"] + list(names))
        for i, name in enumerate(names):
            w.writerow([name] + [repr(float(x)) for x in matrix[i]])
