"""Fixed-length feature vectors from per-path decompositions.

Per path the first ``m`` greedy terms are re-ordered by ascending delay
(arrival order is geometrically meaningful; greedy order is not stable across
nearby damage positions) and flattened to [tau, alpha] or [tau, beta...]
blocks.  A train-fitted standardizer handles the scale gap between delays in
microseconds and order-one coefficients.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .sampm import SampmDecomposition
from .sacmpm import SacmpmDecomposition

__all__ = [
    "FeatureSchema",
    "FeatureVector",
    "extract",
    "Standardizer",
    "fit_standardizer",
    "standardize",
    "write_features_csv",
    "read_features_csv",
    "write_schema_json",
    "write_targets_csv",
    "read_targets_csv",
]


@dataclass
class FeatureSchema:
    method: str
    m_terms: int
    n_paths: int
    n_funcs: int | None = None  # SACMPM basis size
    ordering: str = "tau_ascending"

    def __post_init__(self):
        if self.method not in ("sampm", "sacmpm"):
            raise ValueError("method must be 'sampm' or 'sacmpm'")
        if self.method == "sacmpm" and not self.n_funcs:
            raise ValueError("sacmpm schema needs n_funcs")

    @property
    def values_per_term(self) -> int:
        return 2 if self.method == "sampm" else self.n_funcs + 1

    @property
    def length(self) -> int:
        return self.n_paths * self.m_terms * self.values_per_term

    def column_names(self):
        cols = []
        for p in range(self.n_paths):
            for t in range(self.m_terms):
                cols.append(f"p{p}_t{t}_tau_s")
                if self.method == "sampm":
                    cols.append(f"p{p}_t{t}_alpha")
                else:
                    cols.extend(f"p{p}_t{t}_beta{i}" for i in range(self.n_funcs))
        return cols

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "m_terms": self.m_terms,
            "n_paths": self.n_paths,
            "n_funcs": self.n_funcs,
            "ordering": self.ordering,
            "length": self.length,
            "columns": self.column_names(),
        }


@dataclass
class FeatureVector:
    values: np.ndarray
    schema: FeatureSchema

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.size != self.schema.length:
            raise ValueError(
                f"feature vector has {values.size} values, schema expects {self.schema.length}"
            )
        self.values = values


def extract(decompositions, method: str, m: int) -> FeatureVector:
    """Concatenate per-path term blocks into one feature vector.

    Every decomposition must carry at least ``m`` terms; otherwise the pursuit
    has to be re-run with tol_pct = 0 and max_terms >= m.
    """
    if method not in ("sampm", "sacmpm"):
        raise ValueError("method must be 'sampm' or 'sacmpm'")
    decompositions = list(decompositions)
    if not decompositions:
        raise ValueError("need at least one decomposition")
    n_funcs = None
    expected = SampmDecomposition if method == "sampm" else SacmpmDecomposition
    for dec in decompositions:
        if not isinstance(dec, expected):
            raise ValueError(f"decomposition type does not match method {method!r}")
        if dec.n_terms < m:
            raise ValueError(
                f"decomposition has only {dec.n_terms} terms, need {m}; "
                "re-run the pursuit with tol_pct=0 and max_terms >= m"
            )
    if method == "sacmpm":
        n_funcs = decompositions[0].basis.n_funcs
    schema = FeatureSchema(method, m, len(decompositions), n_funcs)
    blocks = []
    for dec in decompositions:
        terms = sorted(dec.terms[:m], key=lambda t: t.tau_s)
        for term in terms:
            if method == "sampm":
                blocks.append([term.tau_s, term.alpha])
            else:
                blocks.append(np.concatenate([[term.tau_s], term.beta]))
    return FeatureVector(np.concatenate(blocks), schema)


@dataclass
class Standardizer:
    """Per-column affine map fitted on training rows.

    Zero-variance columns are mapped to zero for any input.
    """

    mean: np.ndarray
    std: np.ndarray
    zero_variance: np.ndarray

    def apply(self, matrix: np.ndarray) -> np.ndarray:
        matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        out = (matrix - self.mean) / self.std
        out[:, self.zero_variance] = 0.0
        return out

    def invert(self, matrix: np.ndarray) -> np.ndarray:
        matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        return matrix * self.std + self.mean


def fit_standardizer(train_matrix: np.ndarray) -> Standardizer:
    train_matrix = np.atleast_2d(np.asarray(train_matrix, dtype=float))
    mean = train_matrix.mean(axis=0)
    std = train_matrix.std(axis=0)
    zero = std == 0.0
    std = np.where(zero, 1.0, std)
    return Standardizer(mean, std, zero)


def standardize(train_matrix: np.ndarray):
    """Fit on the training matrix and return (transform, transformed train)."""
    transform = fit_standardizer(train_matrix)
    return transform, transform.apply(train_matrix)


def write_features_csv(path, labels, matrix: np.ndarray, schema: FeatureSchema) -> None:
    matrix = np.atleast_2d(matrix)
    if matrix.shape[0] != len(labels):
        raise ValueError("one label per feature row required")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label"] + schema.column_names())
        for label, row in zip(labels, matrix):
            writer.writerow([label] + [repr(float(v)) for v in row])


def read_features_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[0] != "label":
            raise ValueError(f"{path}: expected a 'label' first column")
        labels, rows = [], []
        for row in reader:
            if not row:
                continue
            labels.append(row[0])
            rows.append([float(v) for v in row[1:]])
    matrix = np.asarray(rows, dtype=float)
    if matrix.ndim == 2 and matrix.shape[1] != len(header) - 1:
        raise ValueError(f"{path}: ragged feature rows")
    return labels, matrix


def write_schema_json(path, schema: FeatureSchema) -> None:
    with open(path, "w") as fh:
        json.dump(schema.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_targets_csv(path, labels, targets: np.ndarray) -> None:
    targets = np.atleast_2d(targets)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label", "x_m", "y_m"])
        for label, (x, y) in zip(labels, targets):
            writer.writerow([label, repr(float(x)), repr(float(y))])


def read_targets_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["label", "x_m", "y_m"]:
            raise ValueError(f"{path}: expected header label,x_m,y_m")
        labels, rows = [], []
        for row in reader:
            if not row:
                continue
            labels.append(row[0])
            rows.append([float(row[1]), float(row[2])])
    return labels, np.asarray(rows, dtype=float)
