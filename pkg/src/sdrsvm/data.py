"""CSV ingestion and per-feature standardization."""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DataError

__all__ = [
    "Standardizer",
    "Dataset",
    "read_csv",
    "map_labels",
    "load_csv",
    "two_gaussians",
    "write_csv",
    "ConstantColumnWarning",
]


class ConstantColumnWarning(UserWarning):
    """A feature column had zero variance and was dropped."""


@dataclass
class Standardizer:
    """Column selection followed by ``(x - mean) / scale``.

    ``columns`` indexes the raw feature columns that survived loading;
    constant columns are absent from it.
    """

    columns: np.ndarray
    mean: np.ndarray
    scale: np.ndarray
    names: list = field(default_factory=list)
    n_raw: int = 0

    @classmethod
    def fit(cls, X, names=None):
        X = np.asarray(X, dtype=float)
        n_raw = X.shape[1]
        names = list(names) if names is not None else [f"x{j}" for j in range(n_raw)]
        std = X.std(axis=0)
        keep = np.flatnonzero(std > 0)
        for j in np.flatnonzero(std == 0):
            warnings.warn(f"feature column {names[j]!r} is constant and was dropped",
                          ConstantColumnWarning, stacklevel=3)
        return cls(columns=keep, mean=X.mean(axis=0)[keep], scale=std[keep],
                   names=[names[j] for j in keep], n_raw=n_raw)

    @classmethod
    def identity(cls, n_features):
        return cls(np.arange(n_features), np.zeros(n_features), np.ones(n_features),
                   [f"x{j}" for j in range(n_features)], n_features)

    def transform(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        if X.shape[1] != self.n_raw:
            raise DataError(f"expected {self.n_raw} raw feature columns, got {X.shape[1]}")
        return (X[:, self.columns] - self.mean) / self.scale

    def to_dict(self):
        return {
            "n_raw": int(self.n_raw),
            "columns": [int(j) for j in self.columns],
            "names": list(self.names),
            "mean": [float(v) for v in self.mean],
            "scale": [float(v) for v in self.scale],
        }

    @classmethod
    def from_dict(cls, obj):
        return cls(
            columns=np.asarray(obj["columns"], dtype=np.int64),
            mean=np.asarray(obj["mean"], dtype=float),
            scale=np.asarray(obj["scale"], dtype=float),
            names=list(obj["names"]),
            n_raw=int(obj["n_raw"]),
        )


@dataclass
class Dataset:
    """Features ``X`` (after standardization), labels ``y`` in {+1, -1}."""

    X: np.ndarray
    y: np.ndarray
    feature_names: list = field(default_factory=list)
    standardizer: Standardizer | None = None
    label_tokens: tuple = ("1", "-1")

    def __post_init__(self):
        self.X = np.ascontiguousarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=float).ravel()
        if self.X.ndim != 2 or self.X.shape[0] != self.y.size:
            raise DataError(f"{self.X.shape[0]} feature rows but {self.y.size} labels")

    @property
    def n(self):
        return self.y.size

    def subset(self, idx):
        return Dataset(self.X[idx], self.y[idx], self.feature_names, self.standardizer,
                       self.label_tokens)

    def with_labels(self, y):
        return Dataset(self.X, y, self.feature_names, self.standardizer, self.label_tokens)


def _is_number(tok):
    try:
        return math.isfinite(float(tok))
    except ValueError:
        return False


def read_csv(path, label_column=-1):
    """Parse a comma-separated file into raw features and label tokens.

    A first row whose feature cells are not all numeric is taken as the
    header. ``label_column=None`` reads every column as a feature. Returns
    ``(X_raw, tokens, feature_names)``; ``tokens`` is None without labels.
    """
    try:
        with open(path, newline="") as fh:
            rows = [(i + 1, r) for i, r in enumerate(csv.reader(fh)) if any(c.strip() for c in r)]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    except csv.Error as exc:
        raise DataError(f"{path}: {exc}") from exc
    if not rows:
        raise DataError(f"{path} is empty")
    width = len(rows[0][1])
    lab = label_column
    if lab is not None:
        if width < 2:
            raise DataError(f"{path}: need at least one feature column and a label column")
        if isinstance(lab, str) and not lab.lstrip("-").isdigit():
            header = [c.strip() for c in rows[0][1]]
            if lab not in header:
                raise DataError(f"{path}: no column named {lab!r}")
            lab = header.index(lab)
        lab = int(lab) % width
    n_feat = width - (lab is not None)

    first = [c.strip() for c in rows[0][1]]
    feats0 = [c for j, c in enumerate(first) if j != lab]
    if not all(_is_number(c) for c in feats0):
        names = feats0
        rows = rows[1:]
    else:
        names = [f"x{j}" for j in range(n_feat)]
    if not rows:
        raise DataError(f"{path} has a header but no data rows")

    X = np.empty((len(rows), n_feat))
    tokens = [] if lab is not None else None
    for k, (line, row) in enumerate(rows):
        cells = [c.strip() for c in row]
        if len(cells) != width:
            raise DataError(f"{path}: row {line} has {len(cells)} cells, expected {width}")
        for j, c in enumerate(cells):
            if c == "" or c == "?":
                raise DataError(f"{path}: row {line} has a missing value in column {j + 1}")
        if lab is not None:
            tokens.append(cells[lab])
        feats = [c for j, c in enumerate(cells) if j != lab]
        try:
            X[k] = [float(c) for c in feats]
        except ValueError as exc:
            raise DataError(f"{path}: row {line}: {exc}") from exc
        if not np.all(np.isfinite(X[k])):
            raise DataError(f"{path}: row {line} has a non-finite value")
    return X, tokens, names


def map_labels(tokens, positive_label_token=None):
    """Map two distinct label tokens to +1 / -1.

    Without ``positive_label_token`` the tokens must be numeric; the larger
    value becomes +1. Returns ``(y, (positive, negative))``.
    """
    distinct = sorted(set(tokens))
    if len(distinct) > 2:
        shown = ", ".join(repr(t) for t in distinct[:5])
        raise DataError(f"label column has {len(distinct)} distinct values ({shown}); need 2")
    if positive_label_token is None:
        if not all(_is_number(t) for t in distinct):
            raise DataError("non-numeric labels need an explicit positive label token")
        values = sorted({float(t) for t in distinct})
        # the larger value is positive; a lone value keeps its sign
        pos_value = values[-1] if len(values) == 2 or values[0] > 0 else np.nan
        y = np.array([1.0 if float(t) == pos_value else -1.0 for t in tokens])
        pos = next((t for t in distinct if float(t) == pos_value), "1")
        neg = next((t for t in distinct if float(t) != pos_value), "-1")
        return y, (pos, neg)
    pos = str(positive_label_token)
    if pos not in distinct and len(distinct) == 2:
        raise DataError(f"positive label {pos!r} not among {distinct}")
    y = np.array([1.0 if t == pos else -1.0 for t in tokens])
    neg = next((t for t in distinct if t != pos), "")
    return y, (pos, neg)


def load_csv(path, label_column=-1, positive_label_token=None, standardizer=None):
    """Load, label-map and standardize a CSV dataset.

    Parameters
    ----------
    path : str or path-like
    label_column : int or str
        Column index (negative counts from the end) or header name.
    positive_label_token : str, optional
        Label value mapped to +1; the other value becomes -1.
    standardizer : Standardizer, optional
        Reuse stored statistics (prediction time) instead of fitting new ones.

    Raises
    ------
    DataError
        On parse failures (with the offending row), missing cells or more
        than two label values.
    """
    X_raw, tokens, names = read_csv(path, label_column)
    y, pair = map_labels(tokens, positive_label_token)
    if standardizer is None:
        standardizer = Standardizer.fit(X_raw, names)
        if standardizer.columns.size == 0:
            raise DataError(f"{path}: every feature column is constant")
    X = standardizer.transform(X_raw)
    return Dataset(X, y, list(standardizer.names), standardizer, pair)


def two_gaussians(n, seed, dim=2, shift=1.0):
    """Balanced two-class sample with means ``+-shift * e_1`` and unit covariance.

    Returns ``(X, y)``; the first ``ceil(n/2)`` rows are the positive class.
    """
    rng = np.random.default_rng(seed)
    n_pos = (n + 1) // 2
    X = rng.standard_normal((n, dim))
    y = np.r_[np.ones(n_pos), -np.ones(n - n_pos)]
    X[:, 0] += shift * y
    return X, y


def write_csv(path, X, y, names=None, label_name="label"):
    """Write features and labels (last column) with a header row; floats use repr."""
    X = np.asarray(X, dtype=float)
    names = names or [f"x{j}" for j in range(X.shape[1])]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(names) + [label_name])
        for row, lab in zip(X, np.asarray(y)):
            w.writerow([repr(float(v)) for v in row] + [str(int(lab))])
