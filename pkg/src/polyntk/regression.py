"""Min-norm kernel regression with analytic NTKs."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

__all__ = [
    "NumericalError",
    "Dataset",
    "GramMatrix",
    "RegressionModel",
    "assemble_gram",
    "cross_gram",
    "fit",
    "predict",
    "spectrum_bounds",
    "read_dataset_csv",
    "write_dataset_csv",
]

JITTER_LADDER = tuple(10.0**e for e in range(-12, -5))


class NumericalError(ArithmeticError):
    """A linear solve failed even after regularization."""


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        y = np.asarray(self.y, dtype=float).ravel()
        if X.shape[0] != y.size:
            raise ValueError(f"{X.shape[0]} inputs but {y.size} labels")
        if y.size < 1:
            raise ValueError("empty dataset")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    def __len__(self):
        return self.y.size


@dataclass(frozen=True)
class GramMatrix:
    entries: np.ndarray
    jitter_applied: float = 0.0


@dataclass(frozen=True)
class RegressionModel:
    dataset: Dataset
    kernel: object
    alpha: np.ndarray
    jitter: float
    gram: GramMatrix = field(repr=False)

    def __call__(self, x):
        return predict(self, x)


def _check_distinct(X):
    _, counts = np.unique(X, axis=0, return_counts=True)
    if np.any(counts > 1):
        raise ValueError("duplicate training inputs make the Gram matrix singular")


def cross_gram(kernel, A, B):
    """``K[i, j] = kernel(A[i], B[j])``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    return np.asarray(kernel(A[:, None, :], B[None, :, :]), dtype=float)


def assemble_gram(kernel, X):
    """Symmetric Gram matrix: the upper triangle is evaluated and mirrored."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    _check_distinct(X)
    full = cross_gram(kernel, X, X)
    upper = np.triu(full)
    return GramMatrix(upper + np.triu(upper, 1).T)


def spectrum_bounds(gram):
    """Smallest and largest eigenvalue of the (un-jittered) Gram matrix."""
    entries = gram.entries if isinstance(gram, GramMatrix) else np.asarray(gram, dtype=float)
    eig = linalg.eigvalsh(entries)
    return float(eig[0]), float(eig[-1])


def fit(kernel, dataset, jitter=0.0):
    """Solve ``(K + jitter I) alpha = y`` by Cholesky.

    If the factorization fails, the jitter climbs the ladder
    ``1e-12 .. 1e-6`` (in units of ``trace(K) / n``); the value actually used
    is stored on the model.
    """
    gram = assemble_gram(kernel, dataset.X)
    K = gram.entries
    n = K.shape[0]
    scale = max(np.trace(K) / n, np.finfo(float).tiny)
    ladder = [jitter] + [j * scale for j in JITTER_LADDER if j * scale > jitter]
    for jit in ladder:
        try:
            factor = linalg.cho_factor(K + jit * np.eye(n), lower=True, check_finite=True)
        except linalg.LinAlgError:
            continue
        alpha = linalg.cho_solve(factor, dataset.y)
        return RegressionModel(dataset, kernel, alpha, float(jit), GramMatrix(K, float(jit)))
    lam_min, _ = spectrum_bounds(K)
    raise NumericalError(
        f"Gram matrix not positive definite at jitter {ladder[-1]:.3g} (lambda_min ~ {lam_min:.3g})"
    )


def predict(model, x):
    """``k(x)^T alpha`` for a single input or a batch of inputs."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    k = cross_gram(model.kernel, np.atleast_2d(x), model.dataset.X)
    out = k @ model.alpha
    return float(out[0]) if single else out


def read_dataset_csv(path):
    """Read ``x1..xd,y`` with a header row."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[-1].strip() != "y":
            raise ValueError(f"{path}: header must end with a 'y' column")
        expected = [f"x{i + 1}" for i in range(len(header) - 1)]
        if [h.strip() for h in header[:-1]] != expected:
            raise ValueError(f"{path}: feature columns must be named {','.join(expected)}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            rows.append([float(v) for v in row])
    if not rows:
        raise ValueError(f"{path}: no data rows")
    data = np.array(rows)
    return Dataset(data[:, :-1], data[:, -1])


def write_dataset_csv(path, dataset):
    d = dataset.X.shape[1]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"x{i + 1}" for i in range(d)] + ["y"])
        for xi, yi in zip(dataset.X, dataset.y):
            writer.writerow([repr(float(v)) for v in xi] + [repr(float(yi))])
