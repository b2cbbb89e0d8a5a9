"""Small helpers for class-probability vectors.

A probability vector over C classes is a 1-d float64 array: entries
non-negative, summing to 1 within tolerance. Batched variants are 2-d arrays
with one vector per row.
"""

from __future__ import annotations

import numpy as np

from ruc.errors import InputShapeError

ATOL = 1e-9


def uniform(n_classes: int) -> np.ndarray:
    return np.full(n_classes, 1.0 / n_classes)


def onehot(index: int, n_classes: int) -> np.ndarray:
    p = np.zeros(n_classes)
    p[index] = 1.0
    return p


def onehot_rows(indices: np.ndarray, n_classes: int) -> np.ndarray:
    indices = np.asarray(indices, dtype=np.int64)
    p = np.zeros((indices.size, n_classes))
    p[np.arange(indices.size), indices] = 1.0
    return p


def as_rows(p: np.ndarray) -> np.ndarray:
    """View 1-d input as a single-row matrix; pass 2-d through."""
    p = np.asarray(p, dtype=np.float64)
    if p.ndim == 1:
        return p[None, :]
    if p.ndim != 2:
        raise InputShapeError(f"expected 1-d or 2-d array, got ndim={p.ndim}")
    return p


def valid_rows(p: np.ndarray, atol: float = ATOL) -> np.ndarray:
    """Boolean per row: non-negative and summing to 1 within atol."""
    rows = as_rows(p)
    return (rows >= 0.0).all(axis=1) & (np.abs(rows.sum(axis=1) - 1.0) <= atol)


def check_rows(p: np.ndarray, what: str = "label", atol: float = ATOL) -> np.ndarray:
    rows = as_rows(p)
    ok = valid_rows(rows, atol)
    if not ok.all():
        i = int(np.argmin(ok))
        raise InputShapeError(
            f"{what} row {i} is not a probability vector (sum={rows[i].sum()!r})"
        )
    return rows
