"""Array validation helpers shared by the estimators and module-level operations."""

from __future__ import annotations

import numpy as np

from .errors import LengthMismatchError


def check_vector(x, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise LengthMismatchError(f"{name} must be 1-dimensional, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise ValueError(f"{name} contains non-finite values")
    return x


def check_matrix(x, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise LengthMismatchError(f"{name} must be 2-dimensional, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise ValueError(f"{name} contains non-finite values")
    return x


def check_binary_vector(w, name: str) -> np.ndarray:
    w = np.asarray(w)
    if w.ndim != 1:
        raise LengthMismatchError(f"{name} must be 1-dimensional, got shape {w.shape}")
    vals = np.unique(w)
    if not np.isin(vals, (0, 1)).all():
        raise ValueError(f"{name} must be 0/1, found values {vals[:5]}")
    return w.astype(np.int8)


def check_same_length(name_a: str, a, name_b: str, b) -> None:
    if len(a) != len(b):
        raise LengthMismatchError(f"{name_a} has length {len(a)} but {name_b} has {len(b)}")
