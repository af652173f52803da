"""Input validation helpers shared by the estimators and the CLI."""

from __future__ import annotations

import numpy as np


def as_matrix(x, name: str = "X") -> np.ndarray:
    """Coerce to a 2-D float64 array with all entries finite.

    Raises
    ------
    ValueError
        If the input is not 2-D or contains NaN/Inf.
    """
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got {arr.ndim}-D")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def check_matmul_shapes(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape[-1] != b.shape[0]:
        raise ValueError(
            f"cannot multiply shapes {a.shape} and {b.shape}: "
            f"inner dimensions {a.shape[-1]} and {b.shape[0]} differ"
        )


def clean_simplex_rows(w: np.ndarray, dust: float = 1e-12) -> np.ndarray:
    """Clamp negative dust to zero and renormalize each row to sum 1.

    Entries below ``-dust`` are a real constraint violation and raise.
    """
    w = np.asarray(w, dtype=np.float64)
    if np.any(w < -dust):
        worst = float(w.min())
        raise ValueError(f"weight entry {worst} is below the -{dust} tolerance")
    w = np.where(w < 0.0, 0.0, w)
    sums = w.sum(axis=-1, keepdims=True)
    if np.any(sums <= 0.0):
        raise ValueError("weight row sums to zero, cannot renormalize")
    return w / sums


def check_row_stochastic(w: np.ndarray, name: str = "weights", tol: float = 1e-6) -> None:
    w = np.asarray(w, dtype=np.float64)
    if np.any(w < -tol):
        raise ValueError(f"{name} has negative entries beyond tolerance {tol}")
    err = np.max(np.abs(w.sum(axis=-1) - 1.0))
    if err > tol:
        raise ValueError(f"{name} rows must sum to 1 (worst deviation {err:.3g})")


def check_simplex_vector(w, k: int | None = None, tol: float = 1e-6) -> np.ndarray:
    """Validate a single mixture-weight vector; returns it as float64."""
    w = np.asarray(w, dtype=np.float64).ravel()
    if k is not None and w.size != k:
        raise ValueError(f"expected {k} weights, got {w.size}")
    if np.any(w < -tol):
        raise ValueError("mixture weights must be non-negative")
    if abs(float(w.sum()) - 1.0) > tol:
        raise ValueError(f"mixture weights must sum to 1, got {float(w.sum())!r}")
    return np.clip(w, 0.0, None) / np.clip(w, 0.0, None).sum()
