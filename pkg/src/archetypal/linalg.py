"""Dense linear algebra and simplex geometry used across the package.

Arrays are plain float64 numpy matrices. The eigensolver behind
:func:`pca` is a cyclic Jacobi routine so the decomposition is fully
deterministic and has no dependency on a particular LAPACK build.
"""

from __future__ import annotations

import numpy as np

from .validation import as_matrix, check_matmul_shapes


def matmul(a, b) -> np.ndarray:
    """Matrix product with explicit shape checking.

    Raises
    ------
    ValueError
        If the inner dimensions differ; the message names both shapes.
    """
    a = as_matrix(a, "left operand")
    b = as_matrix(b, "right operand")
    check_matmul_shapes(a, b)
    return a @ b


def simplex_vertices(k: int) -> np.ndarray:
    """Vertices of a regular (k-1)-simplex with unit edge, centered at origin.

    Returns a (k, k-1) array. The rows are mapped from the scaled standard
    basis of R^k into the hyperplane orthogonal to the all-ones vector using
    the Helmert basis, so the construction is deterministic.

    For k=1 the result is a single point with an empty coordinate vector.
    """
    if k < 1:
        raise ValueError(f"archetype count must be >= 1, got {k}")
    if k == 1:
        return np.zeros((1, 0))
    # Helmert rows: orthonormal basis of the hyperplane orthogonal to 1
    h = np.zeros((k - 1, k))
    for j in range(1, k):
        h[j - 1, :j] = 1.0
        h[j - 1, j] = -j
        h[j - 1] /= np.sqrt(j * (j + 1.0))
    centered = np.eye(k) - 1.0 / k
    # standard-basis vertices are sqrt(2) apart; rescale to unit edge
    return (centered @ h.T) / np.sqrt(2.0)


def row_softmax(logits) -> np.ndarray:
    """Row-wise softmax, stabilized by subtracting each row's maximum."""
    z = as_matrix(logits, "logits")
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _jacobi_eigh(s: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns (eigenvalues, eigenvectors-as-columns) sorted descending.
    """
    a = np.array(s, dtype=np.float64)
    d = a.shape[0]
    v = np.eye(d)
    if d == 1:
        return a.diagonal().copy(), v
    scale = np.linalg.norm(a)
    if scale == 0.0:
        return np.zeros(d), v
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2) * 2.0)
        if off <= tol * scale:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[p, q]
                if abs(apq) <= tol * scale * 1e-4:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                sn = t * c
                g = np.array([[c, sn], [-sn, c]])
                rows = np.array([p, q])
                a[rows, :] = g.T @ a[rows, :]
                a[:, rows] = a[:, rows] @ g
                v[:, rows] = v[:, rows] @ g
    eigvals = a.diagonal().copy()
    order = np.argsort(-eigvals, kind="stable")
    return eigvals[order], v[:, order]


def pca(x, d: int):
    """Principal component analysis of the rows of ``x``.

    Parameters
    ----------
    x : array (n, p)
    d : number of components, 1 <= d <= min(n, p)

    Returns
    -------
    components : (d, p) array with orthonormal rows, sorted by variance.
    projected : (n, d) array, centered data times components transposed.
    explained_variance : (d,) non-increasing sample variances.

    The component sign is fixed so each row's largest-magnitude entry is
    positive.
    """
    x = as_matrix(x, "X")
    n, p = x.shape
    if n < 2:
        raise ValueError("PCA needs at least 2 rows")
    if not 1 <= d <= min(n, p):
        raise ValueError(f"component count {d} out of range for shape {x.shape}")
    centered = x - x.mean(axis=0)
    cov = (centered.T @ centered) / (n - 1)
    eigvals, eigvecs = _jacobi_eigh(cov)
    comps = eigvecs[:, :d].T.copy()
    for i in range(d):
        j = int(np.argmax(np.abs(comps[i])))
        if comps[i, j] < 0:
            comps[i] = -comps[i]
    projected = centered @ comps.T
    return comps, projected, np.maximum(eigvals[:d], 0.0)
