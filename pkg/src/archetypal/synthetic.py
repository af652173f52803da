"""Ground-truthed synthetic data from the probabilistic archetype model.

Each observation is a Dirichlet mixture of k ground-truth archetypes plus
isotropic Gaussian noise. The archetypes live on a random low-dimensional
flat embedded in the ambient space; an optional exponential warp of one
coordinate bends that flat into a curved manifold that a linear model
cannot unfold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import RandomSource
from .validation import as_matrix


@dataclass
class SyntheticTruth:
    """Everything needed to score recovery against the generator.

    Attributes
    ----------
    z_true : (k, p) archetypes in the linear (pre-warp) space.
    a_true : (n, k) mixture weights, rows on the simplex.
    sigma2 : observation noise variance.
    embedding : (k-1, p) orthonormal rows mapping latent to ambient space.
    curved_dim : column index of the exponential warp, or None.
    seed : generator seed.
    """

    z_true: np.ndarray
    a_true: np.ndarray
    sigma2: float
    embedding: np.ndarray
    curved_dim: int | None = None
    seed: int = 0

    def archetypes_in_data_space(self) -> np.ndarray:
        """Ground-truth archetypes mapped through the warp, if any."""
        if self.curved_dim is None:
            return self.z_true.copy()
        return apply_curvature(self.z_true, self.curved_dim)


def _draw_latent_archetypes(k: int, rng: RandomSource) -> np.ndarray:
    """k points in [0,1]^{k-1} with pairwise distances >= 0.5.

    Redraws the whole set until the separation constraint holds. For k <= 2
    a single rejection dimension makes this cheap; larger k gets more room
    as the dimension grows with k.
    """
    if k == 1:
        return np.zeros((1, 0))
    for _ in range(10000):
        pts = rng.uniform(k * (k - 1)).reshape(k, k - 1)
        diffs = pts[:, None, :] - pts[None, :, :]
        dists = np.sqrt(np.sum(diffs * diffs, axis=2))
        if np.all(dists[np.triu_indices(k, 1)] >= 0.5):
            return pts
    raise RuntimeError(f"could not place {k} separated archetypes")


def _orthonormal_embedding(d: int, p: int, rng: RandomSource) -> np.ndarray:
    """(d, p) matrix with orthonormal rows, Gram-Schmidt on Gaussian rows."""
    if d == 0:
        return np.zeros((0, p))
    basis = np.empty((d, p))
    filled = 0
    while filled < d:
        v = np.asarray(rng.normal(p))
        for row in basis[:filled]:
            v = v - np.dot(v, row) * row
        norm = np.linalg.norm(v)
        if norm > 1e-8:
            basis[filled] = v / norm
            filled += 1
    return basis


def make_archetypal_data(
    n: int,
    k: int,
    p: int,
    sigma2: float,
    alpha: float = 1.0,
    seed: int = 0,
    curved_dim: int | None = None,
    scale: float = 12.0,
):
    """Draw n points as noisy Dirichlet mixtures of k archetypes in R^p.

    The first k rows of the result are the exact archetypes (their mixture
    weights are one-hot), so recovery against the truth is well posed.

    Parameters
    ----------
    n, k, p : row count, archetype count, feature count; p >= k-1, n >= k.
    sigma2 : variance of the isotropic observation noise, >= 0.
    alpha : Dirichlet concentration for the mixture weights, > 0.
    seed : RandomSource seed; identical seeds give identical output.
    curved_dim : column to warp with exp after noise is added. The string
        "auto" picks the column on which the archetypes are spread widest,
        so the warp is genuinely nonlinear over the data range; None leaves
        the data on its linear flat.
    scale : side length of the latent box the archetypes are drawn in.
        The default keeps the archetype spread well above the noise floor.

    Returns
    -------
    x : (n, p) data matrix.
    truth : SyntheticTruth
    """
    if k < 1 or n < k:
        raise ValueError(f"need n >= k >= 1, got n={n}, k={k}")
    if p < k - 1:
        raise ValueError(f"need p >= k-1 to embed {k} archetypes, got p={p}")
    if sigma2 < 0:
        raise ValueError(f"noise variance must be >= 0, got {sigma2}")
    if alpha <= 0:
        raise ValueError(f"Dirichlet concentration must be > 0, got {alpha}")
    if not (curved_dim is None or curved_dim == "auto" or 0 <= curved_dim < p):
        raise ValueError(f"curved_dim {curved_dim!r} out of range for p={p}")
    if scale <= 0:
        raise ValueError(f"scale must be > 0, got {scale}")

    rng = RandomSource(seed)
    z_latent = _draw_latent_archetypes(k, rng.derive(0)) * float(scale)
    z_latent = z_latent - z_latent.mean(axis=0)
    embedding = _orthonormal_embedding(k - 1, p, rng.derive(1))
    z_true = z_latent @ embedding
    if curved_dim == "auto":
        spans = z_true.max(axis=0) - z_true.min(axis=0)
        curved_dim = int(np.argmax(spans))

    a = rng.derive(2).dirichlet(np.full(k, float(alpha)), size=n)
    a[:k] = np.eye(k)
    x = a @ z_true
    if sigma2 > 0:
        noise = np.asarray(rng.derive(3).normal(n * p)).reshape(n, p)
        x = x + np.sqrt(sigma2) * noise
        x[:k] = z_true
    if curved_dim is not None:
        x = apply_curvature(x, curved_dim)

    truth = SyntheticTruth(
        z_true=z_true,
        a_true=a,
        sigma2=float(sigma2),
        embedding=embedding,
        curved_dim=curved_dim,
        seed=int(seed),
    )
    return x, truth


def apply_curvature(x, dim: int) -> np.ndarray:
    """Copy of x with column ``dim`` replaced by its exponential.

    Strictly monotone on the warped coordinate, so orderings survive and
    ``log`` inverts it exactly.
    """
    x = as_matrix(x, "X")
    if not 0 <= dim < x.shape[1]:
        raise ValueError(f"column {dim} out of range for {x.shape[1]} features")
    out = x.copy()
    out[:, dim] = np.exp(out[:, dim])
    return out


def make_side_information(a_true, w, noise_sd: float = 0.0, seed: int = 0) -> np.ndarray:
    """Scalar target per row: mixture weights times w, plus Gaussian noise.

    Returns an (n, 1) column so it concatenates cleanly with data matrices.
    """
    a = as_matrix(a_true, "a_true")
    w = np.asarray(w, dtype=np.float64).ravel()
    if w.size != a.shape[1]:
        raise ValueError(f"w has length {w.size}, expected {a.shape[1]}")
    if noise_sd < 0:
        raise ValueError(f"noise_sd must be >= 0, got {noise_sd}")
    y = a @ w
    if noise_sd > 0:
        y = y + noise_sd * np.asarray(RandomSource(seed).normal(a.shape[0]))
    return y.reshape(-1, 1)
