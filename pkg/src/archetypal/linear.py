"""Linear archetypal analysis fitted with alternating Frank-Wolfe updates.

The model approximates each data row as a convex combination of archetypes,
X ~= A B X, where both weight matrices are row stochastic. Archetypes
Z = B X therefore live inside the convex hull of the data. Each alternating
half-step is a Frank-Wolfe pass: the linear minimization oracle over a
simplex is vertex selection on the gradient, and the step size comes from
exact line search (the subproblems are quadratics, so the optimal step is
closed form).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .rng import RandomSource
from .validation import as_matrix, clean_simplex_rows


def residual_sum_of_squares(x, a, b) -> float:
    """Squared Frobenius norm of X - A B X.

    Raises
    ------
    ValueError
        On non-conforming shapes; the message names them.
    """
    x = as_matrix(x, "X")
    a = as_matrix(a, "A")
    b = as_matrix(b, "B")
    n, p = x.shape
    if a.shape[0] != n or b.shape != (a.shape[1], n):
        raise ValueError(
            f"shapes do not conform: X {x.shape}, A {a.shape}, B {b.shape}"
        )
    resid = x - a @ (b @ x)
    return float(np.sum(resid * resid))


def _simplex_fw_rows(target, basis, w0, n_iter):
    """Minimize ||target_i - w_i basis||^2 per row, w_i on the simplex.

    Frank-Wolfe with per-row exact line search; the objective is separable
    over rows so every row carries its own step size. Plain steps toward the
    best vertex alternate with pairwise steps that shift mass from the worst
    active vertex to the best one; the pairwise steps keep convergence
    linear when the optimum sits on a face of the simplex.

    Parameters
    ----------
    target : (n, p) rows to approximate
    basis : (k, p) vertices spanning the feasible polytope
    w0 : (n, k) starting weights, rows on the simplex
    n_iter : iteration budget

    Returns the final weights.
    """
    w = np.array(w0, dtype=np.float64)
    n = w.shape[0]
    rows = np.arange(n)
    gram = basis @ basis.T
    cross = target @ basis.T
    for step in range(n_iter):
        grad = 2.0 * (w @ gram - cross)
        best = np.argmin(grad, axis=1)
        if step % 2 == 0:
            d = -w
            d[rows, best] += 1.0
            cap = np.ones(n)
        else:
            away = np.argmax(np.where(w > 0.0, grad, -np.inf), axis=1)
            d = np.zeros_like(w)
            d[rows, best] += 1.0
            d[rows, away] -= 1.0
            cap = w[rows, away]
        dz = d @ basis
        residual = target - w @ basis
        denom = np.sum(dz * dz, axis=1)
        num = np.sum(residual * dz, axis=1)
        gamma = np.where(denom > 0.0, num / np.maximum(denom, 1e-300), 0.0)
        gamma = np.clip(gamma, 0.0, cap)
        w = w + gamma[:, None] * d
    return w


def _furthest_sum_indices(x, k, rng: RandomSource):
    """Greedy selection of k well-spread row indices.

    Starts from a random row, repeatedly adds the row with the largest
    summed distance to the rows already chosen, then re-selects the random
    starter the same way so it no longer depends on luck alone.
    """
    n = x.shape[0]
    sq = np.sum(x * x, axis=1)

    def dists_to(idx):
        return np.sqrt(np.maximum(sq + sq[idx] - 2.0 * (x @ x[idx]), 0.0))

    first = rng.integers(n)
    chosen = [first]
    total = dists_to(first)
    for _ in range(k - 1):
        total[chosen] = -np.inf
        nxt = int(np.argmax(total))
        chosen.append(nxt)
        total = np.where(np.isinf(total), total, total + dists_to(nxt))
    if k > 1:
        rest = chosen[1:]
        total = np.zeros(n)
        for idx in rest:
            total += dists_to(idx)
        total[rest] = -np.inf
        chosen = [int(np.argmax(total))] + rest
    return np.array(chosen)


class ArchetypalAnalysis(BaseEstimator, TransformerMixin):
    """Archetypal analysis via alternating Frank-Wolfe updates.

    Parameters
    ----------
    n_archetypes : int, default 4
        Number of archetypes k; must satisfy 1 <= k <= n_samples.
    max_iter : int, default 200
        Outer alternation budget.
    fw_iter : int, default 50
        Frank-Wolfe iterations per half-step (A update, B update).
    tol : float, default 1e-6
        Stop when the relative objective improvement over one outer
        iteration falls below this.
    init : {"furthest-sum", "random-rows"}, default "furthest-sum"
        How the initial archetype supports are chosen.
    transform_iter : int, default 400
        Frank-Wolfe budget when projecting new points onto the fitted
        archetype polytope.
    seed : int, default 0
        Seed for the deterministic random source used by initialization.
    verbose : int, default 0
        Print the objective every ``verbose`` outer iterations (0 silences).

    Attributes
    ----------
    archetypes_ : (k, p) array
        Fitted archetypes Z = B X.
    alphas_ : (n, k) array
        Mixture weights of the training rows.
    betas_ : (k, n) array
        Archetype construction weights over the training rows.
    rss_ : float
        Final residual sum of squares.
    rss_history_ : list of float
        Objective after every outer iteration; non-increasing.
    converged_ : bool
        Whether the tolerance was met before ``max_iter``.
    n_iter_ : int
        Outer iterations actually run.
    """

    def __init__(
        self,
        n_archetypes: int = 4,
        max_iter: int = 200,
        fw_iter: int = 50,
        tol: float = 1e-6,
        init: str = "furthest-sum",
        transform_iter: int = 400,
        seed: int = 0,
        verbose: int = 0,
    ):
        self.n_archetypes = n_archetypes
        self.max_iter = max_iter
        self.fw_iter = fw_iter
        self.tol = tol
        self.init = init
        self.transform_iter = transform_iter
        self.seed = seed
        self.verbose = verbose

    def _check_parameters(self, n):
        k = self.n_archetypes
        if not isinstance(k, (int, np.integer)) or k < 1:
            raise ValueError(f"n_archetypes must be a positive integer, got {k!r}")
        if k > n:
            raise ValueError(f"n_archetypes={k} exceeds the number of rows {n}")
        if self.max_iter < 1 or self.fw_iter < 1 or self.transform_iter < 1:
            raise ValueError("iteration budgets must be >= 1")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol!r}")
        if self.init not in ("furthest-sum", "random-rows"):
            raise ValueError(f"unknown init {self.init!r}")

    def fit(self, X, y=None):
        """Fit archetypes to the rows of X.

        y is ignored; present for pipeline compatibility.
        """
        x = as_matrix(X, "X")
        n, p = x.shape
        self._check_parameters(n)
        k = self.n_archetypes
        rng = RandomSource(self.seed)

        if self.init == "furthest-sum":
            support = _furthest_sum_indices(x, k, rng.derive(0))
        else:
            support = rng.derive(0).permutation(n)[:k]
        b = np.zeros((k, n))
        b[np.arange(k), support] = 1.0
        a = np.full((n, k), 1.0 / k)

        history = []
        converged = False
        prev = None
        it = 0
        for it in range(1, self.max_iter + 1):
            z = b @ x
            a = _simplex_fw_rows(x, z, a, self.fw_iter)
            b = self._update_b(x, a, b)
            resid = x - a @ (b @ x)
            rss = float(np.sum(resid * resid))
            history.append(rss)
            if self.verbose and it % self.verbose == 0:
                print(f"iter {it:4d}  rss {rss:.6e}")
            if prev is not None and prev - rss <= self.tol * max(prev, 1e-12):
                converged = True
                break
            prev = rss

        self.alphas_ = clean_simplex_rows(a)
        self.betas_ = clean_simplex_rows(b)
        self.archetypes_ = self.betas_ @ x
        self.rss_history_ = history
        self.rss_ = history[-1]
        self.converged_ = converged
        self.n_iter_ = it
        self.n_features_in_ = p
        return self

    def _update_b(self, x, a, b):
        """Frank-Wolfe pass on B with a joint exact line-search step.

        The vertex oracle decomposes row-wise, but the objective couples the
        rows of B through A, so one shared step size is optimal for the
        combined direction.
        """
        b = np.array(b, dtype=np.float64)
        ata = a.T @ a
        atx = a.T @ x
        for _ in range(self.fw_iter):
            bx = b @ x
            grad = 2.0 * (ata @ bx - atx) @ x.T
            verts = np.argmin(grad, axis=1)
            d = -b
            d[np.arange(b.shape[0]), verts] += 1.0
            adx = a @ (d @ x)
            residual = x - a @ bx
            denom = float(np.sum(adx * adx))
            if denom <= 0.0:
                break
            gamma = float(np.sum(residual * adx)) / denom
            gamma = min(max(gamma, 0.0), 1.0)
            if gamma == 0.0:
                break
            b = b + gamma * d
        return b

    def transform(self, X):
        """Project rows of X onto the archetype polytope.

        Returns the (n, k) row-stochastic weights minimizing the distance
        of each row to its convex reconstruction.
        """
        check_is_fitted(self, "archetypes_")
        x = as_matrix(X, "X")
        if x.shape[1] != self.archetypes_.shape[1]:
            raise ValueError(
                f"X has {x.shape[1]} features, archetypes have "
                f"{self.archetypes_.shape[1]}"
            )
        k = self.archetypes_.shape[0]
        w0 = np.full((x.shape[0], k), 1.0 / k)
        w = _simplex_fw_rows(x, self.archetypes_, w0, self.transform_iter)
        return clean_simplex_rows(w)

    def inverse_transform(self, W):
        """Map mixture weights back to feature space, W @ archetypes."""
        check_is_fitted(self, "archetypes_")
        w = as_matrix(W, "W")
        if w.shape[1] != self.archetypes_.shape[0]:
            raise ValueError(
                f"W has {w.shape[1]} columns, expected {self.archetypes_.shape[0]}"
            )
        return w @ self.archetypes_

    def reconstruct(self, X):
        """Convex reconstruction of each row: transform then mix archetypes."""
        return self.inverse_transform(self.transform(X))
