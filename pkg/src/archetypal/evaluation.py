"""Model assessment helpers.

Three concerns live here: scoring recovered archetypes against a known
ground truth (up to row permutation), sweeping the archetype count with a
held-out reconstruction score to pick k, and summarizing how decisively
points commit to single archetypes.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import islice, permutations

import numpy as np
from sklearn.base import clone

from .rng import RandomSource
from .validation import as_matrix

_MAX_EXHAUSTIVE_K = 10
_PERMUTATION_CHUNK = 40320
_KNEE_FLATNESS_TOL = 1e-9


@dataclass
class RecoveryScore:
    """Alignment of learned archetypes with ground truth.

    Attributes
    ----------
    permutation : ndarray of shape (k,)
        Row order that best aligns the learned archetypes with the truth:
        learned[permutation[i]] is the match for truth row i.
    rmse : float
        Root mean squared per-coordinate error under that alignment.
    per_archetype_distance : ndarray of shape (k,)
        Euclidean distance of each matched pair, in truth row order.
    """

    permutation: np.ndarray
    rmse: float
    per_archetype_distance: np.ndarray


@dataclass
class SelectionCurve:
    """Held-out reconstruction score as a function of archetype count.

    Attributes
    ----------
    ks : ndarray of shape (n_candidates,)
        The archetype counts that were fit, strictly increasing.
    scores : ndarray of shape (n_candidates,)
        Held-out reconstruction error for each count.
    knee : int or None
        Curve knee per :func:`detect_knee`, or None for a flat or
        linear curve.
    """

    ks: np.ndarray
    scores: np.ndarray
    knee: int | None


def archetype_recovery_error(learned, truth):
    """Score learned archetypes against ground truth up to row order.

    Searches all row permutations exhaustively for the one minimizing the
    total squared distance, so it is exact but limited to k <= 10.

    Parameters
    ----------
    learned : array-like of shape (k, p)
        Estimated archetypes.
    truth : array-like of shape (k, p)
        Reference archetypes in the same feature space.

    Returns
    -------
    RecoveryScore
        Best alignment, its rmse, and per-pair distances.

    Raises
    ------
    ValueError
        If the shapes differ or k exceeds 10.
    """
    learned = as_matrix(learned, "learned")
    truth = as_matrix(truth, "truth")
    if learned.shape != truth.shape:
        raise ValueError(
            f"learned shape {learned.shape} does not match truth shape {truth.shape}"
        )
    k, p = truth.shape
    if k > _MAX_EXHAUSTIVE_K:
        raise ValueError(
            f"exhaustive matching supports at most {_MAX_EXHAUSTIVE_K} archetypes, got {k}"
        )
    diffs = learned[:, None, :] - truth[None, :, :]
    sq_dist = np.einsum("ijp,ijp->ij", diffs, diffs)

    best_cost = np.inf
    best_perm = None
    perm_iter = permutations(range(k))
    cols = np.arange(k)
    while True:
        chunk = np.array(list(islice(perm_iter, _PERMUTATION_CHUNK)), dtype=np.intp)
        if chunk.size == 0:
            break
        costs = sq_dist[chunk, cols].sum(axis=1)
        i = int(np.argmin(costs))
        if costs[i] < best_cost:
            best_cost = float(costs[i])
            best_perm = chunk[i].copy()

    matched_sq = sq_dist[best_perm, cols]
    return RecoveryScore(
        permutation=best_perm,
        rmse=float(np.sqrt(best_cost / (k * p))),
        per_archetype_distance=np.sqrt(matched_sq),
    )


def detect_knee(ks, scores):
    """Find the knee of a model-selection curve.

    Both axes are min-max normalized, then the point with the largest
    perpendicular distance to the chord joining the first and last points
    is returned.  The result is unchanged by affine rescaling of either
    axis.

    Parameters
    ----------
    ks : array-like of shape (n_candidates,)
        Strictly increasing archetype counts.
    scores : array-like of shape (n_candidates,)
        Score for each count.

    Returns
    -------
    int or None
        The k at the knee, or None when every point is within 1e-9 of
        the chord (the curve carries no bend to read).
    """
    ks = np.asarray(ks, dtype=np.float64).ravel()
    scores = np.asarray(scores, dtype=np.float64).ravel()
    if ks.size != scores.size:
        raise ValueError(f"got {ks.size} ks but {scores.size} scores")
    if ks.size < 3:
        raise ValueError(f"knee detection needs at least 3 points, got {ks.size}")
    if np.any(np.diff(ks) <= 0):
        raise ValueError("ks must be strictly increasing")

    xs = (ks - ks[0]) / (ks[-1] - ks[0])
    span = np.ptp(scores)
    if span == 0.0:
        return None
    ys = (scores - scores.min()) / span

    chord = np.array([xs[-1] - xs[0], ys[-1] - ys[0]])
    rel_x = xs - xs[0]
    rel_y = ys - ys[0]
    dist = np.abs(chord[0] * rel_y - chord[1] * rel_x) / np.hypot(*chord)
    if dist.max() <= _KNEE_FLATNESS_TOL:
        return None
    return int(ks[int(np.argmax(dist))])


def selection_sweep(X, ks, estimator, *, seed=0, metric="mae", n_restarts=1):
    """Fit a range of archetype counts and score each on held-out rows.

    The rows of X are split 90/10 with a seeded shuffle.  For each k a
    fresh clone of ``estimator`` is fit on the training split with
    ``n_archetypes=k`` and a seed derived from (seed, k), then scored by
    reconstructing the held-out split.

    Parameters
    ----------
    X : array-like of shape (n_samples, n_features)
        Data to sweep over.
    ks : sequence of int
        Strictly increasing candidate archetype counts.
    estimator : estimator instance
        Prototype with ``n_archetypes`` and ``seed`` parameters and a
        ``reconstruct`` method; cloned once per candidate count.
    seed : int, default 0
        Controls the split and the per-candidate fit seeds.
    metric : {'mae', 'rss'}, default 'mae'
        Held-out score: mean absolute per-coordinate reconstruction
        error, or the residual sum of squares.
    n_restarts : int, default 1
        Independently seeded fits per candidate count.  With more than
        one, the fit with the lowest training-split reconstruction MAE
        is scored; the held-out split plays no part in the choice.
        Useful for stochastic fitters whose single runs vary.

    Returns
    -------
    SelectionCurve
        Scores by k with the detected knee.
    """
    x = as_matrix(X, "X")
    ks = [int(k) for k in ks]
    if len(ks) < 1:
        raise ValueError("ks must be non-empty")
    if any(b <= a for a, b in zip(ks, ks[1:])):
        raise ValueError("ks must be strictly increasing")
    if metric not in ("mae", "rss"):
        raise ValueError(f"metric must be 'mae' or 'rss', got {metric!r}")
    if n_restarts < 1:
        raise ValueError(f"n_restarts must be >= 1, got {n_restarts}")

    n = x.shape[0]
    order = RandomSource(seed).permutation(n)
    n_test = max(1, int(round(0.1 * n)))
    if n_test >= n:
        raise ValueError(f"need at least 2 rows to split, got {n}")
    x_test = x[order[:n_test]]
    x_train = x[order[n_test:]]

    scores = []
    for k in ks:
        k_source = RandomSource(seed).derive(k)
        try:
            best_model = None
            best_train_mae = np.inf
            for restart in range(n_restarts):
                sub_seed = k_source.seed if restart == 0 else k_source.derive(restart).seed
                model = clone(estimator)
                model.set_params(n_archetypes=k, seed=sub_seed)
                model.fit(x_train)
                if n_restarts == 1:
                    best_model = model
                    break
                train_mae = float(np.mean(np.abs(model.reconstruct(x_train) - x_train)))
                if train_mae < best_train_mae:
                    best_train_mae = train_mae
                    best_model = model
            recon = best_model.reconstruct(x_test)
        except Exception as exc:
            raise RuntimeError(f"selection sweep failed at k={k}: {exc}") from exc
        err = recon - x_test
        if metric == "mae":
            scores.append(float(np.mean(np.abs(err))))
        else:
            scores.append(float(np.sum(err * err)))

    ks_arr = np.array(ks)
    scores_arr = np.array(scores)
    knee = detect_knee(ks_arr, scores_arr) if len(ks) >= 3 else None
    return SelectionCurve(ks=ks_arr, scores=scores_arr, knee=knee)


def dominant_weights(model, X):
    """Per-row maximum mixture weight under a fitted model.

    Values near 1 mark rows the model treats as archetypal; the minimum
    possible value is 1/k at the simplex centroid.

    Parameters
    ----------
    model : fitted estimator
        Anything with a ``transform`` returning row-stochastic weights.
    X : array-like of shape (n_samples, n_features)
        Rows to score.

    Returns
    -------
    ndarray of shape (n_samples,)
        Largest mixture weight of each row.
    """
    weights = model.transform(as_matrix(X, "X"))
    return weights.max(axis=1)
