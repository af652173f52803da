"""Deep archetypal analysis around a fixed latent simplex.

A feedforward encoder maps each batch to mixture weights A (rows on the
k-simplex), batch-mixing weights B (rows over the batch), and a per-point
Gaussian spread. Latent means are convex combinations of the vertices of a
regular simplex, so the latent structure stays interpretable by
construction: every point lives inside the simplex, and the archetype loss
||Z - B A Z||^2 pulls the batch's convex span onto the vertices. Decoders
map sampled latent points back to feature space and, optionally, to a side
target that shapes which directions of variation count as archetypal.

Training minimizes

    recon_weight * MSE(x_hat, x) + side_weight * MSE(y_hat, y)
    + kl_weight * KL + archetype_weight * ||Z - B A Z||^2

with reparametrized sampling and Adam. MSE terms here are averaged over the
batch and summed over coordinates, matching the KL normalization. B only
anchors the archetype loss during batch training; inference uses A alone.
"""

from __future__ import annotations

import re
import time
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import autodiff as ad
from .linalg import row_softmax, simplex_vertices
from .optim import AdamOptimizer
from .rng import RandomSource
from .validation import as_matrix, check_simplex_vector

_LOG_SIGMA_LOW = -13.0
_LOG_SIGMA_HIGH = 5.0


@dataclass
class EpochRecord:
    """Loss averages and constraint diagnostics for one training epoch.

    Loss fields are the weighted contributions to the objective, averaged
    over the epoch's steps. Constraint fields are measured on the epoch's
    last batch; ``latent_means`` keeps that batch's latent means so hull
    membership can be audited after training.
    """

    recon: float
    side: float
    kl: float
    archetype: float
    total: float
    seconds: float
    a_row_err: float
    a_min: float
    b_row_err: float
    b_min: float
    latent_means: np.ndarray


@dataclass
class TrainReport:
    """Full training history: one record per completed epoch."""

    seed: int
    initial: dict = field(default_factory=dict)
    epochs: list[EpochRecord] = field(default_factory=list)


@dataclass
class InterpolationPath:
    """Decoded points along a straight segment in latent space."""

    latents: np.ndarray
    x: np.ndarray
    y: np.ndarray | None


def _he_std(fan_in: int) -> float:
    return float(np.sqrt(2.0 / fan_in))


def _normal(rng: RandomSource, rows: int, cols: int, std: float) -> np.ndarray:
    return std * np.asarray(rng.normal(rows * cols)).reshape(rows, cols)


def init_params(
    n_features: int,
    k: int,
    encoder_widths,
    decoder_widths,
    side_widths,
    has_side: bool,
    learn_variance: bool,
    rng: RandomSource,
) -> dict[str, np.ndarray]:
    """Seeded parameter dictionary for the full network.

    Hidden layers use He-scaled Gaussian weights; the three encoder heads
    start small so A and B begin near uniform, and the log-sigma head bias
    starts at -2 so early latent samples are much tighter than the simplex.
    Short training budgets need the low-noise start: with sigma near one the
    reconstruction gradients are too blurred for the mixture weights to
    commit to vertices within a few hundred steps.
    """
    params: dict[str, np.ndarray] = {}
    d = k - 1
    fan = n_features
    for i, width in enumerate(encoder_widths):
        params[f"enc_w{i}"] = _normal(rng, fan, width, _he_std(fan))
        params[f"enc_b{i}"] = np.zeros((1, width))
        fan = width
    for head, cols in (("a", k), ("b", k), ("s", d)):
        params[f"{head}_w"] = _normal(rng, fan, cols, 0.01)
        params[f"{head}_b"] = np.zeros((1, cols))
    params["s_b"] += -2.0

    def decoder(prefix, widths, out_dim):
        fan_in = d
        for i, width in enumerate(widths):
            params[f"{prefix}_w{i}"] = _normal(rng, fan_in, width, _he_std(fan_in))
            params[f"{prefix}_b{i}"] = np.zeros((1, width))
            fan_in = width
        last = len(widths)
        params[f"{prefix}_w{last}"] = _normal(rng, fan_in, out_dim, _he_std(fan_in))
        params[f"{prefix}_b{last}"] = np.zeros((1, out_dim))

    decoder("dx", decoder_widths, n_features)
    if has_side:
        decoder("dy", side_widths, 1)
    if learn_variance:
        params["x_logvar"] = np.zeros((1, 1))
        if has_side:
            params["y_logvar"] = np.zeros((1, 1))
    return params


def _layer_count(params: dict, prefix: str) -> int:
    pattern = re.compile(rf"{prefix}_w(\d+)$")
    return 1 + max(
        int(m.group(1)) for name in params if (m := pattern.match(name))
    )


def _encoder_graph(leaves: dict[str, ad.Var], x: ad.Var, n_layers: int):
    h = x
    for i in range(n_layers):
        h = ad.relu(ad.affine(h, leaves[f"enc_w{i}"], leaves[f"enc_b{i}"]))
    a = ad.softmax(ad.affine(h, leaves["a_w"], leaves["a_b"]), axis=1)
    b = ad.transpose(ad.softmax(ad.affine(h, leaves["b_w"], leaves["b_b"]), axis=0))
    logsig = ad.clamp(
        ad.affine(h, leaves["s_w"], leaves["s_b"]), _LOG_SIGMA_LOW, _LOG_SIGMA_HIGH
    )
    sigma = ad.exp(logsig)
    return a, b, sigma, logsig


def _decoder_graph(leaves: dict[str, ad.Var], prefix: str, t: ad.Var, n_layers: int):
    h = t
    for i in range(n_layers - 1):
        h = ad.relu(ad.affine(h, leaves[f"{prefix}_w{i}"], leaves[f"{prefix}_b{i}"]))
    last = n_layers - 1
    return ad.affine(h, leaves[f"{prefix}_w{last}"], leaves[f"{prefix}_b{last}"])


def _gaussian_fit_term(leaves, diff: ad.Var, m: int, n_cols: int, logvar_name=None):
    """Mean-over-batch, sum-over-coordinate squared error.

    With a learned scalar log-variance the term becomes
    ``n_cols * logvar + mse / exp(logvar)``, which reduces to the plain
    MSE when the variance is fixed at 1.
    """
    mse = ad.scale(ad.sum_all(ad.square(diff)), 1.0 / m)
    if logvar_name is None:
        return mse
    logvar = ad.sum_all(leaves[logvar_name])
    return ad.add(
        ad.scale(logvar, float(n_cols)),
        ad.mul(mse, ad.exp(ad.neg(logvar))),
    )


def standard_normal_kl_graph(mu: ad.Var, sigma: ad.Var, logsig: ad.Var, m: int) -> ad.Var:
    """Closed-form KL to a standard normal, averaged over the batch.

    (1/m) sum_i sum_d 0.5 * (mu^2 + sigma^2 - 1 - 2 log sigma)
    """
    inner = ad.sub(
        ad.sub(ad.add(ad.square(mu), ad.square(sigma)), ad.Var(1.0)),
        ad.scale(logsig, 2.0),
    )
    return ad.scale(ad.sum_all(inner), 0.5 / m)


def hierarchical_kl_graph(
    mu: ad.Var,
    sigma: ad.Var,
    logsig: ad.Var,
    vertices: np.ndarray,
    kl_eps: np.ndarray,
    dir_draws: np.ndarray,
) -> ad.Var:
    """Monte-Carlo KL to the Dirichlet-mixture prior over the simplex.

    The prior places a unit-variance Gaussian around w @ vertices with
    w drawn Dirichlet(1); its density is estimated with the S rows of
    ``dir_draws``. For each of the S rows of ``kl_eps`` (one noise vector
    shared by the whole batch) a latent sample t = mu + sigma * eps is
    scored under the posterior and under the prior estimate, and the log
    ratio is averaged over samples and batch.
    """
    m, d = mu.value.shape
    s = kl_eps.shape[0]
    prior_means = dir_draws @ vertices
    prior_sq = np.sum(prior_means * prior_means, axis=1).reshape(1, -1)
    log_q_base = ad.neg(ad.sum_axis(logsig, 1))
    total = None
    for i in range(s):
        eps_row = kl_eps[i].reshape(1, d)
        t = ad.add(mu, ad.mul(sigma, ad.Var(eps_row)))
        log_q = ad.add(log_q_base, ad.Var(-0.5 * float(eps_row.ravel() @ eps_row.ravel())))
        sq_t = ad.sum_axis(ad.square(t), 1)
        cross = ad.matmul(t, ad.Var(prior_means.T))
        neg_half_d2 = ad.scale(
            ad.sub(ad.add(sq_t, ad.Var(prior_sq)), ad.scale(cross, 2.0)), -0.5
        )
        log_p = ad.sub(ad.logsumexp(neg_half_d2, axis=1), ad.Var(np.log(s)))
        contrib = ad.sum_all(ad.sub(log_q, log_p))
        total = contrib if total is None else ad.add(total, contrib)
    return ad.scale(total, 1.0 / (s * m))


def standard_normal_kl(mu, sigma) -> float:
    """Closed-form standard-normal KL for plain arrays."""
    mu = as_matrix(mu, "mu")
    sigma = as_matrix(sigma, "sigma")
    if np.any(sigma <= 0):
        raise ValueError("sigma must be positive")
    per = 0.5 * (mu**2 + sigma**2 - 1.0 - 2.0 * np.log(sigma))
    return float(per.sum() / mu.shape[0])


def hierarchical_kl(mu, sigma, vertices, mc_samples: int, seed: int = 0) -> float:
    """Monte-Carlo hierarchical-prior KL for plain arrays (fresh draws)."""
    mu = as_matrix(mu, "mu")
    sigma = as_matrix(sigma, "sigma")
    if np.any(sigma <= 0):
        raise ValueError("sigma must be positive")
    if mc_samples < 1:
        raise ValueError(f"mc_samples must be >= 1, got {mc_samples}")
    rng = RandomSource(seed)
    d = mu.shape[1]
    k = vertices.shape[0]
    kl_eps = np.asarray(rng.normal(mc_samples * d)).reshape(mc_samples, d)
    dir_draws = rng.dirichlet(np.ones(k), size=mc_samples)
    graph = hierarchical_kl_graph(
        ad.Var(mu), ad.Var(sigma), ad.Var(np.log(sigma)), vertices, kl_eps, dir_draws
    )
    return float(graph.value)


def archetype_loss(a, b, vertices) -> float:
    """Squared Frobenius distance between the simplex and its batch span,
    ||Z - B A Z||^2."""
    a = as_matrix(a, "A")
    b = as_matrix(b, "B")
    z = as_matrix(vertices, "vertices") if vertices.ndim == 2 else vertices
    if a.shape[1] != z.shape[0] or b.shape != (a.shape[1], a.shape[0]):
        raise ValueError(
            f"shapes do not conform: A {a.shape}, B {b.shape}, vertices {z.shape}"
        )
    diff = z - b @ (a @ z)
    return float(np.sum(diff * diff))


def batch_loss_graph(
    params: dict[str, np.ndarray],
    vertices: np.ndarray,
    x: np.ndarray,
    y: np.ndarray | None,
    eps: np.ndarray,
    *,
    recon_weight: float,
    side_weight: float,
    kl_weight: float,
    archetype_weight: float,
    prior: str = "normal",
    kl_eps: np.ndarray | None = None,
    dir_draws: np.ndarray | None = None,
    learn_variance: bool = False,
    x_shift: np.ndarray | None = None,
    x_scale: np.ndarray | None = None,
):
    """Build the training objective graph for one batch.

    All randomness (reparametrization noise, Monte-Carlo draws) enters as
    fixed arrays, so the same inputs always produce the same value and the
    gradient can be checked against finite differences.

    ``x_shift``/``x_scale`` are fixed per-feature standardization constants:
    the encoder reads (x - shift) / scale and the decoder output is mapped
    back through the same affine, so the reconstruction error stays in data
    space while the network operates on an order-one representation.

    Returns
    -------
    total : Var, scalar objective.
    parts : dict of weighted float contributions; they sum to the total.
    leaves : dict mapping parameter names to their graph leaves (read
        ``.grad`` after backward).
    """
    m = x.shape[0]
    leaves = {name: ad.Var(value) for name, value in params.items()}
    x_var = ad.Var(x)
    if x_shift is not None:
        shift = x_shift.reshape(1, -1)
        scl = x_scale.reshape(1, -1)
        enc_in = ad.Var((x - shift) / scl)
    else:
        enc_in = x_var
    n_enc = _layer_count(params, "enc")
    a, b, sigma, logsig = _encoder_graph(leaves, enc_in, n_enc)
    mu = ad.matmul(a, ad.Var(vertices))
    t = ad.reparam_sample(mu, sigma, eps)

    terms: list[ad.Var] = []
    parts = {"recon": 0.0, "side": 0.0, "kl": 0.0, "archetype": 0.0}

    if recon_weight != 0.0:
        x_hat = _decoder_graph(leaves, "dx", t, _layer_count(params, "dx"))
        if x_shift is not None:
            x_hat = ad.add(ad.mul(x_hat, ad.Var(scl)), ad.Var(shift))
        logvar = "x_logvar" if learn_variance else None
        term = ad.scale(
            _gaussian_fit_term(leaves, ad.sub(x_hat, x_var), m, x.shape[1], logvar),
            recon_weight,
        )
        parts["recon"] = float(term.value)
        terms.append(term)

    if side_weight != 0.0 and y is not None:
        y_hat = _decoder_graph(leaves, "dy", t, _layer_count(params, "dy"))
        logvar = "y_logvar" if learn_variance else None
        term = ad.scale(
            _gaussian_fit_term(leaves, ad.sub(y_hat, ad.Var(y)), m, y.shape[1], logvar),
            side_weight,
        )
        parts["side"] = float(term.value)
        terms.append(term)

    if kl_weight != 0.0:
        if prior == "normal":
            kl = standard_normal_kl_graph(mu, sigma, logsig, m)
        elif prior == "dirichlet":
            if kl_eps is None or dir_draws is None:
                raise ValueError("dirichlet prior needs kl_eps and dir_draws")
            kl = hierarchical_kl_graph(mu, sigma, logsig, vertices, kl_eps, dir_draws)
        else:
            raise ValueError(f"unknown prior {prior!r}")
        term = ad.scale(kl, kl_weight)
        parts["kl"] = float(term.value)
        terms.append(term)

    if archetype_weight != 0.0:
        z_var = ad.Var(vertices)
        pred = ad.matmul(ad.matmul(b, a), z_var)
        term = ad.scale(ad.sum_all(ad.square(ad.sub(z_var, pred))), archetype_weight)
        parts["archetype"] = float(term.value)
        terms.append(term)

    if terms:
        total = terms[0]
        for extra in terms[1:]:
            total = ad.add(total, extra)
    else:
        total = ad.Var(0.0)
    parts["total"] = float(total.value)
    return total, parts, leaves


class DeepArchetypalAnalysis(BaseEstimator, TransformerMixin):
    """Archetypal analysis in the latent space of an autoencoder.

    Parameters
    ----------
    n_archetypes : int, default 3
        Number of archetypes k; the latent dimension is k - 1.
    encoder_widths : tuple of int, default (64, 64)
        Hidden layer sizes of the shared encoder trunk.
    decoder_widths : tuple of int, default (64, 64)
        Hidden layer sizes of the feature decoder.
    side_widths : tuple of int, default (16,)
        Hidden layer sizes of the side-information decoder (built only
        when ``fit`` receives a target).
    epochs : int, default 20
    batch_size : int, default 100
        Must be at least ``n_archetypes`` so B can mix over the batch.
    learning_rate : float, default 0.001
    recon_weight, side_weight, kl_weight, archetype_weight : floats
        Term weights of the objective; defaults 1, 1, 1, 10.
    side_weight_growth : float, default 1.0
        Multiplies the side weight by this factor every
        ``side_weight_growth_every`` steps (1.0 keeps it constant).
    side_weight_growth_every : int, default 500
    prior : {"normal", "dirichlet"}, default "normal"
        Latent prior: closed-form standard normal, or the hierarchical
        Dirichlet-mixture prior over the simplex estimated by Monte Carlo.
    mc_samples : int, default 16
        Sample count for the hierarchical prior estimate.
    learn_variance : bool, default False
        Learn one global log-variance per decoder branch instead of unit
        variance.
    standardize : bool, default True
        Feed the encoder per-feature standardized inputs and map decoder
        output back through the same fixed affine. Keeps strongly skewed
        features from saturating the encoder; the reconstruction error is
        still measured in data space.
    n_init : int, default 1
        Number of independently seeded training runs; the run with the
        lowest final mean training loss wins. Training is non-convex, so
        restarts buy robustness at proportional cost.
    seed : int, default 0
        Seed for initialization, shuffling, and all sampling.
    verbose : int, default 0
        Print a loss line every ``verbose`` epochs (0 silences).

    Attributes
    ----------
    params_ : dict of named weight arrays.
    vertices_ : (k, k-1) fixed latent simplex vertices (unit edge,
        centered at the origin).
    report_ : TrainReport with per-epoch loss and constraint records.
    loss_ : final epoch's mean objective.
    has_side_ : whether a side-information decoder was trained.
    """

    def __init__(
        self,
        n_archetypes: int = 3,
        encoder_widths=(64, 64),
        decoder_widths=(64, 64),
        side_widths=(16,),
        epochs: int = 20,
        batch_size: int = 100,
        learning_rate: float = 0.001,
        recon_weight: float = 1.0,
        side_weight: float = 1.0,
        kl_weight: float = 1.0,
        archetype_weight: float = 10.0,
        side_weight_growth: float = 1.0,
        side_weight_growth_every: int = 500,
        prior: str = "normal",
        mc_samples: int = 16,
        learn_variance: bool = False,
        standardize: bool = True,
        n_init: int = 1,
        seed: int = 0,
        verbose: int = 0,
    ):
        self.n_archetypes = n_archetypes
        self.encoder_widths = encoder_widths
        self.decoder_widths = decoder_widths
        self.side_widths = side_widths
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.recon_weight = recon_weight
        self.side_weight = side_weight
        self.kl_weight = kl_weight
        self.archetype_weight = archetype_weight
        self.side_weight_growth = side_weight_growth
        self.side_weight_growth_every = side_weight_growth_every
        self.prior = prior
        self.mc_samples = mc_samples
        self.learn_variance = learn_variance
        self.standardize = standardize
        self.n_init = n_init
        self.seed = seed
        self.verbose = verbose

    def _check_parameters(self):
        k = self.n_archetypes
        if not isinstance(k, (int, np.integer)) or k < 2:
            raise ValueError(f"n_archetypes must be an integer >= 2, got {k!r}")
        if self.batch_size < k:
            raise ValueError(
                f"batch_size={self.batch_size} is smaller than "
                f"n_archetypes={k}; B cannot mix over the batch"
            )
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        for name in ("recon_weight", "side_weight", "kl_weight", "archetype_weight"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.prior not in ("normal", "dirichlet"):
            raise ValueError(f"unknown prior {self.prior!r}")
        if self.mc_samples < 1:
            raise ValueError(f"mc_samples must be >= 1, got {self.mc_samples}")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.side_weight_growth <= 0 or self.side_weight_growth_every < 1:
            raise ValueError("invalid side-weight growth schedule")
        if not isinstance(self.n_init, (int, np.integer)) or self.n_init < 1:
            raise ValueError(f"n_init must be an integer >= 1, got {self.n_init!r}")

    def _side_weight_at(self, step: int) -> float:
        if self.side_weight_growth == 1.0:
            return float(self.side_weight)
        exponent = step // self.side_weight_growth_every
        return float(self.side_weight) * float(self.side_weight_growth) ** exponent

    def fit(self, X, y=None):
        """Train on the rows of X; a non-None y adds the side branch.

        y may be a vector or a single-column matrix of side targets.
        """
        x = as_matrix(X, "X")
        self._check_parameters()
        n, p = x.shape
        k = self.n_archetypes
        m = self.batch_size
        if n < m:
            raise ValueError(f"batch_size={m} exceeds the number of rows {n}")
        y_mat = None
        if y is not None:
            y_mat = np.asarray(y, dtype=np.float64).reshape(n, -1)
            if y_mat.shape[1] != 1:
                raise ValueError("side information must be a single column")
            if not np.all(np.isfinite(y_mat)):
                raise ValueError("side information contains non-finite entries")

        if self.standardize:
            stds = x.std(axis=0)
            self.x_shift_ = x.mean(axis=0)
            self.x_scale_ = np.where(stds > 0.0, stds, 1.0)
        else:
            self.x_shift_ = None
            self.x_scale_ = None

        vertices = simplex_vertices(k)
        base = RandomSource(self.seed)
        best = None
        for restart in range(self.n_init):
            root = base if self.n_init == 1 else base.derive(1000 + restart)
            params, report = self._fit_once(x, y_mat, vertices, root)
            loss = report.epochs[-1].total if report.epochs else float("inf")
            if best is None or loss < best[0]:
                best = (loss, params, report)

        _, params, report = best
        self.params_ = params
        self.vertices_ = vertices
        self.report_ = report
        self.loss_ = report.epochs[-1].total if report.epochs else float("nan")
        self.has_side_ = y_mat is not None
        self.n_features_in_ = p
        return self

    def _fit_once(self, x, y_mat, vertices, root: RandomSource):
        """One full training run from the given stream; returns (params, report)."""
        n, p = x.shape
        k = self.n_archetypes
        m = self.batch_size
        params = init_params(
            p,
            k,
            tuple(self.encoder_widths),
            tuple(self.decoder_widths),
            tuple(self.side_widths),
            y_mat is not None,
            self.learn_variance,
            root.derive(1),
        )
        optimizer = AdamOptimizer(params, lr=self.learning_rate)
        report = TrainReport(seed=int(self.seed))

        probe_src = root.derive(2)
        _, initial_parts, _ = self._build_loss(
            params, vertices, x[:m], None if y_mat is None else y_mat[:m],
            probe_src, step=0,
        )
        report.initial = initial_parts

        step = 0
        for epoch in range(self.epochs):
            t_start = time.perf_counter()
            epoch_src = root.derive(100 + epoch)
            perm = epoch_src.permutation(n)
            sums = {"recon": 0.0, "side": 0.0, "kl": 0.0, "archetype": 0.0, "total": 0.0}
            n_batches = 0
            last = None
            for bi, lo in enumerate(range(0, n, m)):
                rows = perm[lo : lo + m]
                if rows.size < k:
                    continue
                xb = x[rows]
                yb = None if y_mat is None else y_mat[rows]
                noise_src = epoch_src.derive(bi + 1)
                total, parts, leaves = self._build_loss(
                    params, vertices, xb, yb, noise_src, step
                )
                if not np.isfinite(parts["total"]):
                    raise FloatingPointError(
                        f"objective became non-finite at epoch {epoch}, batch {bi}"
                    )
                ad.backward(total)
                grads = {
                    name: leaves[name].grad
                    if leaves[name].grad is not None
                    else np.zeros_like(params[name])
                    for name in params
                }
                optimizer.step(grads)
                step += 1
                for key in sums:
                    sums[key] += parts[key]
                n_batches += 1
                last = (xb, leaves)
            seconds = time.perf_counter() - t_start
            record = self._epoch_record(sums, n_batches, seconds, last, vertices, params)
            report.epochs.append(record)
            if self.verbose and (epoch + 1) % self.verbose == 0:
                print(
                    f"epoch {epoch + 1:3d}  total {record.total:.4f}  "
                    f"recon {record.recon:.4f}  kl {record.kl:.4f}  "
                    f"archetype {record.archetype:.4f}"
                )

        return params, report

    def _build_loss(self, params, vertices, xb, yb, noise_src: RandomSource, step: int):
        mb, d = xb.shape[0], self.n_archetypes - 1
        eps = np.asarray(noise_src.normal(mb * d)).reshape(mb, d)
        kl_eps = dir_draws = None
        if self.prior == "dirichlet" and self.kl_weight != 0.0:
            s = self.mc_samples
            kl_eps = np.asarray(noise_src.normal(s * d)).reshape(s, d)
            dir_draws = noise_src.dirichlet(np.ones(self.n_archetypes), size=s)
        return batch_loss_graph(
            params,
            vertices,
            xb,
            yb,
            eps,
            recon_weight=self.recon_weight,
            side_weight=self._side_weight_at(step) if yb is not None else 0.0,
            kl_weight=self.kl_weight,
            archetype_weight=self.archetype_weight,
            prior=self.prior,
            kl_eps=kl_eps,
            dir_draws=dir_draws,
            learn_variance=self.learn_variance,
            x_shift=self.x_shift_,
            x_scale=self.x_scale_,
        )

    def _epoch_record(self, sums, n_batches, seconds, last, vertices, params):
        denom = max(n_batches, 1)
        means = {key: sums[key] / denom for key in sums}
        if last is None:
            a = b = mu = np.zeros((0, 1))
            a_err = b_err = 0.0
            a_min = b_min = 1.0
        else:
            xb, _ = last
            a, b, sigma = self._encode_numpy(params, xb)
            mu = a @ vertices
            a_err = float(np.max(np.abs(a.sum(axis=1) - 1.0)))
            b_err = float(np.max(np.abs(b.sum(axis=1) - 1.0)))
            a_min = float(a.min())
            b_min = float(b.min())
        return EpochRecord(
            recon=means["recon"],
            side=means["side"],
            kl=means["kl"],
            archetype=means["archetype"],
            total=means["total"],
            seconds=seconds,
            a_row_err=a_err,
            a_min=a_min,
            b_row_err=b_err,
            b_min=b_min,
            latent_means=mu,
        )

    def _encode_numpy(self, params, x):
        h = x
        if self.x_shift_ is not None:
            h = (x - self.x_shift_) / self.x_scale_
        for i in range(_layer_count(params, "enc")):
            h = np.maximum(h @ params[f"enc_w{i}"] + params[f"enc_b{i}"], 0.0)
        a = row_softmax(h @ params["a_w"] + params["a_b"])
        b_cols = h @ params["b_w"] + params["b_b"]
        b_cols = b_cols - b_cols.max(axis=0, keepdims=True)
        e = np.exp(b_cols)
        b = (e / e.sum(axis=0, keepdims=True)).T
        logsig = np.clip(
            h @ params["s_w"] + params["s_b"], _LOG_SIGMA_LOW, _LOG_SIGMA_HIGH
        )
        return a, b, np.exp(logsig)

    def _decode_numpy(self, params, prefix, t):
        n_layers = _layer_count(params, prefix)
        h = t
        for i in range(n_layers - 1):
            h = np.maximum(h @ params[f"{prefix}_w{i}"] + params[f"{prefix}_b{i}"], 0.0)
        last = n_layers - 1
        return h @ params[f"{prefix}_w{last}"] + params[f"{prefix}_b{last}"]

    def encode_batch(self, X):
        """Training-style encoding of one batch: (A, B, sigma).

        The batch must have at least ``n_archetypes`` rows because B mixes
        over the batch axis.
        """
        check_is_fitted(self, "params_")
        x = self._check_features(X)
        if x.shape[0] < self.n_archetypes:
            raise ValueError(
                f"batch of {x.shape[0]} rows cannot support "
                f"{self.n_archetypes} batch-mixing weights"
            )
        return self._encode_numpy(self.params_, x)

    def transform(self, X):
        """Per-row mixture weights A; works for any number of rows."""
        check_is_fitted(self, "params_")
        x = self._check_features(X)
        a, _, _ = self._encode_numpy(self.params_, x)
        return a

    def latent_means(self, X):
        """Latent means A @ vertices; rows lie inside the simplex hull."""
        return self.transform(X) @ self.vertices_

    def _decode_x(self, t):
        out = self._decode_numpy(self.params_, "dx", t)
        if self.x_shift_ is not None:
            out = out * self.x_scale_ + self.x_shift_
        return out

    def reconstruct(self, X):
        """Decode each row's latent mean (no sampling noise)."""
        check_is_fitted(self, "params_")
        return self._decode_x(self.latent_means(X))

    def predict_side(self, X):
        """Decode the side target from each row's latent mean."""
        check_is_fitted(self, "params_")
        if not self.has_side_:
            raise ValueError("model was trained without side information")
        return self._decode_numpy(self.params_, "dy", self.latent_means(X)).ravel()

    def decode_mixture(self, weights):
        """Decode a mixture of archetypes given simplex weights.

        Returns (x_hat, y_hat); y_hat is None without a side branch.
        """
        check_is_fitted(self, "params_")
        w = check_simplex_vector(weights, self.n_archetypes)
        t = (w @ self.vertices_).reshape(1, -1)
        x_hat = self._decode_x(t).ravel()
        y_hat = None
        if self.has_side_:
            y_hat = float(self._decode_numpy(self.params_, "dy", t).ravel()[0])
        return x_hat, y_hat

    def interpolate(self, w_start, w_end, steps: int) -> InterpolationPath:
        """Decode evenly spaced points on the latent segment between two
        mixtures."""
        check_is_fitted(self, "params_")
        if steps < 2:
            raise ValueError(f"steps must be >= 2, got {steps}")
        ws = check_simplex_vector(w_start, self.n_archetypes)
        we = check_simplex_vector(w_end, self.n_archetypes)
        t0 = ws @ self.vertices_
        t1 = we @ self.vertices_
        fracs = np.linspace(0.0, 1.0, steps).reshape(-1, 1)
        latents = (1.0 - fracs) * t0 + fracs * t1
        x_path = self._decode_x(latents)
        y_path = None
        if self.has_side_:
            y_path = self._decode_numpy(self.params_, "dy", latents).ravel()
        return InterpolationPath(latents=latents, x=x_path, y=y_path)

    def _check_features(self, X):
        x = as_matrix(X, "X")
        if x.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {x.shape[1]} features, model expects {self.n_features_in_}"
            )
        return x
