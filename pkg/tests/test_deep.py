import numpy as np
import pytest

from archetypal import DeepArchetypalAnalysis, make_archetypal_data, make_side_information
from archetypal.deep import (
    archetype_loss,
    hierarchical_kl,
    init_params,
    standard_normal_kl,
)
from archetypal.linalg import simplex_vertices
from archetypal.rng import RandomSource
from archetypal.validation import check_row_stochastic


@pytest.fixture(scope="module")
def curved():
    return make_archetypal_data(
        n=300, k=3, p=8, sigma2=0.05, seed=0, curved_dim="auto"
    )


@pytest.fixture(scope="module")
def fitted(curved):
    x, _ = curved
    return DeepArchetypalAnalysis(n_archetypes=3, epochs=6, seed=0).fit(x)


def barycentric_residual(points, vertices):
    """Largest hull-membership violation of points against simplex vertices.

    Solves the affine system for barycentric coordinates and returns the
    worst of (reconstruction error, negative coordinate, coordinate-sum
    deviation) across the rows.
    """
    k = vertices.shape[0]
    system = np.vstack([vertices.T, np.ones(k)])
    rhs = np.hstack([points, np.ones((len(points), 1))]).T
    coords, *_ = np.linalg.lstsq(system, rhs, rcond=None)
    coords = coords.T
    recon = np.abs(coords @ vertices - points).max()
    negativity = max(0.0, float(-coords.min()))
    sums = np.abs(coords.sum(axis=1) - 1.0).max()
    return max(recon, negativity, float(sums))


def test_fit_produces_expected_shapes(fitted, curved):
    x, _ = curved
    assert fitted.vertices_.shape == (3, 2)
    a = fitted.transform(x[:40])
    assert a.shape == (40, 3)
    check_row_stochastic(a, tol=1e-9)
    assert fitted.reconstruct(x[:40]).shape == (40, 8)
    assert fitted.n_features_in_ == 8
    assert not fitted.has_side_


def test_latent_means_inside_hull(fitted, curved):
    x, _ = curved
    t = fitted.latent_means(x[:100])
    assert t.shape == (100, 2)
    assert barycentric_residual(t, fitted.vertices_) < 1e-8


def test_training_reduces_loss(curved):
    x, _ = curved
    est = DeepArchetypalAnalysis(n_archetypes=3, epochs=12, seed=0).fit(x)
    totals = [ep.total for ep in est.report_.epochs]
    assert totals[-1] < totals[0]
    assert est.loss_ == totals[-1]


def test_report_constraint_diagnostics(fitted):
    for ep in fitted.report_.epochs:
        assert ep.a_row_err < 1e-9
        assert ep.b_row_err < 1e-9
        assert ep.a_min >= 0.0
        assert ep.b_min >= 0.0
        assert ep.latent_means.shape[1] == 2


def test_seed_determinism(curved):
    x, _ = curved
    a = DeepArchetypalAnalysis(n_archetypes=3, epochs=3, seed=4).fit(x)
    b = DeepArchetypalAnalysis(n_archetypes=3, epochs=3, seed=4).fit(x)
    for name in a.params_:
        np.testing.assert_array_equal(a.params_[name], b.params_[name])
    c = DeepArchetypalAnalysis(n_archetypes=3, epochs=3, seed=5).fit(x)
    assert any(
        not np.array_equal(a.params_[name], c.params_[name]) for name in a.params_
    )


def test_single_restart_matches_default_stream(curved):
    # n_init=1 must reuse the plain seed path bit for bit
    x, _ = curved
    a = DeepArchetypalAnalysis(n_archetypes=3, epochs=3, seed=4).fit(x)
    b = DeepArchetypalAnalysis(n_archetypes=3, epochs=3, seed=4, n_init=1).fit(x)
    for name in a.params_:
        np.testing.assert_array_equal(a.params_[name], b.params_[name])


def test_restarts_pick_lowest_loss(curved):
    x, _ = curved
    multi = DeepArchetypalAnalysis(n_archetypes=3, epochs=3, seed=4, n_init=3).fit(x)
    finals = []
    for restart in range(3):
        sub = RandomSource(4).derive(1000 + restart).seed
        single = DeepArchetypalAnalysis(n_archetypes=3, epochs=3, seed=sub).fit(x)
        finals.append(single.loss_)
    assert multi.loss_ == min(finals)


def test_epochs_zero_gives_initialized_model(curved):
    x, _ = curved
    est = DeepArchetypalAnalysis(n_archetypes=3, epochs=0, seed=0).fit(x)
    assert est.report_.epochs == []
    assert np.isnan(est.loss_)
    assert est.transform(x[:5]).shape == (5, 3)


def test_side_branch_trains_and_predicts(curved):
    x, truth = curved
    y = make_side_information(truth.a_true, [1.0, 2.0, 3.0], noise_sd=0.05, seed=1)
    est = DeepArchetypalAnalysis(n_archetypes=3, epochs=6, seed=0).fit(x, y)
    assert est.has_side_
    pred = est.predict_side(x[:30])
    assert pred.shape == (30,)
    x_hat, y_hat = est.decode_mixture([0.2, 0.5, 0.3])
    assert x_hat.shape == (8,)
    assert isinstance(y_hat, float)


def test_predict_side_requires_side_branch(fitted, curved):
    x, _ = curved
    with pytest.raises(ValueError, match="side information"):
        fitted.predict_side(x[:3])


def test_decode_mixture_without_side(fitted):
    x_hat, y_hat = fitted.decode_mixture([1.0, 0.0, 0.0])
    assert x_hat.shape == (8,)
    assert y_hat is None
    with pytest.raises(ValueError):
        fitted.decode_mixture([0.9, 0.0, 0.0])
    with pytest.raises(ValueError):
        fitted.decode_mixture([0.5, 0.5])


def test_interpolate_endpoints_match_decodes(fitted):
    path = fitted.interpolate([1.0, 0.0, 0.0], [0.0, 0.0, 1.0], steps=7)
    assert path.x.shape == (7, 8)
    assert path.latents.shape == (7, 2)
    assert path.y is None
    start, _ = fitted.decode_mixture([1.0, 0.0, 0.0])
    end, _ = fitted.decode_mixture([0.0, 0.0, 1.0])
    np.testing.assert_allclose(path.x[0], start, atol=1e-9)
    np.testing.assert_allclose(path.x[-1], end, atol=1e-9)
    with pytest.raises(ValueError):
        fitted.interpolate([1.0, 0.0, 0.0], [0.0, 0.0, 1.0], steps=1)


def test_interpolation_latents_stay_on_segment(fitted):
    path = fitted.interpolate([0.6, 0.4, 0.0], [0.0, 0.3, 0.7], steps=5)
    chord = path.latents[-1] - path.latents[0]
    for i in range(5):
        frac = i / 4
        np.testing.assert_allclose(
            path.latents[i], path.latents[0] + frac * chord, atol=1e-12
        )


def test_standardization_attributes(curved):
    x, _ = curved
    on = DeepArchetypalAnalysis(n_archetypes=3, epochs=2, seed=0).fit(x)
    np.testing.assert_allclose(on.x_shift_, x.mean(axis=0), atol=1e-12)
    np.testing.assert_allclose(on.x_scale_, x.std(axis=0), atol=1e-12)
    off = DeepArchetypalAnalysis(
        n_archetypes=3, epochs=2, seed=0, standardize=False
    ).fit(x)
    assert off.x_shift_ is None
    assert off.x_scale_ is None


def test_learned_variance_parameters_move(curved):
    x, _ = curved
    est = DeepArchetypalAnalysis(
        n_archetypes=3, epochs=4, seed=0, learn_variance=True
    ).fit(x)
    assert "x_logvar" in est.params_
    assert float(est.params_["x_logvar"].ravel()[0]) != 0.0


def test_dirichlet_prior_trains(curved):
    x, _ = curved
    est = DeepArchetypalAnalysis(
        n_archetypes=3, epochs=2, seed=0, prior="dirichlet", mc_samples=4
    ).fit(x)
    assert len(est.report_.epochs) == 2
    assert np.isfinite(est.loss_)


def test_growth_schedule_changes_training(curved):
    x, truth = curved
    y = make_side_information(truth.a_true, [1.0, 2.0, 3.0], seed=1)
    flat = DeepArchetypalAnalysis(n_archetypes=3, epochs=4, seed=0).fit(x, y)
    grown = DeepArchetypalAnalysis(
        n_archetypes=3, epochs=4, seed=0,
        side_weight_growth=2.0, side_weight_growth_every=2,
    ).fit(x, y)
    assert any(
        not np.array_equal(flat.params_[name], grown.params_[name])
        for name in flat.params_
    )


def test_parameter_validation(curved):
    x, _ = curved
    with pytest.raises(ValueError):
        DeepArchetypalAnalysis(n_archetypes=1).fit(x)
    with pytest.raises(ValueError):
        DeepArchetypalAnalysis(n_archetypes=3, batch_size=2).fit(x)
    with pytest.raises(ValueError):
        DeepArchetypalAnalysis(batch_size=1000).fit(x)
    with pytest.raises(ValueError):
        DeepArchetypalAnalysis(epochs=-1).fit(x)
    with pytest.raises(ValueError):
        DeepArchetypalAnalysis(prior="flat").fit(x)
    with pytest.raises(ValueError):
        DeepArchetypalAnalysis(learning_rate=0.0).fit(x)
    with pytest.raises(ValueError):
        DeepArchetypalAnalysis(n_init=0).fit(x)
    with pytest.raises(ValueError):
        DeepArchetypalAnalysis(kl_weight=-1.0).fit(x)


def test_transform_feature_mismatch(fitted):
    with pytest.raises(ValueError):
        fitted.transform(np.zeros((2, 5)))


def test_standard_normal_kl_known_values():
    assert standard_normal_kl(np.zeros((1, 2)), np.ones((1, 2))) == 0.0
    # per-coordinate value 0.5 * mu^2 at unit variance
    np.testing.assert_allclose(
        standard_normal_kl(np.array([[1.0]]), np.array([[1.0]])), 0.5, atol=1e-12
    )
    with pytest.raises(ValueError):
        standard_normal_kl(np.zeros((1, 1)), np.zeros((1, 1)))


def test_hierarchical_kl_deterministic_and_validated():
    mu = np.zeros((4, 2))
    sigma = np.full((4, 2), 0.5)
    vertices = simplex_vertices(3)
    a = hierarchical_kl(mu, sigma, vertices, mc_samples=32, seed=9)
    b = hierarchical_kl(mu, sigma, vertices, mc_samples=32, seed=9)
    assert a == b
    assert np.isfinite(a)
    with pytest.raises(ValueError):
        hierarchical_kl(mu, sigma, vertices, mc_samples=0)
    with pytest.raises(ValueError):
        hierarchical_kl(mu, np.zeros_like(sigma), vertices, mc_samples=4)


def test_archetype_loss_zero_when_span_exact():
    vertices = simplex_vertices(3)
    a = np.eye(3)
    b = np.eye(3)
    assert archetype_loss(a, b, vertices) == 0.0
    # collapse every latent mean to the centroid: span loses the simplex
    a_flat = np.full((3, 3), 1.0 / 3.0)
    assert archetype_loss(a_flat, b, vertices) > 0.1
    with pytest.raises(ValueError):
        archetype_loss(np.ones((4, 2)), np.ones((2, 3)), vertices)


def test_init_params_deterministic_and_shaped():
    rng = RandomSource(3)
    params = init_params(
        8, 3, (16,), (16,), (8,), has_side=True, learn_variance=False, rng=rng
    )
    assert params["enc_w0"].shape == (8, 16)
    assert params["dx_w1"].shape == (16, 8)
    assert float(params["s_b"].ravel()[0]) == -2.0
    again = init_params(
        8, 3, (16,), (16,), (8,), has_side=True, learn_variance=False,
        rng=RandomSource(3),
    )
    for name in params:
        np.testing.assert_array_equal(params[name], again[name])
