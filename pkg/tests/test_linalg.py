import numpy as np
import pytest

from archetypal.linalg import matmul, pca, row_softmax, simplex_vertices


def test_matmul_matches_numpy(rng):
    a = rng.normal(size=(4, 6))
    b = rng.normal(size=(6, 3))
    np.testing.assert_array_equal(matmul(a, b), a @ b)


def test_matmul_names_both_shapes():
    with pytest.raises(ValueError, match=r"\(2, 3\).*\(4, 2\)"):
        matmul(np.ones((2, 3)), np.ones((4, 2)))


def test_simplex_vertices_single_point():
    v = simplex_vertices(1)
    assert v.shape == (1, 0)


@pytest.mark.parametrize("k", [2, 3, 4, 5, 6])
def test_simplex_vertices_regular_unit_edge(k):
    v = simplex_vertices(k)
    assert v.shape == (k, k - 1)
    np.testing.assert_allclose(v.mean(axis=0), 0.0, atol=1e-12)
    for i in range(k):
        for j in range(i + 1, k):
            np.testing.assert_allclose(np.linalg.norm(v[i] - v[j]), 1.0, atol=1e-12)
    radii = np.linalg.norm(v, axis=1)
    np.testing.assert_allclose(radii, radii[0], atol=1e-12)


def test_simplex_vertices_rejects_nonpositive():
    with pytest.raises(ValueError):
        simplex_vertices(0)


def test_row_softmax_matches_direct(rng):
    z = rng.normal(size=(5, 4))
    direct = np.exp(z) / np.exp(z).sum(axis=1, keepdims=True)
    np.testing.assert_allclose(row_softmax(z), direct, atol=1e-12)


def test_row_softmax_large_logits_stable():
    z = np.array([[1000.0, 1001.0, 999.0]])
    out = row_softmax(z)
    assert np.all(np.isfinite(out))
    np.testing.assert_allclose(out.sum(axis=1), 1.0, atol=1e-12)


def test_pca_matches_dense_eigensolver(rng):
    x = rng.normal(size=(40, 6)) @ rng.normal(size=(6, 6))
    comps, projected, ev = pca(x, 6)
    centered = x - x.mean(axis=0)
    cov = centered.T @ centered / (len(x) - 1)
    ref_vals = np.sort(np.linalg.eigvalsh(cov))[::-1]
    np.testing.assert_allclose(ev, ref_vals, atol=1e-8)
    # components diagonalize the covariance
    np.testing.assert_allclose(comps @ cov @ comps.T, np.diag(ev), atol=1e-8)
    np.testing.assert_allclose(comps @ comps.T, np.eye(6), atol=1e-10)
    np.testing.assert_allclose(projected, centered @ comps.T, atol=1e-12)


def test_pca_recovers_planted_plane(rng):
    basis = np.linalg.qr(rng.normal(size=(8, 2)))[0].T
    coords = rng.normal(size=(200, 2)) * [5.0, 2.0]
    x = coords @ basis + 0.01 * rng.normal(size=(200, 8))
    comps, _, ev = pca(x, 2)
    # the two components span the planted plane
    residual = comps - (comps @ basis.T) @ basis
    assert np.abs(residual).max() < 0.01
    assert ev[0] > ev[1] > 1.0


def test_pca_sign_convention(rng):
    x = rng.normal(size=(30, 4))
    comps, _, _ = pca(x, 4)
    for row in comps:
        assert row[np.argmax(np.abs(row))] > 0


def test_pca_explained_variance_sorted(rng):
    x = rng.normal(size=(50, 5))
    _, _, ev = pca(x, 5)
    assert np.all(np.diff(ev) <= 1e-12)


def test_pca_rejects_bad_dimensions(rng):
    x = rng.normal(size=(10, 4))
    with pytest.raises(ValueError):
        pca(x, 0)
    with pytest.raises(ValueError):
        pca(x, 5)
    with pytest.raises(ValueError):
        pca(x[:1], 1)
