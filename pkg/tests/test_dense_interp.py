import numpy as np
import pytest

from smokeflow.dense_interp import (
    InterpParams,
    anchor_mask,
    dct2,
    filtering_tensor,
    fixed_point_step,
    idct2,
    interpolate,
    laplacian_eigenvalues,
)
from smokeflow.sparse_flow import SparseFlow


def make_sparse(shape, anchors_xy, disps):
    anchors = np.asarray(anchors_xy, dtype=float)
    return SparseFlow(
        anchors=anchors,
        displacements=np.asarray(disps, dtype=float),
        shape=shape,
        stabilities=np.full(len(anchors), 0.2),
    )


def random_sparse(shape, rng, n_lo=4, n_hi=14, scale=3.0):
    h, w = shape
    n = int(rng.integers(n_lo, n_hi))
    flat = rng.choice(h * w, size=n, replace=False)
    anchors = np.stack([flat % w, flat // w], axis=1).astype(float)
    disps = rng.normal(0, scale, (n, 2))
    return make_sparse(shape, anchors, disps)


def neumann_laplacian_1d(n):
    lap = np.diag(-2.0 * np.ones(n)) + np.diag(np.ones(n - 1), 1) + np.diag(np.ones(n - 1), -1)
    lap[0, 0] = -1.0
    lap[-1, -1] = -1.0
    return lap


def dense_oracle(sparse, lam, component):
    """Direct solve of the normal equations with the discrete bilaplacian."""
    h, w = sparse.shape
    lap = np.kron(neumann_laplacian_1d(h), np.eye(w)) + np.kron(np.eye(h), neumann_laplacian_1d(w))
    mask = anchor_mask(sparse).ravel().astype(float)
    u = np.zeros(h * w)
    cols = sparse.anchors[:, 0].astype(int)
    rows = sparse.anchors[:, 1].astype(int)
    u[rows * w + cols] = sparse.displacements[:, component]
    a = np.diag(mask) + lam * (lap.T @ lap)
    return np.linalg.solve(a, mask * u).reshape(h, w)


def interp_energy(z, u, mask, lam, shape):
    """Eq-style objective via Parseval: data misfit + lam * ||L z||^2."""
    s = laplacian_eigenvalues(*shape)
    return float(((z - u)[mask] ** 2).sum() + lam * ((s * dct2(z)) ** 2).sum())


class TestDCT:
    def test_constant_is_dc_only(self):
        g = np.full((6, 9), 0.7)
        coeffs = dct2(g)
        assert coeffs[0, 0] == pytest.approx(0.7 * np.sqrt(6 * 9), abs=1e-12)
        coeffs[0, 0] = 0.0
        np.testing.assert_allclose(coeffs, 0.0, atol=1e-12)

    def test_roundtrip(self):
        rng = np.random.default_rng(3)
        g = rng.normal(0, 1, (8, 8))
        np.testing.assert_allclose(idct2(dct2(g)), g, atol=1e-10)

    def test_cosine_mode_coefficient(self):
        # g[i, j] = cos(k1 pi (2i+1) / (2 n1)) * cos(k2 pi (2j+1) / (2 n2))
        # has a single orthonormal-DCT coefficient sqrt(n1/2) * sqrt(n2/2)
        n1, n2, k1, k2 = 8, 12, 3, 5
        i = np.arange(n1)[:, None]
        j = np.arange(n2)[None, :]
        g = np.cos(k1 * np.pi * (2 * i + 1) / (2 * n1)) * np.cos(k2 * np.pi * (2 * j + 1) / (2 * n2))
        coeffs = dct2(g)
        expected = np.sqrt(n1 / 2.0) * np.sqrt(n2 / 2.0)
        assert coeffs[k1, k2] == pytest.approx(expected, abs=1e-10)
        coeffs[k1, k2] = 0.0
        np.testing.assert_allclose(coeffs, 0.0, atol=1e-10)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            dct2(np.zeros((0, 4)))


class TestFilteringTensor:
    def test_garcia_dc_is_one(self):
        for lam in (0.1, 1.0, 42.0):
            assert filtering_tensor(8, 8, lam, "garcia")[0, 0] == 1.0

    def test_paper_literal_dc(self):
        assert filtering_tensor(8, 8, 1.0, "paper_literal")[0, 0] == pytest.approx(0.2, abs=1e-12)

    def test_zero_lambda_no_smoothing(self):
        np.testing.assert_array_equal(filtering_tensor(5, 7, 0.0, "garcia"), np.ones((5, 7)))

    def test_values_in_unit_interval(self):
        for variant in ("garcia", "paper_literal"):
            g = filtering_tensor(9, 6, 3.0, variant)
            assert g.min() > 0.0 and g.max() <= 1.0

    def test_unknown_variant(self):
        with pytest.raises(ValueError):
            filtering_tensor(4, 4, 1.0, "other")


class TestInterpolate:
    def test_constant_samples_give_constant_field(self):
        rng = np.random.default_rng(5)
        sparse = random_sparse((16, 16), rng)
        sparse = make_sparse((16, 16), sparse.anchors, np.tile([1.5, -2.0], (len(sparse), 1)))
        flow = interpolate(sparse, params=InterpParams(lam=1.0, tol=1e-9, max_iters=5000))
        np.testing.assert_allclose(flow[..., 0], 1.5, atol=1e-6)
        np.testing.assert_allclose(flow[..., 1], -2.0, atol=1e-6)

    def test_full_mask_zero_lambda_is_identity(self):
        rng = np.random.default_rng(6)
        h, w = 6, 7
        anchors = [(x, y) for y in range(h) for x in range(w)]
        disps = rng.normal(0, 2, (h * w, 2))
        sparse = make_sparse((h, w), anchors, disps)
        flow = interpolate(sparse, params=InterpParams(lam=0.0))
        np.testing.assert_allclose(flow[..., 0], disps[:, 0].reshape(h, w), atol=1e-8)
        np.testing.assert_allclose(flow[..., 1], disps[:, 1].reshape(h, w), atol=1e-8)

    def test_matches_dense_oracle(self):
        rng = np.random.default_rng(7)
        for lam in (0.1, 1.0, 10.0):
            sparse = random_sparse((8, 8), rng)
            flow = interpolate(sparse, params=InterpParams(lam=lam, tol=1e-9, max_iters=20000))
            for k in (0, 1):
                np.testing.assert_allclose(flow[..., k], dense_oracle(sparse, lam, k), atol=1e-5)

    def test_empty_sparse_raises(self):
        sparse = make_sparse((8, 8), np.zeros((0, 2)), np.zeros((0, 2)))
        with pytest.raises(ValueError, match="no sparse data"):
            interpolate(sparse)

    def test_wrong_mask_rejected(self):
        sparse = make_sparse((8, 8), [(2, 2)], [(1.0, 0.0)])
        bad = np.zeros((8, 8), dtype=bool)
        bad[0, 0] = True
        with pytest.raises(ValueError):
            interpolate(sparse, data_mask=bad)

    def test_energy_monotone_along_iterations(self):
        rng = np.random.default_rng(8)
        sparse = random_sparse((10, 10), rng)
        lam = 2.0
        mask = anchor_mask(sparse)
        gamma = filtering_tensor(10, 10, lam, "garcia")
        u = np.zeros((10, 10))
        u[sparse.anchors[:, 1].astype(int), sparse.anchors[:, 0].astype(int)] = (
            sparse.displacements[:, 0]
        )
        z = u.copy()
        prev = interp_energy(z, u, mask, lam, (10, 10))
        for _ in range(200):
            z = fixed_point_step(z, u, mask, gamma)
            cur = interp_energy(z, u, mask, lam, (10, 10))
            assert cur <= prev + 1e-12
            prev = cur

    def test_linearity_in_the_data(self):
        rng = np.random.default_rng(9)
        sparse = random_sparse((12, 12), rng)
        params = InterpParams(lam=1.0, tol=1e-10, max_iters=20000)
        flow1 = interpolate(sparse, params=params)
        scaled = make_sparse((12, 12), sparse.anchors, 2.5 * sparse.displacements)
        flow2 = interpolate(scaled, params=params)
        np.testing.assert_allclose(flow2, 2.5 * flow1, atol=1e-6)

    def test_finite_output(self):
        rng = np.random.default_rng(10)
        sparse = random_sparse((20, 14), rng, scale=30.0)
        flow = interpolate(sparse, params=InterpParams(lam=5.0))
        assert np.all(np.isfinite(flow))

    def test_paper_literal_shrinks_constants(self):
        rng = np.random.default_rng(11)
        sparse = random_sparse((12, 12), rng)
        c = np.array([2.0, -1.0])
        sparse = make_sparse((12, 12), sparse.anchors, np.tile(c, (len(sparse), 1)))
        flow = interpolate(
            sparse, params=InterpParams(lam=1.0, tensor_variant="paper_literal", tol=1e-10, max_iters=20000)
        )
        assert np.hypot(flow[..., 0], flow[..., 1]).max() < np.hypot(*c)
