import numpy as np
import pytest

from gwcca.errors import (
    DegenerateNeighborhoodError,
    DegenerateVarianceError,
)
from gwcca.kernels import KernelSpec, weight_vector
from gwcca.moments import gw_corr, gw_cov, gw_cov_matrices, gw_mean, gw_std


class TestGwMean:
    def test_uniform_is_arithmetic_mean(self):
        x = np.random.default_rng(0).standard_normal(50)
        assert gw_mean(x, np.ones(50)) == pytest.approx(x.mean(), abs=1e-14)

    def test_point_mass(self):
        assert gw_mean([1.0, 2.0, 3.0], [1.0, 0.0, 0.0]) == 1.0

    def test_weighted_value(self):
        # (0*1 + 10*3) / 4
        assert gw_mean([0.0, 10.0], [1.0, 3.0]) == 7.5

    def test_zero_weights_rejected(self):
        with pytest.raises(DegenerateNeighborhoodError):
            gw_mean([1.0, 2.0], [0.0, 0.0])


class TestGwStd:
    def test_constant_is_zero(self):
        assert gw_std(np.full(10, 3.3), np.ones(10)) == 0.0

    def test_two_point_value(self):
        assert gw_std([0.0, 10.0], [1.0, 1.0]) == 5.0

    def test_uniform_is_population_std(self):
        x = np.random.default_rng(1).standard_normal(200)
        assert gw_std(x, np.ones(200)) == pytest.approx(x.std(), abs=1e-12)


class TestGwCov:
    def test_self_covariance_is_variance(self):
        x = np.random.default_rng(2).standard_normal(60)
        w = np.random.default_rng(3).random(60)
        assert gw_cov(x, x, w) == pytest.approx(gw_std(x, w) ** 2, abs=1e-12)

    def test_constants_give_zero(self):
        assert gw_cov(np.full(5, 2.0), np.full(5, -1.0), np.ones(5)) == 0.0

    def test_uniform_matches_population_covariance(self):
        rng = np.random.default_rng(4)
        x, y = rng.standard_normal((2, 300))
        expected = np.cov(x, y, ddof=0)[0, 1]
        assert gw_cov(x, y, np.ones(300)) == pytest.approx(expected, abs=1e-12)


class TestGwCorr:
    def test_perfect_positive(self):
        x = np.random.default_rng(5).standard_normal(40)
        assert gw_corr(x, 2 * x + 3, np.ones(40)) == pytest.approx(1.0, abs=1e-12)

    def test_perfect_negative(self):
        x = np.random.default_rng(6).standard_normal(40)
        assert gw_corr(x, -x, np.ones(40)) == pytest.approx(-1.0, abs=1e-12)

    def test_uniform_matches_pearson(self):
        rng = np.random.default_rng(7)
        x, y = rng.standard_normal((2, 500))
        assert gw_corr(x, y, np.ones(500)) == pytest.approx(
            np.corrcoef(x, y)[0, 1], abs=1e-12
        )

    def test_symmetry_exact(self):
        rng = np.random.default_rng(8)
        x, y = rng.standard_normal((2, 80))
        w = rng.random(80)
        assert gw_corr(x, y, w) == gw_corr(y, x, w)

    def test_clamped_to_unit_interval(self):
        rng = np.random.default_rng(9)
        for _ in range(50):
            x = rng.standard_normal(12)
            w = rng.random(12)
            assert -1.0 <= gw_corr(x, 0.5 * x + 1e-9 * rng.standard_normal(12), w) <= 1.0

    def test_degenerate_variance_names_variable(self):
        with pytest.raises(DegenerateVarianceError, match="'x'"):
            gw_corr(np.full(8, 1.0), np.arange(8.0), np.ones(8))
        with pytest.raises(DegenerateVarianceError, match="'y'"):
            gw_corr(np.arange(8.0), np.full(8, 1.0), np.ones(8))


class TestGwCovMatrices:
    def setup_method(self):
        rng = np.random.default_rng(10)
        self.X = rng.standard_normal((120, 3))
        self.Y = rng.standard_normal((120, 4))
        self.w = rng.random(120) + 0.05

    def test_uniform_matches_global_population_covariance(self):
        cov = gw_cov_matrices(self.X, self.Y, np.ones(120))
        assert np.allclose(cov.sigma_xx, np.cov(self.X.T, ddof=0), rtol=1e-10)
        assert np.allclose(cov.sigma_yy, np.cov(self.Y.T, ddof=0), rtol=1e-10)
        full = np.cov(np.hstack([self.X, self.Y]).T, ddof=0)
        assert np.allclose(cov.sigma_xy, full[:3, 3:], rtol=1e-10, atol=1e-12)

    def test_scalar_consistency(self):
        x = self.X[:, :1]
        y = self.Y[:, :1]
        cov = gw_cov_matrices(x, y, self.w)
        assert cov.sigma_xx[0, 0] == pytest.approx(
            gw_std(x[:, 0], self.w) ** 2, abs=1e-12
        )
        assert cov.sigma_xy[0, 0] == pytest.approx(
            gw_cov(x[:, 0], y[:, 0], self.w), abs=1e-12
        )

    def test_entrywise_agrees_with_gw_cov(self):
        cov = gw_cov_matrices(self.X, self.Y, self.w)
        for a in range(3):
            for b in range(3):
                assert cov.sigma_xx[a, b] == pytest.approx(
                    gw_cov(self.X[:, a], self.X[:, b], self.w), abs=1e-12
                )

    def test_duplicate_column_exactly_singular(self):
        X = np.column_stack([self.X[:, 0], self.X[:, 0], self.X[:, 1]])
        cov = gw_cov_matrices(X, self.Y, self.w)
        eigvals = np.linalg.eigvalsh(cov.sigma_xx)
        assert abs(eigvals[0]) < 1e-12 * eigvals[-1]

    def test_symmetric_and_psd(self):
        cov = gw_cov_matrices(self.X, self.Y, self.w)
        assert np.array_equal(cov.sigma_xx, cov.sigma_xx.T)
        assert np.array_equal(cov.sigma_yy, cov.sigma_yy.T)
        eig = np.linalg.eigvalsh(cov.sigma_xx)
        assert eig[0] >= -1e-10 * np.trace(cov.sigma_xx) / 3

    def test_weight_scale_invariance(self):
        base = gw_cov_matrices(self.X, self.Y, self.w)
        doubled = gw_cov_matrices(self.X, self.Y, 2.0 * self.w)
        assert np.array_equal(base.sigma_xx, doubled.sigma_xx)
        assert np.array_equal(base.sigma_xy, doubled.sigma_xy)
        scaled = gw_cov_matrices(self.X, self.Y, 3.7 * self.w)
        assert np.allclose(base.sigma_xx, scaled.sigma_xx, rtol=1e-12)

    def test_too_few_positive_weights(self):
        w = np.zeros(120)
        w[:5] = 1.0  # p + q + 2 = 9 needed
        with pytest.raises(DegenerateNeighborhoodError):
            gw_cov_matrices(self.X, self.Y, w)

    def test_weight_vector_input_carries_target(self):
        coords = np.random.default_rng(11).random((120, 2))
        wv = weight_vector(coords, 17, KernelSpec("gaussian", adaptive_k=30))
        cov = gw_cov_matrices(self.X, self.Y, wv)
        assert cov.target_index == 17
        assert cov.weight_mass == pytest.approx(wv.weights.sum())
