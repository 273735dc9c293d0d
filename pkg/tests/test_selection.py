import logging

import numpy as np
import pytest

from gwcca.dataset import SpatialDataset
from gwcca.errors import (
    ConfigurationError,
    DegenerateFitError,
    InputError,
    ParameterError,
)
from gwcca.kernels import KernelSpec
from gwcca.selection import (
    STOP_EARLY,
    STOP_EXHAUSTED,
    SelectionConfig,
    early_stop_scan,
    early_stop_trace,
    loading_threshold,
    rgof,
    screen_variates,
    select_reportable,
    support_ratio,
)


class TestRgof:
    def test_full_rank_exactly_zero(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            rhos = rng.uniform(0, 1, (rng.integers(1, 50), rng.integers(1, 6)))
            assert rgof(rhos, rhos.shape[1]) == 0.0

    def test_single_location_value(self):
        assert rgof(np.array([[0.8, 0.6]]), 1) == pytest.approx(0.36, abs=1e-15)

    def test_equal_correlations_give_linear_share(self):
        rhos = np.full((10, 4), 0.5)
        for c in range(1, 5):
            assert rgof(rhos, c) == pytest.approx(1 - c / 4, abs=1e-12)

    def test_nonincreasing_in_c(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            rhos = rng.uniform(0, 1, (30, 5))
            values = [rgof(rhos, c) for c in range(1, 6)]
            assert np.all(np.diff(values) <= 1e-15)

    def test_zero_matrix_rejected(self):
        with pytest.raises(DegenerateFitError):
            rgof(np.zeros((5, 3)), 1)

    def test_c_out_of_range(self):
        with pytest.raises(ParameterError):
            rgof(np.ones((5, 3)), 4)


class TestLoadingThreshold:
    def test_constant_pool(self):
        assert loading_threshold(np.full(50, 0.7), 0.95) == pytest.approx(0.7)

    def test_boundary_pool_interpolation(self):
        # 95 values at 0.1 and 5 at 1.0; the 0.95 quantile interpolates
        # between order statistics 94 and 95: 0.1 + 0.05 * 0.9 = 0.145.
        pool = np.array([0.1] * 95 + [1.0] * 5)
        assert loading_threshold(pool, 0.95) == pytest.approx(0.145, abs=1e-12)

    def test_phi_one_is_max(self):
        rng = np.random.default_rng(2)
        pool = rng.standard_normal(200)
        assert loading_threshold(pool, 1.0) == np.abs(pool).max()

    def test_empty_pool(self):
        with pytest.raises(InputError):
            loading_threshold(np.array([]), 0.95)


class TestSupportRatio:
    def test_full_support(self):
        assert support_ratio(np.full((6, 4), 2.0), 1.0, 0.5) == 1.0

    def test_no_support(self):
        assert support_ratio(np.full((6, 4), 0.5), 1.0, 0.5) == 0.0

    def test_half_support(self):
        loadings = np.array(
            [[2.0, 2.0], [2.0, 2.0], [0.0, 0.0], [0.0, 2.0]]
        )  # locations 0,1 meet alpha=1.0; 3 has only half
        assert support_ratio(loadings, 1.0, 1.0) == 0.5

    def test_common_rescaling_invariance(self):
        rng = np.random.default_rng(3)
        loadings = rng.standard_normal((40, 6))
        tau = 0.8
        base = support_ratio(loadings, tau, 0.5)
        assert support_ratio(3.7 * loadings, 3.7 * tau, 0.5) == base

    def test_location_relabeling_invariance(self):
        rng = np.random.default_rng(4)
        loadings = rng.standard_normal((40, 6))
        perm = rng.permutation(40)
        assert support_ratio(loadings, 0.5, 0.3) == support_ratio(
            loadings[perm], 0.5, 0.3
        )


class TestScreenVariates:
    def test_equal_supports_all_retained(self):
        assert screen_variates([0.4, 0.4, 0.4], 0.8) == (0, 1, 2)

    def test_relative_cut(self):
        # mean 0.7, cut 0.56: third variate drops
        assert screen_variates([1.0, 1.0, 0.1], 0.8) == (0, 1)

    def test_zero_support_removed_when_others_positive(self):
        assert 2 not in screen_variates([0.6, 0.5, 0.0], 0.8)

    def test_beta_zero_retains_all(self):
        assert screen_variates([0.9, 0.0, 0.2], 0.0) == (0, 1, 2)

    def test_first_variate_always_kept(self):
        assert 0 in screen_variates([0.0, 1.0, 1.0], 0.8)


class TestSelectReportable:
    def test_case_study_means(self):
        means = [0.981, 0.897, 0.620, 0.341]
        assert select_reportable(means, 0.40) == (0, 1, 2)

    def test_all_below_threshold_warns(self, caplog):
        with caplog.at_level(logging.WARNING, logger="gwcca.selection"):
            assert select_reportable([0.2, 0.1], 0.40) == ()
        assert any("reporting threshold" in rec.message for rec in caplog.records)

    def test_zero_threshold_reports_all(self):
        assert select_reportable([0.5, 0.3, 0.1], 0.0) == (0, 1, 2)


class TestEarlyStopTrace:
    def test_documented_example(self):
        chosen, stop, reason = early_stop_trace(
            [0.50, 0.30, 0.298, 0.297], patience=2, improvement_tol=0.01
        )
        assert (chosen, stop, reason) == (1, 3, STOP_EARLY)

    def test_always_improving_exhausts(self):
        trace = [0.5 * 0.9**t for t in range(12)]
        chosen, stop, reason = early_stop_trace(trace, 2, 0.01)
        assert reason == STOP_EXHAUSTED
        assert chosen == 11  # minimizer of a decreasing trace

    @pytest.mark.parametrize("patience", [2, 5, 10])
    def test_stops_exactly_after_patience_stale_steps(self, patience):
        good, stale = 6, 15
        values = [1.0]
        for _ in range(good):
            values.append(values[-1] * (1 - 0.05))  # 5% improvements
        for _ in range(stale):
            values.append(values[-1] * (1 - 0.002))  # 0.2% improvements
        chosen, stop, reason = early_stop_trace(values, patience, 0.01)
        assert reason == STOP_EARLY
        assert stop == good + patience
        assert chosen == good

    @pytest.mark.parametrize("patience", [2, 5, 10])
    def test_reset_on_recovery(self, patience):
        # patience - 1 stale steps, then a big improvement, then stale again
        values = [1.0]
        for _ in range(patience - 1):
            values.append(values[-1] * 0.999)
        values.append(values[-1] * 0.5)
        for _ in range(patience):
            values.append(values[-1] * 0.999)
        chosen, stop, reason = early_stop_trace(values, patience, 0.01)
        assert reason == STOP_EARLY
        assert stop == len(values) - 1
        assert chosen == patience  # the candidate that made the big jump

    def test_worsening_counts_as_stale(self):
        chosen, stop, reason = early_stop_trace([0.5, 0.6, 0.7], 2, 0.01)
        assert (chosen, reason) == (0, STOP_EARLY)

    def test_empty_trace_rejected(self):
        with pytest.raises(InputError):
            early_stop_trace([], 2, 0.01)


def scan_dataset(seed=5, n=150):
    rng = np.random.default_rng(seed)
    coords = rng.random((n, 2))
    X = rng.standard_normal((n, 2))
    Y = 0.7 * X + 0.5 * rng.standard_normal((n, 2))
    return SpatialDataset(ids=[str(i) for i in range(n)], coords=coords, X=X, Y=Y)


class TestEarlyStopScan:
    def test_scan_is_consistent_with_trace_rule(self):
        ds = scan_dataset()
        config = SelectionConfig()
        ks = [20, 30, 45, 67, 100, 150]
        chosen, records, reason = early_stop_scan(
            ds, KernelSpec("gaussian", adaptive_k=1), ks, config
        )
        trace = [rec.rgof_at_dimension for rec in records]
        t_chosen, t_stop, t_reason = early_stop_trace(
            trace + [np.inf] if reason == STOP_EARLY else trace,
            config.patience,
            config.improvement_tol,
        )
        assert reason in (STOP_EARLY, STOP_EXHAUSTED)
        assert chosen in ks
        if reason == STOP_EARLY:
            assert chosen == records[len(records) - 1 - config.patience].candidate_k

    def test_records_carry_full_rgof_profile(self):
        ds = scan_dataset(seed=6)
        chosen, records, _ = early_stop_scan(
            ds, KernelSpec("gaussian", adaptive_k=1), [30, 60, 100], SelectionConfig()
        )
        for rec in records:
            assert rec.rgof_by_c.shape == (2,)
            assert rec.rgof_by_c[-1] == 0.0
            assert np.all(np.diff(rec.rgof_by_c) <= 1e-15)
            assert 1 <= rec.scan_dimension <= 2

    def test_all_degenerate_candidates_rejected(self):
        ds = scan_dataset(seed=7, n=60)
        with pytest.raises(ConfigurationError):
            early_stop_scan(
                ds,
                KernelSpec("boxcar", adaptive_k=1),
                [2, 3],  # below p + q + 2 positive weights
                SelectionConfig(),
            )

    def test_candidates_must_ascend(self):
        ds = scan_dataset(seed=8, n=60)
        with pytest.raises(ConfigurationError):
            early_stop_scan(
                ds, KernelSpec("gaussian", adaptive_k=1), [30, 30], SelectionConfig()
            )


class TestSelectionConfig:
    def test_defaults_valid(self):
        cfg = SelectionConfig()
        assert cfg.phi == 0.95 and cfg.beta == 0.8 and cfg.patience == 2

    @pytest.mark.parametrize(
        "kw",
        [
            {"phi": 0.0},
            {"alpha": 1.5},
            {"beta": -0.1},
            {"patience": 0},
            {"improvement_tol": 0.0},
            {"report_threshold": 1.2},
        ],
    )
    def test_invalid_values_rejected(self, kw):
        with pytest.raises(ParameterError):
            SelectionConfig(**kw)
