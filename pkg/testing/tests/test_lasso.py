from dataclasses import replace

import numpy as np
from numpy.testing import assert_allclose, assert_array_equal
from django.test import SimpleTestCase
from django.test.utils import override_settings

from shrinklasso.exceptions import DegenerateResponse, InvalidParameter
from shrinklasso.lasso import (
    LambdaMode, LassoConfig, cross_validate_path, fit_tuned, fold_assignment,
    lambda_grid_default, lambda_max, lasso_fit, lasso_objective, lasso_path,
    resolve_lambda, select_lambda_cv, soft_threshold,
)
from shrinklasso.model import (
    EstimatorKind, FLAG_NON_CONVERGENCE, RegressionData, ols_fit,
)

from .utils import synthetic_data


def orthonormal_data(n, p, seed):
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((n, p)))
    y = Q @ rng.normal(0.0, 2.0, p) + rng.standard_normal(n)
    return RegressionData(Q, y)


class SoftThresholdTests(SimpleTestCase):
    def test_scalar(self):
        self.assertEqual(soft_threshold(3.0, 1.0), 2.0)
        self.assertEqual(soft_threshold(-3.0, 1.0), -2.0)
        self.assertEqual(soft_threshold(0.5, 1.0), 0.0)

    def test_no_negative_zero(self):
        value = soft_threshold(-0.5, 1.0)
        self.assertEqual(np.copysign(1.0, value), 1.0)

    def test_vector(self):
        assert_array_equal(soft_threshold(np.array([-2.0, 0.2, 1.5]), 0.5),
                           [-1.5, 0.0, 1.0])

    def test_negative_threshold(self):
        self.assertRaises(InvalidParameter, soft_threshold, 1.0, -0.1)


class LassoConfigTests(SimpleTestCase):
    def test_validation(self):
        self.assertRaises(InvalidParameter, LassoConfig, lam=-1.0)
        self.assertRaises(InvalidParameter, LassoConfig, tol=0.0)
        self.assertRaises(InvalidParameter, LassoConfig, max_iter=0)
        self.assertRaises(InvalidParameter, LassoConfig,
                          lambda_grid=(1.0, 2.0))

    @override_settings(SHRINKLASSO_LASSO={'MAX_ITER': 77, 'CV_FOLDS': 4})
    def test_from_settings(self):
        cfg = LassoConfig.from_settings(lam=2.0)
        self.assertEqual(cfg.max_iter, 77)
        self.assertEqual(cfg.cv_folds, 4)
        self.assertEqual(cfg.lam, 2.0)
        self.assertIs(cfg.mode, LambdaMode.FIXED)

    def test_mode_from_string(self):
        self.assertIs(LassoConfig(mode='cv').mode, LambdaMode.CV)


class LassoFitTests(SimpleTestCase):
    def test_orthonormal_design_is_soft_thresholded_ols(self):
        rng = np.random.default_rng(11)
        for instance in range(100):
            p = int(rng.integers(1, 21))
            data = orthonormal_data(p + 15, p, seed=instance)
            lam = float(rng.uniform(0.0, 4.0))
            fit = lasso_fit(data, LassoConfig(lam=lam, tol=1e-12))
            expected = soft_threshold(data.X.T @ data.y, lam / 2.0)
            assert_allclose(fit.beta, expected, atol=1e-8)

    def test_zero_penalty_is_ols(self):
        data = synthetic_data(n=50, p=5, seed=4)
        fit = lasso_fit(data, LassoConfig(lam=0.0, tol=1e-12))
        assert_allclose(fit.beta, ols_fit(data).beta, atol=1e-7)
        self.assertIs(fit.kind, EstimatorKind.ULE)

    def test_penalty_above_lambda_max_gives_zero(self):
        data = synthetic_data(n=50, p=5, seed=4)
        fit = lasso_fit(data, LassoConfig(lam=lambda_max(data) * 1.0001))
        assert_array_equal(fit.beta, np.zeros(5))

    def test_optimality_conditions(self):
        data = synthetic_data(n=60, p=8, seed=5, r=0.5)
        lam = 0.1 * lambda_max(data)
        fit = lasso_fit(data, LassoConfig(lam=lam, tol=1e-12))
        grad = data.X.T @ (data.y - data.X @ fit.beta)
        active = fit.beta != 0
        assert_allclose(grad[active], 0.5 * lam * np.sign(fit.beta[active]),
                        atol=1e-6 * lam)
        self.assertTrue(np.all(np.abs(grad[~active]) <= 0.5 * lam * (1 + 1e-6)))

    def test_objective_non_increasing(self):
        data = synthetic_data(n=40, p=6, seed=6, r=0.8)
        fit = lasso_fit(data, LassoConfig(lam=3.0))
        trace = np.array(fit.objective_trace)
        self.assertTrue(np.all(np.diff(trace) <= 1e-9 * trace[:-1]))
        self.assertAlmostEqual(trace[-1],
                               lasso_objective(data, fit.beta, 3.0),
                               delta=1e-9 * trace[-1])

    def test_non_convergence_is_flagged(self):
        data = synthetic_data(n=40, p=6, seed=6, r=0.9)
        with self.assertLogs('shrinklasso.lasso', level='WARNING'):
            fit = lasso_fit(data, LassoConfig(lam=1.0, max_iter=1,
                                              tol=1e-15))
        self.assertIn(FLAG_NON_CONVERGENCE, fit.flags)
        self.assertFalse(fit.converged)
        self.assertEqual(fit.n_iter, 1)

    def test_warm_start_reaches_same_solution(self):
        data = synthetic_data(n=40, p=6, seed=8)
        cfg = LassoConfig(lam=2.0, tol=1e-12)
        cold = lasso_fit(data, cfg)
        warm = lasso_fit(data, cfg, warm_start=np.ones(6))
        assert_allclose(warm.beta, cold.beta, atol=1e-8)
        self.assertRaises(InvalidParameter, lasso_fit, data, cfg,
                          warm_start=np.ones(5))


class PathTests(SimpleTestCase):
    def setUp(self):
        self.data = synthetic_data(n=60, p=8, seed=9)

    def test_default_grid(self):
        grid = lambda_grid_default(self.data, 10)
        self.assertEqual(len(grid), 10)
        self.assertAlmostEqual(grid[0], lambda_max(self.data))
        self.assertAlmostEqual(grid[-1], 1e-3 * lambda_max(self.data))

    def test_degenerate_response(self):
        data = RegressionData(np.eye(4, 3), np.zeros(4))
        self.assertRaises(DegenerateResponse, lambda_grid_default, data, 5)

    def test_path_sparsity(self):
        path = lasso_path(self.data, LassoConfig(grid_length=15, tol=1e-10))
        counts = path.nonzero_counts()
        self.assertEqual(counts[0], 0)
        self.assertEqual(counts[-1], 8)
        self.assertEqual(len(path.betas), 15)

    def test_path_matches_cold_fits(self):
        cfg = LassoConfig(tol=1e-12)
        grid = (50.0, 10.0, 1.0)
        path = lasso_path(self.data, cfg, grid)
        for lam, beta in zip(grid, path.betas):
            cold = lasso_fit(self.data, replace(cfg, lam=lam))
            assert_allclose(beta, cold.beta, atol=1e-8)

    def test_path_requires_decreasing_grid(self):
        self.assertRaises(InvalidParameter, lasso_path, self.data,
                          LassoConfig(), (1.0, 2.0))


class FoldTests(SimpleTestCase):
    def test_balanced_and_deterministic(self):
        labels = fold_assignment(23, 5, seed=3)
        counts = np.bincount(labels)
        self.assertEqual(sorted(counts), [4, 4, 5, 5, 5])
        assert_array_equal(labels, fold_assignment(23, 5, seed=3))
        self.assertFalse(np.array_equal(labels, fold_assignment(23, 5, 4)))

    def test_invalid_folds(self):
        self.assertRaises(InvalidParameter, fold_assignment, 5, 1, 0)
        self.assertRaises(InvalidParameter, fold_assignment, 5, 6, 0)


class TuningTests(SimpleTestCase):
    def setUp(self):
        beta = np.array([3.0, -2.0, 0.0, 0.0, 0.0, 0.0])
        self.data = synthetic_data(n=80, p=6, beta=beta, seed=12)
        self.cfg = LassoConfig(mode=LambdaMode.CV, cv_folds=5, grid_length=12,
                               seed=1, tol=1e-9)

    def test_cv_selects_grid_value(self):
        grid = lambda_grid_default(self.data, 12)
        lam = select_lambda_cv(self.data, self.cfg)
        self.assertIn(lam, grid)
        self.assertEqual(lam, select_lambda_cv(self.data, self.cfg))

    def test_cv_path_minimum(self):
        path = cross_validate_path(self.data, self.cfg)
        best = int(np.argmin(path.cv_errors))
        self.assertEqual(path.lambdas[best],
                         select_lambda_cv(self.data, self.cfg))

    def test_single_value_grid(self):
        cfg = replace(self.cfg, lambda_grid=(4.0,))
        self.assertEqual(select_lambda_cv(self.data, cfg), 4.0)

    def test_resolve_modes(self):
        self.assertEqual(
            resolve_lambda(self.data, replace(self.cfg, mode='sqrt_n')),
            0.5 * np.sqrt(80),
        )
        self.assertEqual(
            resolve_lambda(self.data, replace(self.cfg, mode='fixed',
                                              lam=1.5)),
            1.5,
        )

    def test_fit_tuned(self):
        fit = fit_tuned(self.data, self.cfg)
        self.assertEqual(fit.lam, select_lambda_cv(self.data, self.cfg))
        self.assertIs(fit.kind, EstimatorKind.ULE)

    def test_pure_noise_picks_heavy_penalty(self):
        top_quartile = 0
        for seed in range(50):
            rng = np.random.default_rng(500 + seed)
            X = rng.standard_normal((60, 6))
            data = RegressionData(X, 5.0 * rng.standard_normal(60))
            cfg = LassoConfig(mode=LambdaMode.CV, cv_folds=5, grid_length=12,
                              seed=seed)
            grid = lambda_grid_default(data, 12)
            lam = select_lambda_cv(data, cfg)
            top_quartile += grid.index(lam) < len(grid) // 4
        self.assertGreaterEqual(top_quartile, 40)

    def test_strong_signal_keeps_true_coefficients(self):
        rng = np.random.default_rng(8)
        Q, _ = np.linalg.qr(rng.standard_normal((100, 5)))
        beta = np.array([10.0, -8.0, 6.0, 0.0, 0.0])
        data = RegressionData(Q, Q @ beta + rng.standard_normal(100))
        cfg = LassoConfig(mode=LambdaMode.CV, cv_folds=5, grid_length=20,
                          seed=3, tol=1e-9)
        ols = ols_fit(data).beta
        # soft_threshold(ols_j, lam / 2) zeroes coefficient j once lam
        # reaches 2 |ols_j|
        zeroing = 2.0 * np.min(np.abs(ols[:3]))
        self.assertLess(select_lambda_cv(data, cfg), zeroing)
