import numpy as np
import pytest

from conftest import random_instance
from ensemble_effort.errors import DimensionMismatch, EffortError, NotConverged, RankDeficient
from ensemble_effort.regressors import (
    LinearModel,
    fit_elm,
    fit_huber,
    fit_lasso,
    fit_ols,
    fit_ridge,
    lasso_lambda_max,
    literature_model,
    model_from_dict,
    predict,
)


def coefs(m):
    return np.array((m.intercept,) + m.coefficients)


class TestOls:
    def test_exact_line(self):
        m = fit_ols([[0], [1], [2], [3]], [1, 3, 5, 7])
        assert m.intercept == pytest.approx(1.0, abs=1e-12)
        assert m.coefficients[0] == pytest.approx(2.0, abs=1e-12)

    def test_matches_numpy_lstsq(self):
        X, y = random_instance(4, 50, 3)
        A = np.column_stack([np.ones(50), X])
        ref = np.linalg.lstsq(A, y, rcond=None)[0]
        np.testing.assert_allclose(coefs(fit_ols(X, y)), ref, atol=1e-10)

    @pytest.mark.parametrize("seed", range(20))
    def test_residual_orthogonality(self, seed):
        X, y = random_instance(seed)
        m = fit_ols(X, y)
        Xc = X - X.mean(0)
        assert np.abs(Xc.T @ (y - m.predict(X))).max() <= 1e-8 * np.linalg.norm(y)

    def test_rank_deficient(self):
        X = np.array([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0], [4.0, 8.0]])
        with pytest.raises(RankDeficient):
            fit_ols(X, [1, 2, 3, 5])
        with pytest.raises(RankDeficient):
            fit_ols([[1.0, 2.0], [3.0, 1.0]], [1, 2])


class TestRidge:
    def test_closed_form(self):
        m = fit_ridge([[-1], [0], [1]], [-1, 0, 1], alpha=1.0)
        assert m.coefficients[0] == pytest.approx(2 / 3, abs=1e-12)
        assert m.intercept == pytest.approx(0.0, abs=1e-12)

    def test_huge_penalty(self):
        X, y = random_instance(2, 40, 3)
        m = fit_ridge(X, y, alpha=1e9)
        assert np.abs(m.coefficients).max() < 1e-6
        assert m.intercept == pytest.approx(y.mean(), abs=1e-5)

    def test_alpha_zero_is_ols(self):
        X, y = random_instance(8)
        np.testing.assert_allclose(coefs(fit_ridge(X, y, 0.0)), coefs(fit_ols(X, y)), atol=1e-8)

    def test_rank_deficient_design_is_regularized(self):
        X = np.array([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]])
        m = fit_ridge(X, [1.0, 2.0, 3.0], alpha=1.0)
        assert m.coefficients[0] == pytest.approx(m.coefficients[1] / 2, rel=1e-10)

    def test_negative_alpha(self):
        with pytest.raises(EffortError):
            fit_ridge([[0], [1]], [0, 1], alpha=-1)


def lasso_gradient(X, y, m):
    n = X.shape[0]
    Xc, yc = X - X.mean(0), y - y.mean()
    return Xc.T @ (yc - Xc @ np.array(m.coefficients)) / n


class TestLasso:
    def test_soft_threshold_example(self):
        m = fit_lasso([[-1], [0], [1]], [-2, 0, 2], lam=1 / 3)
        assert m.coefficients[0] == pytest.approx(1.5, abs=1e-10)
        assert m.intercept == pytest.approx(0.0, abs=1e-12)

    def test_lambda_max_gives_null_model(self, backend):
        X, y = random_instance(6, 80, 4)
        m = fit_lasso(X, y, lasso_lambda_max(X, y))
        assert m.coefficients == (0.0,) * 4
        assert m.intercept == pytest.approx(y.mean(), abs=1e-12)

    def test_lambda_zero_is_ols(self, backend):
        X, y = random_instance(1)
        np.testing.assert_allclose(coefs(fit_lasso(X, y, 0.0)), coefs(fit_ols(X, y)), atol=1e-6)

    @pytest.mark.parametrize("seed", range(15))
    def test_kkt(self, seed, backend):
        X, y = random_instance(seed)
        lam = 0.2 * lasso_lambda_max(X, y)
        tol = 1e-10
        m = fit_lasso(X, y, lam, tol=tol)
        g = lasso_gradient(X, y, m)
        slack = 1e-7
        for gj, bj in zip(g, m.coefficients):
            if bj == 0.0:
                assert abs(gj) <= lam + slack
            else:
                assert gj == pytest.approx(np.sign(bj) * lam, abs=slack)

    def test_l1_monotone_in_lambda(self):
        X, y = random_instance(12, 120, 5)
        grid = np.linspace(0, 1, 21) * lasso_lambda_max(X, y)
        l1 = [np.abs(fit_lasso(X, y, lam, tol=1e-12).coefficients).sum() for lam in grid]
        assert all(a >= b - 1e-9 for a, b in zip(l1, l1[1:]))
        assert l1[-1] == 0.0

    def test_not_converged_carries_iterate(self):
        X, y = random_instance(3, 60, 4)
        with pytest.raises(NotConverged) as e:
            fit_lasso(X, y, 0.0, tol=1e-15, max_iter=2)
        assert e.value.iterations == 2
        assert isinstance(e.value.model, LinearModel)

    def test_bad_arguments(self):
        with pytest.raises(EffortError):
            fit_lasso([[0], [1]], [0, 1], lam=-1)
        with pytest.raises(EffortError):
            fit_lasso([[0], [1]], [0, 1], lam=0.1, tol=0)


class TestHuber:
    def test_exact_line(self, backend):
        x = np.arange(10.0)[:, None]
        m = fit_huber(x, 2 * x[:, 0])
        assert m.intercept == pytest.approx(0.0, abs=1e-9)
        assert m.coefficients[0] == pytest.approx(2.0, abs=1e-9)

    def test_large_delta_is_ols(self, backend):
        X, y = random_instance(5)
        np.testing.assert_allclose(coefs(fit_huber(X, y, delta=1e8)), coefs(fit_ols(X, y)), atol=1e-6)

    def test_outlier_resistance(self, backend):
        x = np.arange(1.0, 21.0)
        X = np.append(x, 10.0)[:, None]
        y = np.append(x, 1000.0)
        # generating line is y = x
        assert abs(fit_huber(X, y).coefficients[0] - 1.0) < 0.1
        assert abs(fit_ols(X, y).coefficients[0] - 1.0) > 0.5

    def test_outlier_resistance_leverage_point(self, backend):
        x = np.arange(1.0, 21.0)
        X = np.append(x, 30.0)[:, None]
        y = np.append(x, 1000.0)
        assert abs(fit_huber(X, y).coefficients[0] - 1.0) < 0.1
        assert abs(fit_ols(X, y).coefficients[0] - 1.0) > 0.5

    @pytest.mark.parametrize("seed", range(10))
    @pytest.mark.parametrize("delta", [None, 0.3])
    def test_objective_non_increasing_each_pass(self, seed, delta, backend):
        X, y = random_instance(seed)
        y = y + np.random.default_rng(seed).standard_t(1.5, size=y.size)
        _, trace = fit_huber(X, y, delta=delta, tol=1e-10, return_trace=True)
        assert len(trace) >= 1
        for before, after, _ in trace:
            assert after <= before * (1 + 1e-12) + 1e-12

    def test_rank_deficient(self):
        with pytest.raises(RankDeficient):
            fit_huber([[1.0, 1.0], [2.0, 0.0]], [1.0, 2.0])

    def test_bad_delta(self):
        with pytest.raises(EffortError):
            fit_huber([[0], [1], [2]], [0, 1, 2], delta=0.0)


class TestElm:
    def test_deterministic(self):
        X, y = random_instance(2, 40, 2)
        a, b = fit_elm(X, y, 5, 99), fit_elm(X, y, 5, 99)
        np.testing.assert_array_equal(a.predict(X), b.predict(X))
        np.testing.assert_array_equal(a.input_weights, b.input_weights)
        assert not np.array_equal(fit_elm(X, y, 5, 100).input_weights, a.input_weights)

    def test_weights_uniform_pm1(self):
        X, y = random_instance(2, 40, 3)
        m = fit_elm(X, y, 200, 1)
        assert np.abs(m.input_weights).max() <= 1 and np.abs(m.input_biases).max() <= 1

    @pytest.mark.parametrize("seed", range(10))
    def test_interpolates_with_n_hidden_equal_n(self, seed):
        rng = np.random.default_rng(seed)
        X = rng.uniform(-3, 3, size=(5, 2))
        y = rng.normal(size=5)
        m = fit_elm(X, y, 5, seed)
        assert np.abs(m.predict(X) - y).max() < 1e-4

    def test_two_hidden_on_synthetic_is_sane(self, synthetic_noisy):
        from ensemble_effort.dataset import minmax_normalize, shuffle_split
        from ensemble_effort.stats import mar
        tr, te = shuffle_split(synthetic_noisy, 0.7, 3)
        trn, params = minmax_normalize(tr)
        Xte = params.transform(tr, te.features)
        elm = mar(te.target, fit_elm(trn.features, trn.target, 2, 3).predict(Xte)).value
        ols = mar(te.target, fit_ols(trn.features, trn.target).predict(Xte)).value
        assert np.isfinite(elm) and elm < 3 * ols

    def test_round_trip_dict(self):
        X, y = random_instance(2, 30, 2)
        m = fit_elm(X, y, 3, 4)
        np.testing.assert_array_equal(model_from_dict(m.to_dict()).predict(X), m.predict(X))


class TestFixedModel:
    def test_oracle_point(self):
        assert predict(literature_model(), [[27, 34]])[0] == pytest.approx(68.943, abs=1e-9)

    def test_intercept(self):
        m = literature_model()
        assert m.intercept == 44.713
        assert m.coefficients == (1.08, -0.145)
        assert predict(m, [[0, 0]])[0] == 44.713

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            literature_model().predict([[1, 2, 3]])

    def test_zero_vector_gives_intercept(self):
        X, y = random_instance(9, 30, 3)
        m = fit_ridge(X, y, 0.5)
        assert m.predict(np.zeros((1, 3)))[0] == m.intercept


@pytest.mark.parametrize("seed", range(100))
def test_nesting(seed):
    X, y = random_instance(seed)
    ref = coefs(fit_ols(X, y))
    for m in (fit_lasso(X, y, 0.0), fit_ridge(X, y, 0.0), fit_huber(X, y, delta=1e8)):
        assert np.abs(coefs(m) - ref).max() <= 1e-6, m.family
