import numpy as np
import numpy.testing as npt
import pytest

from itemcat.linear import LogisticRegressionGD, softmax


def blobs(n=60, k=3, dim=4, seed=0, spread=3.0):
    rng = np.random.default_rng(seed)
    centers = rng.normal(size=(k, dim)) * spread
    y = np.arange(n) % k
    x = centers[y] + rng.normal(scale=0.3, size=(n, dim))
    return x, y


class TestSoftmax:
    def test_rows_sum_to_one(self):
        z = np.random.default_rng(0).normal(size=(5, 4)) * 30
        npt.assert_allclose(softmax(z).sum(axis=1), np.ones(5), atol=1e-12)

    def test_shift_invariance(self):
        z = np.array([[1.0, 2.0, 3.0]])
        npt.assert_allclose(softmax(z), softmax(z + 100.0), atol=1e-12)


class TestFit:
    def test_separable_data_fits(self):
        x, y = blobs()
        model = LogisticRegressionGD(reg=0.01).fit(x, y, 3)
        assert (model.predict(x) == y).mean() > 0.95

    def test_deterministic_without_seed(self):
        x, y = blobs(seed=1)
        a = LogisticRegressionGD().fit(x, y, 3)
        b = LogisticRegressionGD().fit(x, y, 3)
        npt.assert_array_equal(a.coef, b.coef)

    def test_converges_by_loss_delta(self):
        x, y = blobs(seed=2)
        model = LogisticRegressionGD(tol=1e-8, max_iter=5000).fit(x, y, 3)
        assert model.converged

    def test_gradient_at_optimum_is_small(self):
        # at convergence the objective gradient must be near zero
        x, y = blobs(seed=3)
        model = LogisticRegressionGD(reg=1.0, tol=1e-12, max_iter=20000).fit(x, y, 3)
        n = len(y)
        onehot = np.zeros((n, 3))
        onehot[np.arange(n), y] = 1.0
        probs = model.predict_proba(x)
        grad = x.T @ (probs - onehot) / n + model.reg * model.coef / n
        assert np.abs(grad).max() < 1e-4

    def test_regularization_shrinks_weights(self):
        x, y = blobs(seed=4)
        weak = LogisticRegressionGD(reg=0.001).fit(x, y, 3)
        strong = LogisticRegressionGD(reg=100.0).fit(x, y, 3)
        assert np.abs(strong.coef).sum() < np.abs(weak.coef).sum()

    def test_label_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            LogisticRegressionGD().fit(np.zeros((2, 2)), np.array([0, 5]), 3)

    def test_unfitted_predict_rejected(self):
        with pytest.raises(RuntimeError):
            LogisticRegressionGD().predict_proba(np.zeros((1, 2)))

    def test_matches_scipy_optimizer_solution(self):
        # same objective minimized by an independent optimizer
        from scipy.optimize import minimize

        x, y = blobs(n=40, k=2, dim=3, seed=5)
        reg = 1.0
        n = len(y)
        onehot = np.zeros((n, 2))
        onehot[np.arange(n), y] = 1.0

        def objective(flat):
            w = flat[:6].reshape(3, 2)
            b = flat[6:]
            probs = softmax(x @ w + b)
            ce = -np.mean(np.log(probs[np.arange(n), y]))
            return ce + reg * np.sum(w * w) / (2 * n)

        ref = minimize(objective, np.zeros(8), method="BFGS", options={"gtol": 1e-10})
        model = LogisticRegressionGD(reg=reg, tol=1e-14, max_iter=50000).fit(x, y, 2)
        mine = objective(np.concatenate([model.coef.ravel(), model.intercept]))
        assert mine == pytest.approx(ref.fun, abs=1e-6)
