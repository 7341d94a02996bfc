import numpy as np
import pytest

from kanae.losses import (
    kl_divergence,
    kl_divergence_grads,
    mse_loss,
    mse_loss_grad,
)


class TestMSE:
    def test_identical_inputs(self):
        x = np.random.default_rng(0).standard_normal((3, 5))
        loss = mse_loss(x, x)
        assert loss.value == 0.0
        assert np.all(loss.per_sample == 0.0)

    def test_unit_difference(self):
        loss = mse_loss(np.zeros((1, 2)), np.ones((1, 2)))
        assert loss.value == 1.0

    def test_matches_mean_square_oracle(self):
        rng = np.random.default_rng(1)
        a, b = rng.standard_normal((4, 7)), rng.standard_normal((4, 7))
        expected = float(np.mean((a - b) ** 2))
        assert abs(mse_loss(a, b).value - expected) < 1e-14

    def test_scalar_is_mean_of_per_sample(self):
        rng = np.random.default_rng(2)
        a, b = rng.standard_normal((6, 3)), rng.standard_normal((6, 3))
        loss = mse_loss(a, b)
        assert abs(loss.value - loss.per_sample.mean()) < 1e-15

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            mse_loss(np.zeros((2, 3)), np.zeros((2, 4)))

    def test_grad_finite_difference(self):
        rng = np.random.default_rng(3)
        a, b = rng.standard_normal((2, 4)), rng.standard_normal((2, 4))
        g = mse_loss_grad(a, b)
        h = 1e-6
        for idx in [(0, 0), (1, 3)]:
            ap = a.copy(); ap[idx] += h
            am = a.copy(); am[idx] -= h
            fd = (mse_loss(ap, b).value - mse_loss(am, b).value) / (2 * h)
            assert abs(g[idx] - fd) < 1e-9


class TestKL:
    def test_prior_equals_posterior(self):
        z = np.zeros((3, 4))
        assert kl_divergence(z, z).value == 0.0

    def test_unit_mean_shift(self):
        loss = kl_divergence(np.array([[1.0]]), np.array([[0.0]]))
        assert abs(loss.value - 0.5) < 1e-15

    def test_matches_formula_oracle(self):
        rng = np.random.default_rng(4)
        mu = rng.standard_normal((5, 3))
        logvar = rng.standard_normal((5, 3)) * 0.5
        per = -0.5 * (1 + logvar - mu**2 - np.exp(logvar))
        expected = float(per.sum(axis=1).mean())
        assert abs(kl_divergence(mu, logvar).value - expected) < 1e-12

    def test_nonnegative_per_sample(self):
        rng = np.random.default_rng(5)
        mu = rng.standard_normal((50, 8))
        logvar = rng.standard_normal((50, 8))
        assert (kl_divergence(mu, logvar).per_sample >= 0).all()

    def test_grads_finite_difference(self):
        rng = np.random.default_rng(6)
        mu = rng.standard_normal((2, 3))
        logvar = rng.standard_normal((2, 3)) * 0.3
        dmu, dlogvar = kl_divergence_grads(mu, logvar)
        h = 1e-6
        mup = mu.copy(); mup[0, 1] += h
        mum = mu.copy(); mum[0, 1] -= h
        fd = (kl_divergence(mup, logvar).value - kl_divergence(mum, logvar).value) / (2 * h)
        assert abs(dmu[0, 1] - fd) < 1e-9
        lvp = logvar.copy(); lvp[1, 2] += h
        lvm = logvar.copy(); lvm[1, 2] -= h
        fd = (kl_divergence(mu, lvp).value - kl_divergence(mu, lvm).value) / (2 * h)
        assert abs(dlogvar[1, 2] - fd) < 1e-9
