import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thor_lab.netcore import (AdamState, GaussianPolicy, Mlp, NonFiniteGradientError, StaleCacheError,
                              adam_step, clip_by_global_norm, finite_difference_grads,
                              gaussian_entropy, global_norm, log_prob_and_entropy, log_prob_from_mean,
                              max_relative_error)


class TestForward:
    def test_zero_params_give_zero(self):
        net = Mlp([3, 4, 2], params=[np.zeros((3, 4)), np.zeros(4), np.zeros((4, 2)), np.zeros(2)])
        np.testing.assert_array_equal(net(np.ones(3)), 0.0)

    def test_identity_layer(self):
        net = Mlp([3, 3], params=[np.eye(3), np.zeros(3)])
        x = np.array([0.3, -1.0, 2.0])
        np.testing.assert_array_equal(net(x), x)

    def test_scalar_tanh(self):
        net = Mlp([1, 1, 1], params=[np.ones((1, 1)), np.zeros(1), np.ones((1, 1)), np.zeros(1)])
        assert net(np.array([0.5]))[0] == pytest.approx(0.46212, abs=1e-5)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            Mlp([3, 2])(np.ones(4))
        with pytest.raises(ValueError):
            Mlp([3, 2], params=[np.zeros((2, 3)), np.zeros(2)])

    def test_batched_equals_rowwise(self):
        net = Mlp([5, 8, 3], np.random.default_rng(0))
        x = np.random.default_rng(1).normal(size=(7, 5))
        np.testing.assert_allclose(net(x), np.array([net(r) for r in x]), atol=1e-14)

    def test_init_deterministic(self):
        a = Mlp([5, 8, 3], np.random.default_rng(4))
        b = Mlp([5, 8, 3], np.random.default_rng(4))
        for p, q in zip(a.params, b.params):
            np.testing.assert_array_equal(p, q)

    def test_small_output_gain(self):
        net = Mlp([26, 32, 3], np.random.default_rng(0), out_gain=0.01)
        assert np.abs(net(np.random.default_rng(1).normal(size=26))).max() < 0.1


class TestBackward:
    def test_linear_layer_outer_product(self):
        w = np.random.default_rng(0).normal(size=(3, 2))
        net = Mlp([3, 2], params=[w, np.zeros(2)])
        x = np.array([1.0, 2.0, -1.0])
        up = np.array([0.5, -2.0])
        _, cache = net.forward(x)
        gw, gb = net.backward(cache, up)
        np.testing.assert_array_equal(gw, np.outer(x, up))
        np.testing.assert_array_equal(gb, up)

    def test_zero_upstream(self):
        net = Mlp([4, 5, 2], np.random.default_rng(0))
        _, cache = net.forward(np.ones(4))
        assert all(np.all(g == 0) for g in net.backward(cache, np.zeros(2)))

    def test_stale_cache(self):
        net = Mlp([4, 5, 2], np.random.default_rng(0))
        _, cache = net.forward(np.ones(4))
        net.version += 1
        with pytest.raises(StaleCacheError):
            net.backward(cache, np.ones(2))

    def test_gradient_check_hundred_nets(self):
        rng = np.random.default_rng(123)
        worst = 0.0
        for _ in range(100):
            depth = rng.integers(1, 4)
            widths = [int(w) for w in rng.integers(1, 17, size=depth + 1)]
            net = Mlp(widths, rng, out_gain=1.0)
            batch = int(rng.integers(1, 4))
            x = rng.normal(size=(batch, widths[0]))
            up = rng.normal(size=(batch, widths[-1]))
            _, cache = net.forward(x)
            worst = max(worst, max_relative_error(net.backward(cache, up), finite_difference_grads(net, x, up)))
        assert worst < 1e-4


class TestGaussian:
    def test_mode_log_prob(self):
        for dim in (1, 3, 6):
            assert log_prob_from_mean(np.zeros(dim), np.zeros(dim), np.zeros(dim)) == pytest.approx(-0.91894 * dim, abs=1e-5)

    def test_entropy_values(self):
        assert gaussian_entropy(np.zeros(1)) == pytest.approx(1.41894, abs=1e-5)
        assert gaussian_entropy(np.full(3, math.log(2))) - gaussian_entropy(np.zeros(3)) == pytest.approx(3 * math.log(2))

    def test_log_std_clamped(self):
        pol = GaussianPolicy(Mlp([2, 2], np.random.default_rng(0)), [-10.0, 5.0])
        np.testing.assert_array_equal(pol.clamped_log_std(), [-4.0, 1.0])
        assert np.all(pol.std() > 0)

    def test_density_integrates_to_one(self):
        grid = np.linspace(-12, 12, 200_001)
        dens = np.exp(log_prob_from_mean(np.array([0.7]), np.array([0.4]), grid[:, None]))
        assert np.trapezoid(dens, grid) == pytest.approx(1.0, abs=1e-3)

    def test_entropy_matches_monte_carlo(self):
        rng = np.random.default_rng(0)
        pol = GaussianPolicy(Mlp([3, 4], rng), np.array([-1.0, 0.0, 0.3, -0.5]))
        obs = np.tile(np.array([0.1, 0.2, -0.3]), (100_000, 1))
        actions, logp = pol.sample(obs, rng)
        lp, ent = log_prob_and_entropy(pol, obs, actions)
        np.testing.assert_allclose(lp, logp, atol=1e-12)
        assert -lp.mean() == pytest.approx(ent, rel=0.02)

    def test_sampling_deterministic(self):
        pol = GaussianPolicy(Mlp([3, 2], np.random.default_rng(0)), [0.0, 0.0])
        a, _ = pol.sample(np.ones(3), np.random.default_rng(5))
        b, _ = pol.sample(np.ones(3), np.random.default_rng(5))
        np.testing.assert_array_equal(a, b)


class TestAdam:
    def test_first_step_is_lr_sign(self):
        p = [np.array([1.0])]
        adam_step(AdamState.for_params(p, lr=5e-4), p, [np.array([0.3])])
        assert p[0][0] - 1.0 == pytest.approx(-5e-4, rel=1e-6)

    def test_zero_gradient_keeps_params(self):
        p = [np.array([1.0, -2.0])]
        st_ = AdamState.for_params(p)
        for _ in range(50):
            adam_step(st_, p, [np.zeros(2)])
        np.testing.assert_array_equal(p[0], [1.0, -2.0])

    def test_constant_gradient_no_blowup(self):
        p = [np.array([0.0])]
        st_ = AdamState.for_params(p)
        adam_step(st_, p, [np.array([0.7])])
        d1 = abs(p[0][0])
        before = p[0][0]
        adam_step(st_, p, [np.array([0.7])])
        assert abs(p[0][0] - before) <= d1 * (1 + 1e-9)

    def test_non_finite(self):
        p = [np.array([0.0])]
        with pytest.raises(NonFiniteGradientError):
            adam_step(AdamState.for_params(p), p, [np.array([np.inf])])

    def test_moment_shapes(self):
        params = Mlp([3, 4, 2], np.random.default_rng(0)).params
        st_ = AdamState.for_params(params)
        assert [m.shape for m in st_.m] == [p.shape for p in params]


@given(st.lists(st.floats(-100, 100), min_size=1, max_size=10), st.floats(0.01, 10))
@settings(max_examples=100)
def test_clip_by_global_norm(vals, max_norm):
    g = [np.array(vals)]
    clipped, norm = clip_by_global_norm(g, max_norm)
    assert norm == pytest.approx(float(np.linalg.norm(vals)))
    assert global_norm(clipped) <= max_norm * (1 + 1e-9) or global_norm(clipped) == pytest.approx(norm)
