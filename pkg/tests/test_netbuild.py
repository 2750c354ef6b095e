import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from depthsep.hardfn import HardFunction, SignVector, build_family, random_signs
from depthsep.netbuild import (
    RELU, THRESHOLD, Activation, ThreeLayerNet, TwoLayerNet, activation,
    build_prop_approx, build_radial_3layer, build_univariate_relu,
    build_univariate_threshold, dumps_net, eval_three_layer, eval_two_layer,
    loads_net, prop_approx_width_bound, radial_pieces, relu_interpolant,
    threelayer_width_bound, univariate_sup_error,
)
from depthsep.radial import RadialProfile


def random_pl(draw_rng, L, R):
    """Random piecewise-linear L-Lipschitz function, constant outside [-R, R]."""
    k = int(draw_rng.integers(2, 12))
    xs = np.sort(draw_rng.uniform(-R, R, k))
    xs[0], xs[-1] = -R, R
    slopes = draw_rng.uniform(-L, L, k - 1)
    ys = np.concatenate([[draw_rng.uniform(-1, 1)], np.cumsum(slopes * np.diff(xs))])
    ys[1:] += ys[0]
    return lambda x: np.interp(x, xs, ys)


def grid_error(f, h, R, n=10_000):
    x = np.linspace(-1.5 * R - 1, 1.5 * R + 1, n)
    return float(np.max(np.abs(f(x) - h(x))))


class TestReluBuilder:
    def test_zero_function(self):
        h = build_univariate_relu(lambda x: np.zeros_like(x), 0.0, 3.0, 0.1)
        assert h.width == 0 and h.a == 0.0

    def test_trivial_regime(self):
        h = build_univariate_relu(lambda x: 0.3 * x, 0.3, 1.0, 0.7)
        assert h.width == 0
        assert grid_error(lambda x: np.clip(0.3 * x, -0.3, 0.3), h, 1.0) <= 0.7

    def test_clipped_square(self):
        f = lambda x: np.minimum(x * x, 1.0)
        h = build_univariate_relu(f, 2.0, 1.0, 0.5)
        assert np.allclose(np.asarray(h.gamma) / 0.25, np.round(np.asarray(h.gamma) / 0.25))
        x = np.linspace(-1, 1, 10_000)
        assert np.max(np.abs(f(x) - h(x))) <= 0.5
        assert h.width <= 12
        assert univariate_sup_error(f, h, 2.0, 1.0, 0.5) <= 0.5

    def test_delta_positive(self):
        with pytest.raises(ValueError):
            build_univariate_relu(lambda x: x, 1.0, 1.0, 0.0)

    @settings(max_examples=100, deadline=None, suppress_health_check=[HealthCheck.too_slow])
    @given(st.integers(0, 2**32 - 1), st.floats(0.1, 20.0), st.floats(0.1, 20.0), st.floats(0.01, 1.0))
    def test_property(self, seed, L, R, delta):
        f = random_pl(np.random.default_rng(seed), L, R)
        h = build_univariate_relu(f, L, R, delta)
        assert grid_error(f, h, R) <= delta
        assert h.width <= 3 * R * L / delta
        assert h.width == len(h.terms)
        if h.width:
            assert np.max(np.abs(h.alpha)) <= 2 * L * (1 + 1e-12)
        # the Assumption-1 form with a generic activation evaluates identically
        x = np.linspace(-2 * R, 2 * R, 257)
        assert np.allclose(h.eval_with(RELU, x), h(x), atol=1e-9 * (1 + L * R))


class TestThresholdBuilder:
    def test_constant(self):
        h = build_univariate_threshold(lambda x: np.full_like(x, 2.5), 0.0, 4.0, 0.1)
        assert h.a == 2.5 and h.width <= 1
        assert h(np.array([-10.0, 0.0, 10.0])).tolist() == [2.5, 2.5, 2.5]

    def test_clipped_identity(self):
        f = lambda x: np.clip(x, -1, 1)
        h = build_univariate_threshold(f, 1.0, 1.0, 0.25)
        assert h.width <= 8
        assert univariate_sup_error(f, h, 1.0, 1.0, 0.25) <= 0.25

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(0.1, 10.0), st.floats(0.1, 10.0), st.floats(0.01, 1.0))
    def test_property(self, seed, L, R, delta):
        f = random_pl(np.random.default_rng(seed), L, R)
        h = build_univariate_threshold(f, L, R, delta)
        assert h.width <= 2 * R * L / delta + 1
        assert univariate_sup_error(f, h, L, R, delta) <= delta
        x = np.linspace(-2 * R, 2 * R, 101)
        assert np.allclose(h.eval_with(THRESHOLD, x), h(x), atol=1e-9)


class TestActivation:
    def test_builtin(self):
        assert activation("relu") is RELU and activation("threshold") is THRESHOLD
        assert RELU.c_sigma == 3 and THRESHOLD.c_sigma == 2
        assert THRESHOLD(np.array([-1e-300, 0.0, 1.0])).tolist() == [0.0, 1.0, 1.0]
        assert RELU.check_growth() and THRESHOLD.check_growth()
        with pytest.raises(ValueError):
            activation("tanh")

    def test_relu_interpolant(self):
        knots = np.array([-1.0, 0.0, 2.0])
        h = relu_interpolant(knots, np.array([1.0, 0.0, 4.0]))
        x = np.linspace(-3, 4, 71)
        assert np.allclose(h(x), np.interp(x, knots, [1.0, 0.0, 4.0]))
        with pytest.raises(ValueError):
            relu_interpolant([0.0, 0.0], [1.0, 2.0])


class TestEvaluation:
    def test_zero_nets(self):
        two = TwoLayerNet(np.zeros((3, 4)), np.zeros(3), np.zeros(3))
        assert eval_two_layer(two, np.ones(4)) == 0.0
        three = ThreeLayerNet(np.zeros((3, 4)), np.zeros(3), np.zeros(2), np.zeros(2), V=np.zeros((2, 3)))
        assert eval_three_layer(three, np.ones((5, 4))).tolist() == [0.0] * 5

    def test_single_unit(self):
        net = TwoLayerNet(np.eye(3)[:1], np.zeros(1), np.ones(1))
        assert eval_two_layer(net, np.array([2.0, 5.0, -1.0])) == 2.0

    def test_dimension_mismatch(self):
        net = TwoLayerNet(np.zeros((1, 3)), np.zeros(1), np.ones(1))
        with pytest.raises(ValueError):
            eval_two_layer(net, np.ones(4))
        with pytest.raises(ValueError):
            ThreeLayerNet(np.zeros((3, 2)), np.zeros(3), np.zeros(2), np.zeros(2), V=np.zeros((3, 3)))

    @pytest.mark.parametrize("act", [RELU, THRESHOLD])
    def test_fast_equals_dense(self, act):
        f = RadialProfile((2.0, 4.0), lambda r: np.sin(np.pi * (r - 2) / 2) ** 2, 2.0, (2.0, 4.0))
        net = build_radial_3layer(f, 2.0, 0.2, act, d=2)
        x = np.random.default_rng(0).uniform(-5, 5, (2000, 2))
        a = eval_three_layer(net, x, fast=True)
        b = eval_three_layer(net, x, fast=False)
        assert np.max(np.abs(a - b)) <= 1e-12 * max(1.0, np.max(np.abs(b)))


def trapezoid_profile(lo, hi, ramp):
    return RadialProfile((lo, hi), lambda r: np.minimum(1.0, np.minimum(r - lo, hi - r) / ramp),
                         1.0 / ramp, (lo, lo + ramp, hi - ramp, hi), linear_pieces=True)


class TestRadialCompiler:
    @pytest.mark.parametrize("d", [2, 3, 5])
    def test_composition_identity(self, d):
        f = trapezoid_profile(2.0, 5.0, 0.5)
        lt, st_ = radial_pieces(f, 2.0, 0.1, RELU, d)
        net = build_radial_3layer(f, 2.0, 0.1, RELU, d)
        x = np.random.default_rng(d).uniform(-7, 7, (3000, d))
        comp = st_(lt(x).sum(axis=1))
        assert np.max(np.abs(eval_three_layer(net, x) - comp)) <= 1e-12 * (1 + np.max(np.abs(comp)))

    @pytest.mark.parametrize("d", [2, 4])
    def test_sup_error_and_symmetry(self, d):
        delta = 0.05
        f = trapezoid_profile(1.5, 4.0, 0.4)
        net = build_radial_3layer(f, 2.5, delta, RELU, d)
        rng = np.random.default_rng(1)
        u = rng.standard_normal((20_000, d))
        u /= np.linalg.norm(u, axis=1)[:, None]
        r = rng.uniform(0, 6, 20_000)
        x = u * r[:, None]
        g = eval_three_layer(net, x)
        assert np.max(np.abs(g - f(r))) <= delta
        v = rng.standard_normal((20_000, d))
        v /= np.linalg.norm(v, axis=1)[:, None]
        assert np.max(np.abs(g - eval_three_layer(net, v * r[:, None]))) <= 2 * delta
        assert net.width <= threelayer_width_bound(RELU.c_sigma, d, 1.5, 4.0, 2.5, delta)

    def test_zero_profile(self):
        f = RadialProfile((1.0, 3.0), lambda r: np.zeros_like(r), 0.0, (), linear_pieces=True)
        net = build_radial_3layer(f, 1.0, 0.1, RELU, 3)
        x = np.random.default_rng(0).uniform(-5, 5, (1000, 3))
        assert np.max(np.abs(eval_three_layer(net, x))) <= 0.1

    def test_threshold_small(self):
        f = RadialProfile((1.0, 3.0), lambda r: np.sin(np.pi * (r - 1) / 2) ** 2, 1.6, (1.0, 3.0))
        net = build_radial_3layer(f, 1.6, 0.2, THRESHOLD, 2)
        x = np.random.default_rng(0).uniform(-4, 4, (5000, 2))
        err = np.abs(eval_three_layer(net, x) - f(np.linalg.norm(x, axis=1)))
        assert err.max() <= 0.2
        assert net.width <= threelayer_width_bound(THRESHOLD.c_sigma, 2, 1.0, 3.0, 1.6, 0.2)

    def test_errors(self):
        with pytest.raises(ValueError):
            build_radial_3layer(trapezoid_profile(0.5, 2.0, 0.2), 5.0, 0.1)
        with pytest.raises(ValueError):
            build_radial_3layer(trapezoid_profile(1.5, 2.0, 0.2), 5.0, 0.0)

    def test_custom_activation_needs_builder(self):
        soft = Activation("custom", lambda z: np.log1p(np.exp(z)), 4.0)
        with pytest.raises((ValueError, NotImplementedError)):
            soft.build(lambda x: x, 1.0, 1.0, 0.1)


def test_default_trapezoid_d4():
    fam = build_family(4, 25.0)
    h = HardFunction(fam, SignVector(random_signs(fam.N, 0, 0), 0.0, 0, 0))
    net = build_prop_approx(h, 0.05)
    rng = np.random.default_rng(3)
    u = rng.standard_normal((10_000, 4))
    u /= np.linalg.norm(u, axis=1)[:, None]
    # half the sample inside the annulus where the function lives
    r = np.concatenate([rng.uniform(0, 150, 5000), rng.uniform(50, 100, 5000)])
    x = u * r[:, None]
    from depthsep.hardfn import eval_surrogate
    out = eval_three_layer(net, x)
    assert np.max(np.abs(out - eval_surrogate(h, r))) <= 0.05
    assert np.all(np.abs(out) <= 1.05)
    assert net.width <= prop_approx_width_bound(RELU.c_sigma, 25.0, fam.N, 4, 0.05)
    R, rr = 2 * 25 * 2, 25 * 2
    assert net.width <= 2 * RELU.c_sigma * 16 * R ** 2 * fam.N / (math.sqrt(rr) * 0.05) + 1


class TestSerialization:
    def test_two_layer(self):
        rng = np.random.default_rng(0)
        net = TwoLayerNet(rng.standard_normal((5, 3)), rng.standard_normal(5), rng.standard_normal(5))
        back = loads_net(dumps_net(net))
        assert np.array_equal(back.W, net.W) and np.array_equal(back.v, net.v)
        assert dumps_net(back) == dumps_net(net)

    def test_three_layer_factored_and_dense(self):
        f = trapezoid_profile(2.0, 5.0, 0.5)
        net = build_radial_3layer(f, 2.0, 0.1, RELU, 3)
        text = dumps_net(net)
        back = loads_net(text)
        assert dumps_net(back) == text
        x = np.random.default_rng(0).uniform(-6, 6, (500, 3))
        assert np.array_equal(eval_three_layer(back, x), eval_three_layer(net, x))
        dense = ThreeLayerNet(net.W1, net.b1, net.c, net.u, RELU, V=net.dense_V())
        back2 = loads_net(dumps_net(dense))
        assert np.array_equal(back2.V, dense.V)

    def test_bad_input(self):
        with pytest.raises(ValueError):
            loads_net("layers=2\nd=1\n")
        with pytest.raises(ValueError):
            loads_net("X 0x1p0\n")
        net = TwoLayerNet(np.ones((1, 1)), np.zeros(1), np.ones(1))
        with pytest.raises(ValueError):
            loads_net(dumps_net(net), THRESHOLD)


def test_unit_budget():
    fam = build_family(4, 25.0)
    h = HardFunction(fam, SignVector(random_signs(fam.N, 0, 0), 0.0, 0, 0))
    with pytest.raises(ValueError, match="budget"):
        build_prop_approx(h, 0.05, THRESHOLD)
    with pytest.raises(ValueError, match="budget"):
        build_univariate_relu(lambda x: x, 1e6, 1e6, 1e-3)
