import numpy as np
import pytest

from smallmax.instances import HardInstanceSpec, build_instance
from smallmax.problems import MissingOracleError, fd_grad, make_ball_cubic
from smallmax.surrogate import (SurrogateModel, UnsupportedOrderError,
                                envelope_gap_bound, gradx_error_bound,
                                surrogate_grad_x, surrogate_grad_y,
                                surrogate_value, value_error_bound)


def _sample_inside(p, n, seed=0):
    rng = np.random.default_rng(seed)
    return p.probe_domain_x().sample(rng, n), p.domain_y.sample(rng, n)


def test_order0_is_constant_in_y():
    p = build_instance(HardInstanceSpec("F", 1, 1, 1.0, 0.5, 1.0, 2.0))
    s = SurrogateModel(p, 0, [0.3])
    vals = {surrogate_value(s, [0.7], [y]) for y in (-0.9, 0.0, 0.4)}
    assert len(vals) == 1
    assert np.isclose(vals.pop(), p.value(0.7, 0.3))


def test_order1_closed_form_on_f11():
    # fhat_1(x, y) = -lam x^2/2 + (mu x + rho y_hat) y - rho y_hat^2 / 2
    lam, mu, rho = 1.0, 1.0, 1.0
    p = build_instance(HardInstanceSpec("F", 1, 1, lam, mu, rho, 2.0))
    y_hat = 0.7
    s = SurrogateModel(p, 1, [y_hat])
    rng = np.random.default_rng(1)
    for x, y in rng.uniform(-1, 1, (25, 2)):
        expect = -0.5 * lam * x**2 + (mu * x + rho * y_hat) * y - 0.5 * rho * y_hat**2
        assert np.isclose(surrogate_value(s, [x], [y]), expect, atol=1e-12)


def test_order2_reproduces_quadratics():
    p = build_instance(HardInstanceSpec("F", 1, 1, 1.0, 0.5, 2.0, 2.0))
    s = SurrogateModel(p, 2, [-0.4])
    rng = np.random.default_rng(2)
    for x, y in rng.uniform(-1, 1, (25, 2)):
        assert np.isclose(surrogate_value(s, [x], [y]), p.value(x, y), atol=1e-12)


def test_grad_x_cases():
    p = build_instance(HardInstanceSpec("F", 1, 1, 2.0, 0.5, 1.0, 2.0))
    y_hat = np.array([0.2])
    # k = 0: gradient of f(., y_hat)
    s0 = SurrogateModel(p, 0, y_hat)
    assert np.allclose(surrogate_grad_x(s0, [0.4], [-0.8]), p.grad_x([0.4], y_hat))
    # k = 2 at y = y_hat: displacement zero
    s2 = SurrogateModel(p, 2, y_hat)
    assert np.allclose(surrogate_grad_x(s2, [0.4], y_hat), p.grad_x([0.4], y_hat))


@pytest.mark.parametrize("k", [0, 1, 2])
def test_grad_x_matches_finite_differences(k):
    p = build_instance(HardInstanceSpec("F", 2, -1, 1.0, 0.3, 1.5, 1.0))
    s = SurrogateModel(p, k, [0.4])
    xs, ys = _sample_inside(p, 15, seed=k)
    for x, y in zip(xs, ys):
        g = surrogate_grad_x(s, x, y)
        gfd = fd_grad(lambda u: surrogate_value(s, u, y), x)
        assert np.allclose(g, gfd, rtol=1e-5, atol=1e-7)


def test_grad_x_matches_fd_multidim():
    p = make_ball_cubic(dim_y=3, lam=1.0, mu=0.4, rho=0.8, radius=0.6,
                        x_interval=(-1, 1), quad_scale=0.6)
    y_hat = np.array([0.1, -0.2, 0.05])
    for k in (0, 1, 2):
        s = SurrogateModel(p, k, y_hat)
        x, y = np.array([0.3]), np.array([0.2, 0.1, -0.3])
        gfd = fd_grad(lambda u: surrogate_value(s, u, y), x)
        assert np.allclose(surrogate_grad_x(s, x, y), gfd, rtol=1e-5, atol=1e-7)
        gyfd = fd_grad(lambda v: surrogate_value(s, x, v), y)
        assert np.allclose(surrogate_grad_y(s, x, y), gyfd, rtol=1e-5, atol=1e-6)


def test_high_order_needs_analytic_expansion():
    p = make_ball_cubic(dim_y=2)
    with pytest.raises(UnsupportedOrderError):
        SurrogateModel(p, 3, np.zeros(2))


def test_order2_gradient_needs_third_order_oracle():
    import dataclasses
    p = build_instance(HardInstanceSpec("F", 2, 1, 1.0, 2.0, 1.0, 1.0))
    p = dataclasses.replace(p, cross3_jvp=None)
    s = SurrogateModel(p, 2, [0.0])
    with pytest.raises(MissingOracleError):
        surrogate_grad_x(s, [0.1], [0.2])


def test_value_error_bound_formula():
    s0 = SurrogateModel(build_instance(
        HardInstanceSpec("F", 0, 0, 1.0, 1.0, 2.0, 0.5)), 0, [0.1])
    assert np.isclose(value_error_bound(s0), 1.0)  # 2 * 0.5 / 1!
    s2 = SurrogateModel(build_instance(
        HardInstanceSpec("F", 2, 1, 1.0, 3.0, 6.0, 1.0)), 2, [0.5])
    assert np.isclose(value_error_bound(s2), 1.0)  # 6 * 1 / 3!


def test_gradx_error_bound_formula():
    import dataclasses
    p0 = build_instance(HardInstanceSpec("F", 0, 0, 1.0, 3.0, 5.0, 1.0))
    p0 = dataclasses.replace(p0, profile=dataclasses.replace(p0.profile, sigma_0=1.0))
    assert np.isclose(gradx_error_bound(SurrogateModel(p0, 0, [0.0])), 2.0)
    p1 = build_instance(HardInstanceSpec("F", 1, 1, 1.0, 2.0, 1.0, 0.5))
    assert np.isclose(gradx_error_bound(SurrogateModel(p1, 1, [0.1])), 2.0)


@pytest.mark.parametrize("spec,k", [
    (HardInstanceSpec("F", 2, 1, 1.0, 2.0, 1.5, 1.0), 2),
    (HardInstanceSpec("F", 1, -1, 1.0, 0.5, 2.0, 1.5), 1),
    (HardInstanceSpec("F", 0, 0, 1.0, 0.7, 1.0, 1.0), 0),
])
def test_taylor_bounds_hold_on_samples(spec, k):
    # the approximation bounds are theorems: zero violations over 10^4 samples
    p = build_instance(spec)
    s = SurrogateModel(p, k, p.domain_y.chebyshev_center())
    vb, gb = value_error_bound(s), gradx_error_bound(s)
    xs, ys = _sample_inside(p, 10_000, seed=7)
    xv, yv = xs[:, 0], ys[:, 0]
    verr = np.abs(np.asarray(p.value(xv, yv))
                  - np.array([surrogate_value(s, [x], [y]) for x, y in zip(xv, yv)]))
    assert verr.max() <= vb + 1e-12
    gerr = np.array([abs(surrogate_grad_x(s, [x], [y])[0] - p.grad_x([x], [y])[0])
                     for x, y in zip(xv, yv)])
    assert gerr.max() <= gb + 1e-12


def test_weak_convexity_modulus_of_surrogate_gradient():
    # |grad_x fhat(x', y) - grad_x fhat(x, y)| <= lambda_bar * |x' - x|
    spec = HardInstanceSpec("F", 2, -1, 1.0, 0.4, 1.0, 1.0)
    p = build_instance(spec)
    s = SurrogateModel(p, 2, [0.3])
    lb = s.lambda_bar
    rng = np.random.default_rng(9)
    for _ in range(300):
        x1, x2 = rng.uniform(-2, 2, 2)
        y = p.domain_y.sample(rng, 1)[0]
        lhs = abs(surrogate_grad_x(s, [x1], y)[0] - surrogate_grad_x(s, [x2], y)[0])
        assert lhs <= lb * abs(x1 - x2) + 1e-10


def test_lambda_bar_and_envelope_gap():
    spec = HardInstanceSpec("F", 2, 1, 1.0, 2.0, 1.5, 1.0)
    s = SurrogateModel(build_instance(spec), 2, [0.0])
    assert s.lambda_bar == 1.0  # bilinear: tau_2 = 0
    assert np.isclose(envelope_gap_bound(s),
                      np.sqrt(8.0 * 1.0 * 1.5 * 1.0 / 6.0))


def test_center_must_lie_in_domain():
    p = build_instance(HardInstanceSpec("F", 1, 1, 1.0, 1.0, 1.0, 2.0))
    with pytest.raises(ValueError):
        SurrogateModel(p, 1, [5.0])
