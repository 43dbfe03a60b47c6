import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special

from mixedhardy.quadrature import (
    SingularityError,
    WeightedIntegrand,
    beta_moment,
    check_useful_iii,
    sphere_area,
    sphere_moment,
    theta_weight_integral,
)

ONE = lambda t: np.ones_like(t)


@pytest.mark.parametrize("alpha,beta,expected", [(1, 0, 1.0), (0, 0, math.pi / 2), (2, 1, 1 / 3)])
def test_weight_integral_examples(alpha, beta, expected):
    assert theta_weight_integral(WeightedIntegrand(alpha, beta, ONE)) == pytest.approx(expected, rel=1e-12)
    assert beta_moment(alpha, beta) == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("alpha", [-0.9, -0.5, 0, 1, 3.7])
@pytest.mark.parametrize("beta", [-0.5, 0, 1, 2])
def test_weight_integral_matches_beta_function(alpha, beta):
    exact = 0.5 * special.beta((alpha + 1) / 2, (beta + 1) / 2)
    assert beta_moment(alpha, beta) == pytest.approx(exact, rel=1e-13)
    assert theta_weight_integral(WeightedIntegrand(alpha, beta, ONE)) == pytest.approx(exact, rel=1e-10)


def test_smooth_integrand_against_adaptive_quadrature():
    f = lambda t: np.exp(np.cos(t)) * (1 + t**2)
    alpha, beta = 0.3, 1.5
    ref, _ = integrate.quad(lambda t: np.sin(t) ** alpha * np.cos(t) ** beta * f(t), 0, math.pi / 2, epsabs=1e-14, epsrel=1e-13)
    val, err = theta_weight_integral(WeightedIntegrand(alpha, beta, f), return_error=True)
    assert val == pytest.approx(ref, rel=1e-10)
    assert abs(val - ref) <= max(err, 1e-12 * abs(ref))


@pytest.mark.parametrize("alpha,beta", [(-1, 0), (0, -1), (-2, 1)])
def test_divergent_weights_rejected(alpha, beta):
    with pytest.raises(SingularityError):
        WeightedIntegrand(alpha, beta, ONE)
    with pytest.raises(SingularityError):
        beta_moment(alpha, beta)


def test_doubling_points_within_error_indicator():
    f = lambda t: np.cos(3 * t) ** 2 + t
    w = WeightedIntegrand(0.5, 0.0, f)
    v1, e1 = theta_weight_integral(w, n_points=8, return_error=True)
    v2 = theta_weight_integral(w, n_points=16)
    assert abs(v2 - v1) <= e1 + 1e-14


def test_sphere_area():
    assert sphere_area(0) == 2.0
    assert sphere_area(1) == pytest.approx(2 * math.pi)
    assert sphere_area(2) == pytest.approx(4 * math.pi)


def test_sphere_moment_examples():
    assert sphere_moment(3, 2, 0) == pytest.approx(4 * math.pi, rel=1e-14)
    assert sphere_moment(3, 2, 2) == pytest.approx(8 * math.pi / 3, rel=1e-14)
    assert math.isfinite(sphere_moment(3, 2, -1.9))
    with pytest.raises(SingularityError):
        sphere_moment(3, 2, -2)


@given(st.floats(-1.9, 6))
def test_sphere_moment_d3_against_archimedes(tau):
    # on S^2 with k = 2: |Pi sigma| = sqrt(1 - u^2), u the third coordinate, uniformly distributed
    ref, _ = integrate.quad(lambda u: (1 - u * u) ** (tau / 2), -1, 1, epsrel=1e-12, limit=200)
    assert sphere_moment(3, 2, tau) == pytest.approx(2 * math.pi * ref, rel=1e-8)


def test_useful_iii_examples():
    assert check_useful_iii(3, 2, 2) <= 1e-14
    assert check_useful_iii(4, 2, 3) <= 1e-10
    assert check_useful_iii(3, 2, 0.5) <= 1e-10
    with pytest.raises(ValueError):
        check_useful_iii(3, 2, 0)


@settings(max_examples=50)
@given(st.integers(2, 10).flatmap(lambda d: st.tuples(st.just(d), st.integers(1, d - 1))), st.floats(0.01, 8))
def test_useful_iii_property(dk, excess):
    d, k = dk
    tau = 2 - k + excess
    assert check_useful_iii(d, k, tau) <= 1e-10
