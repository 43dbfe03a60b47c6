"""Integration against sin^alpha(theta) cos^beta(theta) on (0, pi/2).

With t = sin(theta) the measure t^(k+a-1) (1-t^2)^((d-k-2)/2) dt of the
reduced problem becomes sin^(k+a-1) cos^(d-k-1) d(theta), and
(1-t^2)|phi'(t)|^2 becomes |d phi/d theta|^2.  All reduced integrals are
therefore of the form handled here.

Interior cells use Gauss-Legendre.  The two cells touching theta = 0 and
theta = pi/2 use Gauss-Jacobi so that the endpoint powers are integrated
exactly and only a smooth factor is left to the rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.special import betaln, gammaln, roots_jacobi, roots_legendre

HALF_PI = 0.5 * math.pi

DEFAULT_THETA_MIN = 1e-8
DEFAULT_RATIO = 1.35
DEFAULT_POINTS = 8


class SingularityError(ValueError):
    """Weight exponent makes the integral divergent."""


@dataclass(frozen=True)
class WeightedIntegrand:
    alpha: float  # power of sin(theta)
    beta: float  # power of cos(theta)
    f: Callable[[np.ndarray], np.ndarray]

    def __post_init__(self):
        _check_exponents(self.alpha, self.beta)


def _check_exponents(alpha: float, beta: float) -> None:
    if not alpha > -1:
        raise SingularityError(f"sin power must exceed -1, got {alpha}")
    if not beta > -1:
        raise SingularityError(f"cos power must exceed -1, got {beta}")


@lru_cache(maxsize=64)
def _legendre(n: int):
    x, w = roots_legendre(n)
    return x, w


@lru_cache(maxsize=256)
def _jacobi(n: int, a: float, b: float):
    # weight (1-x)^a (1+x)^b on [-1, 1]
    x, w = roots_jacobi(n, a, b)
    return x, w


@dataclass(frozen=True)
class CellRule:
    """Quadrature nodes and weights per cell of a partition of [0, pi/2].

    ``theta``, ``sin``, ``cos`` and ``weights`` have shape (ncells, npoints);
    the weights already contain sin^alpha cos^beta, so that
    ``sum(weights * f(theta))`` integrates ``sin^alpha cos^beta f``.
    ``sin``/``cos`` are evaluated without cancellation next to the endpoints.
    """

    theta: np.ndarray
    sin: np.ndarray
    cos: np.ndarray
    weights: np.ndarray

    def integrate(self, values: np.ndarray) -> float:
        return float(np.sum(self.weights * values))


def cell_rule(nodes: np.ndarray, alpha: float, beta: float, n_points: int = DEFAULT_POINTS) -> CellRule:
    """Build a :class:`CellRule` on the partition ``nodes`` (0 = nodes[0] < ... = pi/2)."""
    _check_exponents(alpha, beta)
    nodes = np.asarray(nodes, dtype=float)
    if nodes.ndim != 1 or nodes.size < 3:
        raise ValueError("need at least two cells")
    if nodes[0] != 0.0 or abs(nodes[-1] - HALF_PI) > 1e-15:
        raise ValueError("partition must span [0, pi/2]")
    lo, hi = nodes[:-1], nodes[1:]
    half = 0.5 * (hi - lo)
    x, w = _legendre(n_points)
    theta = lo[:, None] + half[:, None] * (1.0 + x[None, :])
    # distance to pi/2 measured from the right end keeps cos accurate near pi/2
    u = (HALF_PI - hi)[:, None] + half[:, None] * (1.0 - x[None, :])
    s = np.sin(theta)
    c = np.sin(u)
    weights = half[:, None] * w[None, :] * s**alpha * c**beta

    # first cell: weight theta^alpha absorbed into Gauss-Jacobi
    xj, wj = _jacobi(n_points, 0.0, float(alpha))
    h0 = half[0]
    th = h0 * (1.0 + xj)
    theta[0] = th
    s[0] = np.sin(th)
    u0 = HALF_PI - th
    c[0] = np.sin(u0)
    weights[0] = wj * h0 ** (alpha + 1.0) * _sinc_pow(th, alpha) * c[0] ** beta
    u[0] = u0

    # last cell: weight (pi/2 - theta)^beta absorbed into Gauss-Jacobi
    xj, wj = _jacobi(n_points, float(beta), 0.0)
    hl = half[-1]
    ul = hl * (1.0 - xj)
    theta[-1] = HALF_PI - ul
    c[-1] = np.sin(ul)
    s[-1] = np.cos(ul)
    weights[-1] = wj * hl ** (beta + 1.0) * _sinc_pow(ul, beta) * s[-1] ** alpha
    return CellRule(theta=theta, sin=s, cos=c, weights=weights)


def _sinc_pow(x: np.ndarray, power: float) -> np.ndarray:
    """(sin x / x)^power, smooth and accurate for small x."""
    return np.sinc(x / math.pi) ** power


def graded_partition(theta_min: float = DEFAULT_THETA_MIN, ratio: float = DEFAULT_RATIO) -> np.ndarray:
    """Partition of [0, pi/2] graded geometrically towards both endpoints."""
    if not 0 < theta_min < 0.25 * math.pi:
        raise ValueError(f"theta_min must lie in (0, pi/4), got {theta_min}")
    if not ratio > 1:
        raise ValueError(f"ratio must exceed 1, got {ratio}")
    m = max(1, math.ceil(math.log(0.25 * math.pi / theta_min) / math.log(ratio)))
    left = theta_min * (0.25 * math.pi / theta_min) ** (np.arange(m + 1) / m)
    left[-1] = 0.25 * math.pi
    right = HALF_PI - left[::-1]
    return np.concatenate(([0.0], left, right[1:], [HALF_PI]))


def theta_weight_integral(
    w: WeightedIntegrand,
    theta_min: float = DEFAULT_THETA_MIN,
    ratio: float = DEFAULT_RATIO,
    n_points: int = DEFAULT_POINTS,
    return_error: bool = False,
):
    """Integral of sin^alpha cos^beta f over (0, pi/2).

    With ``return_error`` a heuristic error indicator is returned as well: the
    difference to the same rule with half the points per cell, floored at a
    few ulps of the result.
    """
    nodes = graded_partition(theta_min, ratio)
    rule = cell_rule(nodes, w.alpha, w.beta, n_points)
    value = rule.integrate(w.f(rule.theta))
    if not return_error:
        return value
    coarse = cell_rule(nodes, w.alpha, w.beta, max(1, n_points // 2))
    err = abs(value - coarse.integrate(w.f(coarse.theta))) + 64 * np.finfo(float).eps * abs(value)
    return value, err


def beta_moment(alpha: float, beta: float) -> float:
    """Exact value of int_0^{pi/2} sin^alpha cos^beta = B((alpha+1)/2, (beta+1)/2) / 2."""
    _check_exponents(alpha, beta)
    return 0.5 * math.exp(betaln(0.5 * (alpha + 1.0), 0.5 * (beta + 1.0)))


def sphere_area(m: int) -> float:
    """Surface measure of the unit sphere S^m in R^(m+1); |S^0| = 2."""
    return 2.0 * math.exp(0.5 * (m + 1) * math.log(math.pi) - gammaln(0.5 * (m + 1)))


def sphere_moment(d: int, k: int, tau: float) -> float:
    """int over S^(d-1) of |Pi sigma|^tau, where Pi projects onto the first k coordinates."""
    if not k + tau > 0:
        raise SingularityError(f"|Pi sigma|^tau is not integrable for k+tau={k + tau} <= 0")
    return sphere_area(k - 1) * sphere_area(d - k - 1) * beta_moment(k + tau - 1, d - k - 1)


def check_useful_iii(d: int, k: int, tau: float) -> float:
    """Relative residual of (k+tau-2) M(tau-2) = (d+tau-2) M(tau), M the sphere moment."""
    if not k + tau > 2:
        raise ValueError(f"identity requires k+tau > 2, got {k + tau}")
    lhs = (k + tau - 2) * sphere_moment(d, k, tau - 2)
    rhs = (d + tau - 2) * sphere_moment(d, k, tau)
    return abs(lhs - rhs) / max(abs(lhs), abs(rhs))
