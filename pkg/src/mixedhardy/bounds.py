"""Analytic upper bounds and supersolution lower-bound certificates.

Upper bounds evaluate the reduced quotient on explicit power profiles
phi = sin(theta)^-lambda, integrating the analytic integrand with the power of
sin(theta) absorbed into the quadrature weight.  Lower bounds search for a
supersolution of the bottom-case Euler-Lagrange equation of the form
t^-Lambda_0 (1 + (alpha^2 + 2 alpha) t^2)^(1/2)-type and check the sign of the
resulting bracket on a fine grid.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .params import ParameterError, ProblemParams, derived, require_valid
from .quadrature import SingularityError, WeightedIntegrand, theta_weight_integral

# fine partitions: bounds are compared against solver values at the 1e-6 level
_THETA_MIN = 1e-10
_RATIO = 1.2
_POINTS = 16

DEFAULT_T_POINTS = 10_000
SCREEN_FACTOR = 10


class CertificateKind(enum.Enum):
    UPPER_BOUND_TRIAL = "upper_bound_trial"
    LOWER_BOUND_SUPERSOLUTION = "lower_bound_supersolution"


@dataclass(frozen=True)
class Certificate:
    """A bound on the sharp constant together with what witnesses it.

    Supersolution certificates are grid-verified, not interval-rigorous.
    """

    kind: CertificateKind
    value: float
    witness: dict = field(default_factory=dict)
    valid: bool = True


def _integral(alpha: float, beta: float, f) -> float:
    return theta_weight_integral(WeightedIntegrand(alpha, beta, f), _THETA_MIN, _RATIO, _POINTS)


def trial_power(params: ProblemParams, lam: float) -> float:
    """Reduced quotient of phi = sin(theta)^-lam, an upper bound for the constant."""
    require_valid(params)
    if params.gamma < params.b:
        raise ParameterError("trial bounds need gamma >= b")
    dc = derived(params)
    if not lam < dc.lambda_0:
        raise ParameterError(f"trial exponent {lam} must be below Lambda_0 = {dc.lambda_0}")
    p = params.p
    k, a = params.k, params.a
    beta = params.d - params.k - 1.0
    hb2 = dc.h_b**2
    lam2 = lam * lam

    def bracket(theta):
        s, c = np.sin(theta), np.cos(theta)
        return (lam2 * c * c + hb2 * s * s) ** (0.5 * p)

    num = _integral(k + a - 1.0 - p - p * lam, beta, bracket)
    den = _integral(k + a - 1.0 - p + params.gamma - params.b - p * lam, beta, lambda t: np.ones_like(t))
    return num / den


def s_delta_bound(params: ProblemParams, delta: float) -> float:
    """Upper bound s_delta(b) for the bottom-case constant.

    It is the quotient of the trial profile t^(-Lambda_0 + delta) written out
    with the sin power 2 p delta - 1 absorbed into the quadrature.
    """
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    require_valid(params)
    dc = derived(params.replace(gamma=params.b))
    p = params.p
    beta = params.d - params.k - 1.0
    lam2 = (dc.lambda_0 - delta) ** 2
    hb2 = dc.h_b**2
    alpha = -1.0 + p * delta

    def bracket(theta):
        s, c = np.sin(theta), np.cos(theta)
        return (lam2 * c * c + hb2 * s * s) ** (0.5 * p)

    num = _integral(alpha, beta, bracket)
    den = _integral(alpha, beta, lambda t: np.ones_like(t))
    return num / den


def default_delta_grid(params: ProblemParams, n: int = 40) -> np.ndarray:
    lam0 = derived(params.replace(gamma=params.b)).lambda_0
    hi = max(lam0, 1e-2)
    return np.geomspace(1e-4, hi, n)


def min_s_delta(params: ProblemParams, deltas=None) -> tuple[float, float]:
    """Smallest s_delta over a grid; returns (value, delta)."""
    if deltas is None:
        deltas = default_delta_grid(params)
    best = (math.inf, math.nan)
    for dl in deltas:
        try:
            v = s_delta_bound(params, float(dl))
        except SingularityError:
            continue
        if v < best[0]:
            best = (v, float(dl))
    return best


def supersolution_bracket(params: ProblemParams, alpha: float, t):
    """Sign-determining bracket of the supersolution inequality at t in (0, 1].

    With F = (1 + (alpha^2 + 2 alpha) t^2)^((p-2)/2) and
    C = (d-k-b) alpha - b - Lambda_0 (p-1) alpha^2 it equals

        Lambda_0 (F - 1 - (p-2) alpha F t^2)
        + (C F + (p-2)(alpha^2 + 2 alpha)(1 + (alpha^2 + 2 alpha) t^2)^((p-4)/2) (1 - t^2)) t^2.
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(~(t_arr > 0)) or np.any(t_arr > 1):
        raise ValueError("t must lie in (0, 1]")
    if alpha < 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    if not params.k + params.a > params.p:
        raise ParameterError("supersolution bracket needs k + a > p")
    p, b = params.p, params.b
    lam0 = derived(params.replace(b=0.0, gamma=0.0)).lambda_0
    q = alpha * alpha + 2.0 * alpha
    base = 1.0 + q * t_arr * t_arr
    f = base ** (0.5 * (p - 2.0))
    c_alpha = _c_alpha(params, alpha, lam0)
    t2 = t_arr * t_arr
    out = lam0 * (f - 1.0 - (p - 2.0) * alpha * f * t2) + (
        c_alpha * f + (p - 2.0) * q * base ** (0.5 * (p - 4.0)) * (1.0 - t2)
    ) * t2
    return out if out.ndim else float(out)


def _c_alpha(params: ProblemParams, alpha: float, lam0: float) -> float:
    p, b = params.p, params.b
    return (params.d - params.k - b) * alpha - b - lam0 * (p - 1.0) * alpha * alpha


def _small_t_coefficient(params: ProblemParams, alpha: float) -> float:
    # bracket = coef * t^2 + O(t^4) as t -> 0
    p = params.p
    lam0 = derived(params.replace(b=0.0, gamma=0.0)).lambda_0
    q = alpha * alpha + 2.0 * alpha
    return lam0 * (p - 2.0) * (0.5 * q - alpha) + _c_alpha(params, alpha, lam0) + (p - 2.0) * q


def default_alpha_grid() -> np.ndarray:
    return np.geomspace(1e-4, 1.0, 50)


def default_t_grid(n: int = DEFAULT_T_POINTS) -> np.ndarray:
    return np.arange(1, n + 1) / n


def certify_lower_bound(params: ProblemParams, alpha_grid=None, t_grid=None) -> Certificate:
    """Look for alpha making the supersolution bracket nonnegative in t.

    Success certifies S_{b,b} >= Lambda_0^p, i.e. b does not exceed the end
    of the plateau.  Each candidate is checked on ``t_grid``, then on a grid
    ten times finer to screen minima between grid points, and the t^2
    coefficient at t -> 0 must be nonnegative to cover (0, t_1).  Failure
    is inconclusive.
    """
    require_valid(params.replace(gamma=params.b))
    if not params.k + params.a > params.p:
        raise ParameterError("certificate needs k + a > p")
    if not params.b > 0:
        raise ParameterError("certificate needs b > 0; b = 0 is the cylindrical case")
    alphas = default_alpha_grid() if alpha_grid is None else np.asarray(alpha_grid, dtype=float)
    ts = default_t_grid() if t_grid is None else np.sort(np.asarray(t_grid, dtype=float))
    fine = _refine_grid(ts, SCREEN_FACTOR)
    lam0 = derived(params.replace(b=0.0, gamma=0.0)).lambda_0
    target = lam0**params.p
    bp = params.replace(gamma=params.b)
    for alpha in alphas:
        alpha = float(alpha)
        if _small_t_coefficient(bp, alpha) < 0:
            continue
        if np.min(supersolution_bracket(bp, alpha, ts)) < 0:
            continue
        if np.min(supersolution_bracket(bp, alpha, fine)) < 0:
            continue
        return Certificate(
            CertificateKind.LOWER_BOUND_SUPERSOLUTION,
            target,
            {"alpha": alpha, "epsilon": params.b / alpha, "t_points": int(ts.size), "screen_points": int(fine.size)},
            True,
        )
    return Certificate(
        CertificateKind.LOWER_BOUND_SUPERSOLUTION,
        target,
        {"alphas_tried": int(alphas.size), "t_points": int(ts.size)},
        False,
    )


def _refine_grid(ts: np.ndarray, factor: int) -> np.ndarray:
    lo = np.concatenate(([0.0], ts[:-1]))
    frac = np.arange(1, factor + 1) / factor
    out = (lo[:, None] + (ts - lo)[:, None] * frac[None, :]).ravel()
    return out[out > 0]


def trial_certificate(params: ProblemParams, lam: float) -> Certificate:
    return Certificate(CertificateKind.UPPER_BOUND_TRIAL, trial_power(params, lam), {"lambda": lam}, True)
