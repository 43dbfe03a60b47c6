"""Closed-form constants and thresholds.

These serve as fast paths in the solver and as regression oracles for the
numerical minimizers.  Only p = 2 has a closed form in the bottom case.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .params import (
    DEFAULT_TOL,
    ParameterError,
    ProblemParams,
    Regime,
    RegimeError,
    classify_regime,
    derived,
    require_valid,
)


class FormulaId(enum.Enum):
    QUASI_SPHERICAL = "quasi_spherical"
    CYLINDRICAL = "cylindrical"
    BOTTOM_P2 = "bottom_p2"
    BSTAR_P2 = "bstar_p2"
    LAMBDA_B = "lambda_b"
    BSTAR_UPPER = "bstar_upper"


@dataclass(frozen=True)
class ClosedFormValue:
    value: float
    formula_id: FormulaId


def _require_p2(params: ProblemParams) -> None:
    if abs(params.p - 2.0) > DEFAULT_TOL:
        raise RegimeError(f"formula only holds for p = 2, got p={params.p}")


def _require_bottom_defined(params: ProblemParams) -> None:
    if not params.k + params.a > params.p:
        raise ParameterError(f"bottom case needs k+a > p, got k+a={params.k + params.a}")


def _bottom_constants(params: ProblemParams):
    # The bottom-case thresholds do not depend on gamma; evaluate at gamma = b.
    return derived(params.replace(gamma=params.b))


def quasi_spherical_constant(params: ProblemParams, tol: float = DEFAULT_TOL) -> float:
    """H_b^p, valid for gamma = p + b."""
    require_valid(params)
    if classify_regime(params, tol) is not Regime.QUASI_SPHERICAL:
        raise RegimeError(f"not quasi-spherical: gamma={params.gamma}, p+b={params.p + params.b}")
    return derived(params).h_b ** params.p


def cylindrical_constant(params: ProblemParams) -> float:
    """Lambda_0^p, the Hardy constant in R^k with weight |y|^a (b = gamma = 0)."""
    _require_bottom_defined(params)
    if params.b != 0 or params.gamma != 0:
        raise RegimeError("cylindrical constant needs b = gamma = 0")
    return derived(params).lambda_0 ** params.p


def _bstar_from(h0: float, l0: float) -> float:
    # Smaller root of b^2 - 4 H0 b + 4 (H0 - L0)^2 = 0, written as
    # c / (H0 + sqrt(...)) to avoid cancellation when H0 - L0 << H0.
    gap = h0 - l0
    return 2.0 * gap * gap / (h0 + math.sqrt(h0 * h0 - gap * gap))


def bstar_p2(params: ProblemParams) -> float:
    """Borderline exponent b_* for p = 2 (gamma and b are ignored)."""
    _require_p2(params)
    _require_bottom_defined(params)
    dc = _bottom_constants(params.replace(b=0.0))
    return _bstar_from(dc.h_0, dc.lambda_0)


def lambda_b_p2(params: ProblemParams) -> float:
    """Decay exponent of the explicit minimizer |Pi sigma|^(-lambda_b), p = 2, b > b_*."""
    _require_p2(params)
    _require_bottom_defined(params)
    dc = _bottom_constants(params.replace(b=0.0))
    h0, l0 = dc.h_0, dc.lambda_0
    hb = h0 - params.b / 2.0
    bstar = _bstar_from(h0, l0)
    if not (bstar < params.b < 2.0 * h0):
        raise ParameterError(f"lambda_b needs b in (b_*, 2H0) = ({bstar}, {2 * h0}), got b={params.b}")
    # H0 - sqrt(H0^2 - Hb^2) == Hb^2 / (H0 + sqrt(H0^2 - Hb^2))
    return hb * hb / (h0 + math.sqrt(h0 * h0 - hb * hb))


def bottom_constant_p2(params: ProblemParams) -> float:
    """S_{b,b} for p = 2: Lambda_0^2 on b <= b_*, explicit formula above."""
    _require_p2(params)
    _require_bottom_defined(params)
    dc = _bottom_constants(params.replace(b=0.0))
    h0, l0 = dc.h_0, dc.lambda_0
    b = params.b
    if not b < 2.0 * h0:
        raise ParameterError(f"need b < 2H0 = {2 * h0}, got b={b}")
    bstar = _bstar_from(h0, l0)
    if b <= bstar:
        return l0 * l0
    hb = h0 - b / 2.0
    return l0 * l0 - (math.sqrt(h0 * h0 - hb * hb) - (h0 - l0)) ** 2


def bstar_upper_bound(params: ProblemParams) -> float:
    """Upper bound p (H_0 - Lambda_0) = d - k on b_*."""
    _require_bottom_defined(params)
    return float(params.d - params.k)


def closed_form(params: ProblemParams, tol: float = DEFAULT_TOL) -> ClosedFormValue | None:
    """The closed-form constant for ``params`` if one is known, else None."""
    require_valid(params)
    regime = classify_regime(params, tol)
    if regime is Regime.QUASI_SPHERICAL:
        return ClosedFormValue(quasi_spherical_constant(params, tol), FormulaId.QUASI_SPHERICAL)
    if regime is Regime.CYLINDRICAL:
        return ClosedFormValue(
            cylindrical_constant(params.replace(b=0.0, gamma=0.0)), FormulaId.CYLINDRICAL
        )
    if regime is Regime.BOTTOM and abs(params.p - 2.0) <= tol:
        return ClosedFormValue(bottom_constant_p2(params), FormulaId.BOTTOM_P2)
    return None
