"""Problem parameters, derived constants and regime classification."""

from __future__ import annotations

import enum
from dataclasses import dataclass

DEFAULT_TOL = 1e-12


class ParameterError(ValueError):
    """Parameters outside the admissible range of an operation."""


class RegimeError(ValueError):
    """An operation was requested for a regime it does not cover."""


@dataclass(frozen=True)
class ProblemParams:
    """The sextuple (d, k, p, a, b, gamma).

    ``d > k >= 1`` and ``p > 1`` are structural and enforced on construction.
    Summability of the weights is *not* enforced here; see :func:`validate`.
    """

    d: int
    k: int
    p: float
    a: float
    b: float
    gamma: float

    def __post_init__(self):
        if int(self.d) != self.d or int(self.k) != self.k:
            raise ParameterError(f"d and k must be integers, got d={self.d}, k={self.k}")
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "k", int(self.k))
        for name in ("p", "a", "b", "gamma"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if self.k < 1:
            raise ParameterError(f"need k >= 1, got k={self.k}")
        if self.d <= self.k:
            raise ParameterError(f"need d > k, got d={self.d}, k={self.k}")
        if not self.p > 1:
            raise ParameterError(f"need p > 1, got p={self.p}")

    def replace(self, **changes) -> "ProblemParams":
        fields = dict(d=self.d, k=self.k, p=self.p, a=self.a, b=self.b, gamma=self.gamma)
        fields.update(changes)
        return ProblemParams(**fields)

    def as_dict(self) -> dict:
        return dict(d=self.d, k=self.k, p=self.p, a=self.a, b=self.b, gamma=self.gamma)


@dataclass(frozen=True)
class ValidityReport:
    cylindrical_summable: bool  # k + a > 0
    spherical_summable: bool  # d + a - p > b
    denominator_summable: bool  # k + a - p > b - gamma

    @property
    def ok(self) -> bool:
        return self.cylindrical_summable and self.spherical_summable and self.denominator_summable

    def failures(self) -> list[str]:
        out = []
        if not self.cylindrical_summable:
            out.append("k+a>0")
        if not self.spherical_summable:
            out.append("d+a-p>b")
        if not self.denominator_summable:
            out.append("k+a-p>b-gamma")
        return out


def validate(params: ProblemParams) -> ValidityReport:
    """Check the three local summability conditions (strict inequalities)."""
    d, k, p, a, b, g = params.d, params.k, params.p, params.a, params.b, params.gamma
    return ValidityReport(
        cylindrical_summable=k + a > 0,
        spherical_summable=d + a - p > b,
        denominator_summable=k + a - p > b - g,
    )


def require_valid(params: ProblemParams) -> None:
    report = validate(params)
    if not report.ok:
        raise ParameterError(
            f"inadmissible parameters {params.as_dict()}: violated {', '.join(report.failures())}"
        )


@dataclass(frozen=True)
class DerivedConstants:
    h_b: float
    h_0: float
    lambda_0: float
    p_h0: float
    tau_b: float  # nan when h_0 == 0


def derived(params: ProblemParams) -> DerivedConstants:
    require_valid(params)
    p = params.p
    p_h0 = params.d + params.a - p
    h_0 = p_h0 / p
    h_b = (p_h0 - params.b) / p
    lambda_0 = (params.k + params.a - p) / p
    tau_b = h_b / h_0 if h_0 != 0 else float("nan")
    return DerivedConstants(h_b=h_b, h_0=h_0, lambda_0=lambda_0, p_h0=p_h0, tau_b=tau_b)


class Regime(enum.Enum):
    DEGENERATE = "degenerate"
    BOTTOM = "bottom"
    GENERAL_ABOVE_BOTTOM = "general_above_bottom"
    QUASI_SPHERICAL = "quasi_spherical"
    CYLINDRICAL = "cylindrical"


def classify_regime(params: ProblemParams, tol: float = DEFAULT_TOL) -> Regime:
    """Return the regime of ``params``.

    Equalities gamma == b, gamma == p + b and b == 0 are decided with the
    absolute tolerance ``tol``.  The purely cylindrical case wins over the
    bottom case.
    """
    b, g, p = params.b, params.gamma, params.p
    gap = g - b
    if abs(gap) <= tol:
        if abs(b) <= tol and abs(g) <= tol:
            return Regime.CYLINDRICAL
        return Regime.BOTTOM
    if gap < 0:
        return Regime.DEGENERATE
    if abs(g - (p + b)) <= tol:
        return Regime.QUASI_SPHERICAL
    return Regime.GENERAL_ABOVE_BOTTOM


def positivity(params: ProblemParams, tol: float = DEFAULT_TOL) -> bool:
    """True iff the best constant is positive, i.e. gamma >= b."""
    return classify_regime(params, tol) is not Regime.DEGENERATE
