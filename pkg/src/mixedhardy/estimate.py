"""Result records shared by the minimizer and the solver front end."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .params import ProblemParams


class Provenance(enum.Enum):
    """Where a value came from; the string values are the output labels."""

    DEGENERATE = "theorem1_degenerate"
    QUASI_SPHERICAL = "closed_form_quasi_spherical"
    CYLINDRICAL = "closed_form_cylindrical"
    BOTTOM_P2 = "closed_form_bottom_p2"
    NUMERICAL = "numerical"

    @property
    def closed_form(self) -> bool:
        return self is not Provenance.NUMERICAL


class Flag(str, enum.Enum):
    POSSIBLY_PLATEAU = "possibly-plateau"
    NOT_CONVERGED = "not-converged"
    BOUND_VIOLATED = "bound-violated"
    VERIFY_MISMATCH = "verify-mismatch"


@dataclass(frozen=True)
class BoundCheck:
    """An upper bound on the constant and whether the estimate respects it."""

    kind: str
    value: float
    satisfied: bool


@dataclass
class ConstantEstimate:
    """Estimate of the sharp constant for one parameter set.

    ``levels`` holds the discrete minima on successively refined meshes (empty
    for closed forms), ``extrapolated`` the Richardson value built from them.
    ``error_indicator`` is the sum of ``discretization`` (difference of the
    last two extrapolated values) and ``truncation`` (one-sided bias from the
    finite mesh depth, nonzero only where minimizing sequences concentrate).
    """

    params: ProblemParams
    value: float
    provenance: Provenance
    levels: list[float] = field(default_factory=list)
    extrapolated: float = float("nan")
    error_indicator: float = 0.0
    discretization: float = 0.0
    truncation: float = 0.0
    flags: set[Flag] = field(default_factory=set)
    bound_checks: list[BoundCheck] = field(default_factory=list)
    refs: tuple[str, ...] = ()
    iterations: list[int] = field(default_factory=list)
    profile: object = field(default=None, repr=False, compare=False)

    @property
    def converged(self) -> bool:
        return Flag.NOT_CONVERGED not in self.flags

    def flag_labels(self) -> list[str]:
        return sorted(f.value for f in self.flags)


@dataclass
class BStarEstimate:
    """Bisection bracket for the end of the plateau in the bottom case."""

    params: ProblemParams
    bracket: tuple[float, float]
    margin: float
    iterations: int
    closed_form_ref: float | None = None
    conclusive: bool = True
    probes: list[tuple[float, float, float]] = field(default_factory=list)

    @property
    def width(self) -> float:
        return self.bracket[1] - self.bracket[0]

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.bracket[0] + self.bracket[1])

    def contains(self, x: float) -> bool:
        return self.bracket[0] <= x <= self.bracket[1]
