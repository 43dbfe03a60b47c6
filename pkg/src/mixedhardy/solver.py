"""User-facing computations: the sharp constant, the plateau end b_*, sweeps."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import bounds, closedform
from .estimate import BoundCheck, BStarEstimate, ConstantEstimate, Flag, Provenance
from .params import DEFAULT_TOL, ParameterError, ProblemParams, Regime, classify_regime, derived, require_valid
from .rayleigh1d import refine_and_extrapolate

__all__ = [
    "BStarEstimate",
    "ConstantEstimate",
    "Diagnostic",
    "ScanResult",
    "compute_bstar",
    "compute_constant",
    "scan",
]

log = logging.getLogger(__name__)

DEFAULT_LEVELS = 4
PLATEAU_FACTOR = 10.0

# deep mesh for b_*: the gap below the plateau closes quadratically at b_*
BSTAR_LOG_THETA_MIN = -3000.0
BSTAR_CELLS_P2 = 8192
BSTAR_LEVELS_P2 = 6
BSTAR_TOL = 5e-3
BSTAR_EPS_CAP = 0.01

_PROVENANCE = {
    closedform.FormulaId.QUASI_SPHERICAL: Provenance.QUASI_SPHERICAL,
    closedform.FormulaId.CYLINDRICAL: Provenance.CYLINDRICAL,
    closedform.FormulaId.BOTTOM_P2: Provenance.BOTTOM_P2,
}

# labels of the formulas behind each kind of result, carried into output records
REFS = {
    Provenance.DEGENERATE: ("thm:degenerate", "eq:first"),
    Provenance.QUASI_SPHERICAL: ("eq:quasi_spherical",),
    Provenance.CYLINDRICAL: ("eq:cylindrical",),
    Provenance.BOTTOM_P2: ("eq:sharp", "eq:b_star"),
    Provenance.NUMERICAL: ("eq:1D", "eq:J_new"),
}


def compute_constant(
    params: ProblemParams,
    levels: int = DEFAULT_LEVELS,
    verify: bool = False,
    cells: int | None = None,
    log_theta_min: float | None = None,
    tol: float = 1e-10,
    max_iter: int = 50_000,
    regime_tol: float = DEFAULT_TOL,
    check_bounds: bool = True,
) -> ConstantEstimate:
    """Best constant S_{b,gamma} for ``params``.

    Closed forms are used where they exist; ``verify`` additionally runs the
    numerical minimization and flags disagreement beyond ten error
    indicators.  Non-convergence is reported through flags, never raised.
    """
    require_valid(params)
    regime = classify_regime(params, regime_tol)
    num_opts = dict(levels=levels, cells=cells, log_theta_min=log_theta_min, tol=tol, max_iter=max_iter)
    if regime is Regime.DEGENERATE:
        return ConstantEstimate(params, 0.0, Provenance.DEGENERATE, refs=REFS[Provenance.DEGENERATE])
    cf = closedform.closed_form(params, regime_tol)
    if cf is not None:
        prov = _PROVENANCE[cf.formula_id]
        est = ConstantEstimate(params, cf.value, prov, extrapolated=cf.value, refs=REFS[prov])
        if verify:
            num = refine_and_extrapolate(_numerical_params(params, regime), **num_opts)
            est.levels = num.levels
            est.extrapolated = num.extrapolated
            est.error_indicator = num.error_indicator
            est.discretization = num.discretization
            est.truncation = num.truncation
            est.iterations = num.iterations
            est.flags |= num.flags
            if abs(num.value - cf.value) > PLATEAU_FACTOR * num.error_indicator + 1e-12:
                est.flags.add(Flag.VERIFY_MISMATCH)
            _flag_plateau(est, num.value, regime)
        return est
    est = refine_and_extrapolate(params, **num_opts)
    est.refs = REFS[Provenance.NUMERICAL]
    _flag_plateau(est, est.value, regime)
    if check_bounds:
        est.bound_checks = bound_checks(params, est.value, est.error_indicator)
        if not all(c.satisfied for c in est.bound_checks):
            est.flags.add(Flag.BOUND_VIOLATED)
    return est


def _flag_plateau(est: ConstantEstimate, numerical: float, regime: Regime) -> None:
    if regime not in (Regime.BOTTOM, Regime.CYLINDRICAL):
        return
    lam0 = derived(est.params).lambda_0
    if lam0 > 0 and abs(numerical - lam0**est.params.p) <= PLATEAU_FACTOR * est.error_indicator:
        est.flags.add(Flag.POSSIBLY_PLATEAU)


def _numerical_params(params: ProblemParams, regime: Regime) -> ProblemParams:
    # the cylindrical closed form is classified with a tolerance; solve at the exact point
    if regime is Regime.CYLINDRICAL:
        return params.replace(b=0.0, gamma=0.0)
    return params


def bound_checks(params: ProblemParams, value: float, indicator: float) -> list[BoundCheck]:
    """Analytic upper bounds, each tested as bound >= value - indicator."""
    dc = derived(params)
    checks = []
    scale = max(abs(dc.lambda_0), 0.1)
    for frac in (1.0, 0.5, 0.2, 0.1, 0.02):
        lam = dc.lambda_0 - frac * scale
        bound = bounds.trial_power(params, lam)
        checks.append(BoundCheck(f"trial_power(lambda={lam:.6g})", bound, bound >= value - indicator))
    if classify_regime(params) is Regime.BOTTOM:
        s_min, delta = bounds.min_s_delta(params)
        checks.append(BoundCheck(f"s_delta(delta={delta:.3g})", s_min, s_min >= value - indicator))
        if dc.lambda_0 > 0:
            plateau = dc.lambda_0**params.p
            checks.append(BoundCheck("plateau", plateau, plateau >= value - indicator))
    return checks


# ---------------------------------------------------------------------------
# b_*


def _bstar_mesh(params: ProblemParams) -> dict:
    if abs(params.p - 2.0) <= DEFAULT_TOL:
        return dict(levels=BSTAR_LEVELS_P2, cells=BSTAR_CELLS_P2, log_theta_min=BSTAR_LOG_THETA_MIN)
    return dict(levels=DEFAULT_LEVELS)


def compute_bstar(
    params: ProblemParams,
    tol: float = BSTAR_TOL,
    margin: float = 0.0,
    eps_cap: float = BSTAR_EPS_CAP,
    levels: int | None = None,
    cells: int | None = None,
    log_theta_min: float | None = None,
) -> BStarEstimate:
    """Bracket the end b_* of the plateau S_{b,b} = Lambda_0^p by bisection.

    The predicate at b is S_num(b) < Lambda_0^p - margin(b), with
    margin(b) = max(10 * discretization indicator, ``margin``).  The lower
    end starts at b = 0, where S equals Lambda_0^p exactly.  ``gamma`` is
    ignored.
    """
    if not params.k + params.a > params.p:
        raise ParameterError(f"the bottom case needs k+a > p, got k+a={params.k + params.a}, p={params.p}")
    base = params.replace(b=0.0, gamma=0.0)
    require_valid(base)
    dc = derived(base)
    plateau = dc.lambda_0**params.p
    cap = params.p * dc.h_0 - eps_cap
    mesh = _bstar_mesh(params)
    for key, val in (("levels", levels), ("cells", cells), ("log_theta_min", log_theta_min)):
        if val is not None:
            mesh[key] = val
    probes: list[tuple[float, float, float]] = []
    margins: list[float] = []

    def below(b: float) -> bool:
        est = refine_and_extrapolate(params.replace(b=b, gamma=b), **mesh)
        m = max(PLATEAU_FACTOR * est.discretization, margin)
        margins.append(m)
        probes.append((b, est.value, m))
        log.info("bstar probe b=%.6f value=%.12g margin=%.3g", b, est.value, m)
        return est.value < plateau - m

    lo = 0.0
    hi = min(closedform.bstar_upper_bound(base), cap)
    ref = closedform.bstar_p2(base) if abs(params.p - 2.0) <= DEFAULT_TOL else None
    conclusive = True
    if not below(hi):
        if hi < cap and below(cap):
            lo, hi = hi, cap
        else:
            conclusive = False
    it = 0
    while conclusive and hi - lo >= tol:
        mid = 0.5 * (lo + hi)
        if below(mid):
            hi = mid
        else:
            lo = mid
        it += 1
    return BStarEstimate(
        params=base,
        bracket=(lo, hi),
        margin=max(margins) if margins else margin,
        iterations=it,
        closed_form_ref=ref,
        conclusive=conclusive,
        probes=probes,
    )


# ---------------------------------------------------------------------------
# sweeps


@dataclass(frozen=True)
class Diagnostic:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class ScanResult:
    axis: str
    grid: list[float]
    rows: list[ConstantEstimate | None]
    errors: list[str | None]
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def values(self) -> list[float]:
        return [r.value if r is not None else math.nan for r in self.rows]


def _scan_job(args):
    params, opts = args
    try:
        return compute_constant(params, **opts), None
    except (ParameterError, ValueError) as exc:
        return None, str(exc)


def scan(
    template: ProblemParams,
    axis: str,
    start: float,
    stop: float,
    count: int,
    workers: int = 1,
    **opts,
) -> ScanResult:
    """Evaluate compute_constant along b or gamma.

    On the ``b`` axis gamma follows b (bottom case).  Invalid grid points give
    an empty row with an error message; the sweep continues.  Rows are in
    grid order for any number of workers.
    """
    if axis not in ("b", "gamma"):
        raise ValueError(f"sweep axis must be 'b' or 'gamma', got {axis!r}")
    if int(count) != count or count < 1:
        raise ValueError(f"sweep needs at least one point, got {count}")
    grid = [float(x) for x in np.linspace(start, stop, int(count))]
    jobs = []
    for x in grid:
        p = template.replace(b=x, gamma=x) if axis == "b" else template.replace(gamma=x)
        jobs.append((p, opts))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(_scan_job, jobs))
    else:
        out = [_scan_job(j) for j in jobs]
    res = ScanResult(axis, grid, [o[0] for o in out], [o[1] for o in out])
    res.diagnostics = gamma_diagnostics(res) if axis == "gamma" else b_diagnostics(res)
    return res


def _valid_points(res: ScanResult):
    return [(x, r) for x, r in zip(res.grid, res.rows) if r is not None]


def gamma_diagnostics(res: ScanResult) -> list[Diagnostic]:
    """Non-decrease up to ties of two indicators; strict rise over 3-point windows."""
    pts = _valid_points(res)
    out = []
    worst = 0.0
    ok = True
    for (_, r0), (_, r1) in zip(pts, pts[1:]):
        slack = 2.0 * (r0.error_indicator + r1.error_indicator)
        drop = r0.value - r1.value
        worst = max(worst, drop)
        ok &= drop <= slack
    out.append(Diagnostic("gamma_nondecreasing", ok, f"largest drop {worst:.3e}"))
    ok = True
    smallest = math.inf
    for i in range(len(pts) - 2):
        r0, r2 = pts[i][1], pts[i + 2][1]
        rise = r2.value - r0.value
        smallest = min(smallest, rise)
        ok &= rise > 2.0 * max(r0.error_indicator, r2.error_indicator)
    out.append(Diagnostic("gamma_strict_increase", ok, f"smallest 3-point rise {smallest:.3e}"))
    return out


def b_diagnostics(res: ScanResult) -> list[Diagnostic]:
    """Non-increase in b and the two-sided Lipschitz bound for every pair."""
    pts = _valid_points(res)
    out = []
    ok = True
    worst = 0.0
    for (_, r0), (_, r1) in zip(pts, pts[1:]):
        rise = r1.value - r0.value
        worst = max(worst, rise)
        ok &= rise <= r0.error_indicator + r1.error_indicator + 1e-12
    out.append(Diagnostic("b_nonincreasing", ok, f"largest rise {worst:.3e}"))
    ok = True
    worst = -math.inf
    for i, (b2, r2) in enumerate(pts):
        hb2 = derived(r2.params).h_b
        for b1, r1 in pts[i + 1 :]:
            tol = r1.error_indicator + r2.error_indicator + 1e-12
            lower = r2.value - (r2.value / hb2) * (b1 - b2) - tol
            upper = r2.value + tol
            worst = max(worst, lower - r1.value, r1.value - upper)
            ok &= lower <= r1.value <= upper
    out.append(Diagnostic("b_lipschitz_sandwich", ok, f"largest violation {worst:.3e}"))
    return out
