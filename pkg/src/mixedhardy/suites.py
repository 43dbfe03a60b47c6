"""Verification suites shared by the command line and the test-suite."""

from __future__ import annotations

from dataclasses import dataclass

from . import bounds, closedform, fullspace, quadrature
from .estimate import Flag
from .params import ProblemParams, derived
from .solver import compute_constant

SUITES = ("identities", "bounds", "scaling")

# (d, k, tau) with k + tau > 2
MOMENT_GRID = (
    (3, 2, 1.0), (3, 2, 2.5), (3, 1, 2.0), (4, 2, 1.0),
    (4, 3, 0.5), (4, 1, 3.0), (5, 2, 2.0), (5, 3, -0.5),
    (6, 2, 4.0), (6, 4, 1.5), (7, 3, 0.25), (8, 5, -2.5),
)

P2_REFERENCE = ((3, 2, 1.0, 1.0), (3, 2, 1.0, 0.5), (4, 2, 1.0, 1.0), (4, 3, 0.5, 1.0), (5, 2, 1.0, 2.0))

SCALING_CASES = (
    ProblemParams(4, 2, 2.0, 3.0, 2.0, 0.0),
    ProblemParams(4, 2, 2.0, 2.0, 1.0, 0.0),
    ProblemParams(4, 2, 2.0, 2.0, 1.0, 1.0),
)


@dataclass(frozen=True)
class Check:
    name: str
    measured: float
    tolerance: float
    passed: bool

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: {self.measured:.3e} (tolerance {self.tolerance:.1e})"


def _le(name: str, measured: float, tol: float) -> Check:
    return Check(name, measured, tol, bool(measured <= tol))


def identities(seed: int = fullspace.DEFAULT_SEED) -> list[Check]:
    out = []
    worst = max(quadrature.check_useful_iii(d, k, t) for d, k, t in MOMENT_GRID)
    out.append(_le(f"sphere moment recursion over {len(MOMENT_GRID)} cases", worst, 1e-10))
    for d, k in ((3, 2), (5, 3)):
        pts = fullspace.random_sphere_points(d, 100, seed)
        out.append(_le(f"tangential gradient identity d={d} k={k}", fullspace.useful_identity_residual(pts, k), 1e-6))
    base = ProblemParams(3, 2, 2.0, 1.0, 1.0, 1.0)
    bb = closedform.bstar_p2(base)
    lam0 = derived(base).lambda_0
    pairs = (
        (closedform.lambda_b_p2(base), 1.0),
        (0.0, 1.0),
        (lam0, bb),
        (0.25, 0.5),
    )
    pts = fullspace.random_points(3, 2, 50, seed)
    for lam, b in pairs:
        params = base.replace(b=b, gamma=b)
        res = fullspace.p2_pde_residual(params, lam, pts)
        out.append(_le(f"p=2 divergence identity lambda={lam:.6g} b={b:.6g}", res, 1e-5))
    return out


def bound_suite(levels: int = 4) -> list[Check]:
    out = []
    for d, k, a, b in P2_REFERENCE:
        params = ProblemParams(d, k, 2.0, a, b, b)
        exact = closedform.bottom_constant_p2(params)
        est = compute_constant(params, levels=levels, verify=True)
        num = est.extrapolated
        out.append(_le(f"sharp constant d={d} k={k} a={a} b={b} relative error", abs(num / exact - 1), 1e-3))
        lb = closedform.lambda_b_p2(params)
        gap = abs(bounds.trial_power(params, lb) / exact - 1)
        out.append(_le(f"explicit minimizer quotient d={d} k={k} a={a} b={b}", gap, 1e-7))
        s_min, _ = bounds.min_s_delta(params)
        out.append(_le(f"s_delta sandwich d={d} k={k} a={a} b={b}", num - s_min, 1e-6))
    plateau = 0.25
    for b in (0.0, 0.1, 0.2):
        params = ProblemParams(3, 2, 2.0, 1.0, b, b)
        est = compute_constant(params, levels=levels, verify=True)
        lvl = est.levels[-1]
        out.append(Check(f"plateau level value b={b}", lvl - plateau, 0.02, bool(0 <= lvl - plateau <= 0.02)))
        flagged = Flag.POSSIBLY_PLATEAU in est.flags
        out.append(Check(f"plateau flag b={b}", float(flagged), 1.0, flagged))
        s_min, _ = bounds.min_s_delta(params)
        out.append(_le(f"plateau s_delta sandwich b={b}", est.extrapolated - s_min, 1e-6))
        out.append(_le(f"plateau upper bound b={b}", est.extrapolated - plateau - est.error_indicator, 0.0))
    cert = bounds.certify_lower_bound(ProblemParams(4, 2, 2.0, 1.0, 0.025, 0.025))
    out.append(Check("supersolution certificate b=0.025", float(cert.valid), 1.0, cert.valid))
    cert = bounds.certify_lower_bound(ProblemParams(4, 2, 2.0, 1.0, 1.0, 1.0))
    out.append(Check("no supersolution certificate b=1", float(cert.valid), 0.0, not cert.valid))
    return out


def scaling(samples: int = 1_000_000, seed: int = fullspace.DEFAULT_SEED, workers: int = 1) -> list[Check]:
    out = []
    per_shift = samples // len(fullspace.DEFAULT_H_LIST)
    for params in SCALING_CASES:
        slope, _ = fullspace.scaling_slope(params, samples=per_shift, seed=seed, workers=workers)
        target = params.gamma - params.b
        out.append(_le(f"degeneration slope {params.as_dict()} target {target:g}", abs(slope - target), 0.1))
    return out


def run(suite: str, **opts) -> list[Check]:
    if suite == "identities":
        return identities(seed=opts.get("seed", fullspace.DEFAULT_SEED))
    if suite == "bounds":
        return bound_suite(levels=opts.get("levels", 4))
    if suite == "scaling":
        return scaling(
            samples=opts.get("samples", 1_000_000),
            seed=opts.get("seed", fullspace.DEFAULT_SEED),
            workers=opts.get("workers", 1),
        )
    if suite == "all":
        return [c for s in SUITES for c in run(s, **opts)]
    raise ValueError(f"unknown suite {suite!r}")
