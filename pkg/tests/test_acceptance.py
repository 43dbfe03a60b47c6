"""Acceptance criteria 1-9, one printed PASS/FAIL line each."""

import math
import time
import warnings

import numpy as np
import pytest

from mixedhardy import bounds, closedform, fullspace, quadrature, suites
from mixedhardy.estimate import Flag
from mixedhardy.params import ProblemParams, derived
from mixedhardy.rayleigh1d import NonsmoothPointWarning, refine_and_extrapolate
from mixedhardy.solver import compute_bstar, compute_constant, scan


@pytest.fixture
def report(capsys):
    def emit(number, passed, detail):
        with capsys.disabled():
            print(f"\ncriterion {number}: {'PASS' if passed else 'FAIL'} {detail}")
        assert passed, detail

    return emit


def test_criterion_1_sharp_constant_regression(report):
    worst_err, worst_time = 0.0, 0.0
    for d, k, a, b in suites.P2_REFERENCE:
        params = ProblemParams(d, k, 2.0, a, b, b)
        t0 = time.perf_counter()
        est = refine_and_extrapolate(params, levels=4)
        worst_time = max(worst_time, time.perf_counter() - t0)
        exact = closedform.bottom_constant_p2(params)
        worst_err = max(worst_err, abs(est.value / exact - 1))
    report(1, worst_err <= 1e-3 and worst_time < 10,
           f"max relative error {worst_err:.2e} (tol 1e-3), slowest run {worst_time:.2f} s (limit 10 s)")


def test_criterion_2_bstar_closed_form(report):
    details, ok = [], True
    for d, ref in ((3, 2 - math.sqrt(3)), (4, 3 - 2 * math.sqrt(1.25))):
        est = compute_bstar(ProblemParams(d, 2, 2.0, 1.0, 0.0, 0.0))
        good = est.conclusive and est.width <= 5e-3 and est.contains(ref)
        ok &= good
        details.append(f"d={d}: [{est.bracket[0]:.6f}, {est.bracket[1]:.6f}] vs {ref:.7f}")
    report(2, ok, "; ".join(details))


def test_criterion_3_quasi_spherical_exactness(report):
    details, ok = [], True
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NonsmoothPointWarning)
        for params in (ProblemParams(3, 2, 2.0, 1.0, 0.5, 2.5), ProblemParams(5, 2, 3.0, 0.0, 1.0, 4.0)):
            # a depth at which the constant profile stays representable in floating point
            est = refine_and_extrapolate(params, levels=4, log_theta_min=-200.0)
            exact = derived(params).h_b ** params.p
            rel = max(abs(v / exact - 1) for v in est.levels + [est.value])
            phi = est.profile.values
            dev = float(np.max(np.abs(phi - phi.mean())) / abs(phi.mean()))
            ok &= rel <= 1e-6 and dev <= 1e-5
            details.append(f"p={params.p:g}: rel err {rel:.1e}, profile deviation {dev:.1e}")
    report(3, ok, "; ".join(details))


def test_criterion_4_degeneration_rate(report):
    details, ok = [], True
    for params in suites.SCALING_CASES:
        t0 = time.perf_counter()
        slope, err = fullspace.scaling_slope(params, samples=250_000)
        elapsed = time.perf_counter() - t0
        target = params.gamma - params.b
        ok &= abs(slope - target) <= 0.1 and elapsed < 30
        details.append(f"gamma-b={target:g}: slope {slope:.3f} +- {err:.3f} ({elapsed:.1f} s)")
    report(4, ok, "; ".join(details))


def test_criterion_5_identity_suite(report):
    iii = max(quadrature.check_useful_iii(d, k, t) for d, k, t in suites.MOMENT_GRID)
    useful = max(fullspace.useful_identity_residual(fullspace.random_sphere_points(d, 100), k) for d, k in ((3, 2), (5, 3)))
    base = ProblemParams(3, 2, 2.0, 1.0, 1.0, 1.0)
    bb = closedform.bstar_p2(base)
    pairs = ((closedform.lambda_b_p2(base), 1.0), (0.0, 1.0), (derived(base).lambda_0, bb), (0.25, 0.5))
    pts = fullspace.random_points(3, 2, 50)
    pde = max(fullspace.p2_pde_residual(base.replace(b=b, gamma=b), lam, pts) for lam, b in pairs)
    report(5, len(suites.MOMENT_GRID) == 12 and iii <= 1e-10 and useful <= 1e-6 and pde <= 1e-5,
           f"moment recursion {iii:.1e} (1e-10), gradient identity {useful:.1e} (1e-6), p=2 equation {pde:.1e} (1e-5)")


def test_criterion_6_monotonicity(report):
    g = scan(ProblemParams(3, 2, 2.0, 1.0, 1.0, 1.0), "gamma", 1.0, 3.0, 20)
    b2 = scan(ProblemParams(3, 2, 2.0, 1.0, 0.0, 0.0), "b", 0.0, 1.8, 10, verify=True)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NonsmoothPointWarning)
        b3 = scan(ProblemParams(4, 2, 3.0, 1.5, 0.0, 0.0), "b", 0.0, 1.8, 8)
    diags = g.diagnostics + b2.diagnostics + b3.diagnostics
    complete = all(r is not None for r in g.rows + b2.rows + b3.rows)
    report(6, complete and all(d.passed for d in diags),
           ", ".join(f"{d.name} {'ok' if d.passed else 'FAILED'}" for d in diags))


def test_criterion_7_plateau_and_bounds(report):
    details, ok = [], True
    for b in (0.0, 0.1, 0.2):
        params = ProblemParams(3, 2, 2.0, 1.0, b, b)
        est = compute_constant(params, verify=True)
        lvl = est.levels[-1]
        good = 0.25 <= lvl <= 0.27 and Flag.POSSIBLY_PLATEAU in est.flags
        ok &= good
        details.append(f"b={b}: level value {lvl:.5f}")
    # every bottom-case numerical value against the analytic upper bounds
    worst_s, worst_p = -math.inf, -math.inf
    for d, k, a, b in suites.P2_REFERENCE + tuple((3, 2, 1.0, b) for b in (0.0, 0.1, 0.2)):
        params = ProblemParams(d, k, 2.0, a, b, b)
        est = refine_and_extrapolate(params, levels=4)
        s_min, _ = bounds.min_s_delta(params)
        worst_s = max(worst_s, est.value - s_min)
        worst_p = max(worst_p, est.value - derived(params).lambda_0 ** 2 - est.error_indicator)
    ok &= worst_s <= 1e-6 and worst_p <= 0
    details.append(f"max(value - min s_delta) {worst_s:.1e} (1e-6), max(value - plateau - indicator) {worst_p:.1e} (0)")
    report(7, ok, "; ".join(details))


def test_criterion_8_supersolution_certificate(report):
    good = bounds.certify_lower_bound(ProblemParams(4, 2, 2.0, 1.0, 0.025, 0.025))
    bad = bounds.certify_lower_bound(ProblemParams(4, 2, 2.0, 1.0, 1.0, 1.0))
    report(8, good.valid and not bad.valid,
           f"b=0.025 certified with alpha={good.witness.get('alpha', float('nan')):.4g}; b=1 certified: {bad.valid}")


def test_criterion_9_attainment_not_asserted(capsys):
    # Whether the constant is attained cannot be decided numerically.  The
    # concentration of plateau minimizers at the axis, which is what prevents
    # attainment, shows up in criterion 7 as level values decreasing towards
    # Lambda_0^p under refinement.  Nothing is asserted here.
    with capsys.disabled():
        print("\ncriterion 9: DOCUMENTED attainment is covered only through the plateau behaviour of criterion 7")
