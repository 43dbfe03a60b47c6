import math

import pytest

from mixedhardy import closedform
from mixedhardy.estimate import Flag, Provenance
from mixedhardy.params import ParameterError, ProblemParams, derived
from mixedhardy.solver import compute_bstar, compute_constant, scan


def test_quasi_spherical_closed_form():
    est = compute_constant(ProblemParams(5, 2, 3, 0, 1, 4))
    assert est.value == pytest.approx(1 / 27, rel=1e-14)
    assert est.provenance is Provenance.QUASI_SPHERICAL
    assert est.provenance.closed_form


def test_degenerate_is_zero():
    est = compute_constant(ProblemParams(3, 2, 2, 1, 1, 0.5))
    assert est.value == 0.0
    assert est.provenance is Provenance.DEGENERATE


def test_invalid_params_raise():
    with pytest.raises(ParameterError):
        compute_constant(ProblemParams(3, 2, 2, -2, 0, 0))


def test_general_gamma_between_endpoints():
    est = compute_constant(ProblemParams(3, 2, 2, 1, 1, 1.5))
    assert est.provenance is Provenance.NUMERICAL
    assert 0.1160254 < est.value < 0.25
    assert est.converged
    assert all(c.satisfied for c in est.bound_checks)
    assert "eq:1D" in est.refs


def test_levels_non_increasing_and_value_is_extrapolated():
    est = compute_constant(ProblemParams(4, 2, 3, 1.5, 1, 2))
    assert all(b <= a for a, b in zip(est.levels, est.levels[1:]))
    assert est.value == est.extrapolated
    for c in est.bound_checks:
        assert c.value >= est.value - est.error_indicator


def test_verify_agrees_with_closed_form():
    for params in (ProblemParams(3, 2, 2, 1, 1, 1), ProblemParams(3, 2, 2, 1, 0.5, 2.5), ProblemParams(4, 3, 2, 1, 0, 0)):
        est = compute_constant(params, verify=True)
        assert Flag.VERIFY_MISMATCH not in est.flags
        assert abs(est.extrapolated - est.value) <= 10 * est.error_indicator + 1e-12


def test_cylindrical_flagged_as_plateau_when_verified():
    est = compute_constant(ProblemParams(3, 2, 2, 1, 0, 0), verify=True)
    assert est.provenance is Provenance.CYLINDRICAL
    assert est.value == 0.25
    assert Flag.POSSIBLY_PLATEAU in est.flags


@pytest.mark.parametrize("b", [0.3, 1.0, 1.6])
def test_bottom_p3_below_plateau_and_bounds(b):
    params = ProblemParams(4, 2, 3, 1.5, b, b)
    est = compute_constant(params)
    lam0 = derived(params).lambda_0
    assert est.value <= lam0**3 + est.error_indicator
    kinds = [c.kind for c in est.bound_checks]
    assert "plateau" in kinds and any(k.startswith("s_delta") for k in kinds)
    assert Flag.BOUND_VIOLATED not in est.flags


def test_bottom_limit_vanishes():
    params = ProblemParams(3, 2, 2, 1, 1.95, 1.95)
    est = compute_constant(params, verify=True)
    assert est.value < 0.05
    assert est.extrapolated < 0.05


def test_gamma_monotone_general_p():
    vals = []
    for g in (1.0, 1.5, 2.0, 2.5, 3.0, 4.0):
        est = compute_constant(ProblemParams(4, 2, 3, 1.5, 1, g))
        vals.append((est.value, est.error_indicator))
    for (v0, e0), (v1, e1) in zip(vals, vals[1:]):
        assert v1 >= v0 - 2 * (e0 + e1)
    assert vals[-1][0] == pytest.approx(derived(ProblemParams(4, 2, 3, 1.5, 1, 4)).h_b ** 3)


def test_bstar_p3_property():
    est = compute_bstar(ProblemParams(4, 2, 3, 1.5, 0, 0))
    assert est.conclusive
    assert 0 < est.bracket[0] < est.bracket[1] <= 2
    assert est.width < 5e-3
    assert est.closed_form_ref is None


def test_bstar_coarse_mesh_errs_upward():
    # values approach the plateau from above, so a coarse mesh can only delay the predicate
    est = compute_bstar(ProblemParams(3, 2, 2, 1, 0, 0), tol=2e-2, levels=3, cells=1024, log_theta_min=-1500.0)
    assert est.closed_form_ref == pytest.approx(2 - math.sqrt(3))
    assert est.bracket[1] >= est.closed_form_ref
    assert est.width < 2e-2
    for b, value, margin in est.probes:
        if value < 0.25 - margin:
            assert b > est.closed_form_ref


def test_bstar_requires_bottom_case():
    with pytest.raises(ParameterError):
        compute_bstar(ProblemParams(4, 2, 3, 1, 0, 0))
    with pytest.raises(ParameterError):
        compute_bstar(ProblemParams(3, 2, 2, -0.5, 0, 0))


def test_scan_gamma():
    res = scan(ProblemParams(3, 2, 2, 1, 1, 1), "gamma", 1.0, 3.0, 9)
    vals = res.values
    assert vals[0] == pytest.approx(closedform.bottom_constant_p2(ProblemParams(3, 2, 2, 1, 1, 1)))
    assert vals[-1] == pytest.approx(0.25)
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert all(d.passed for d in res.diagnostics)


def test_scan_b_plateau_then_decrease():
    res = scan(ProblemParams(3, 2, 2, 1, 0, 0), "b", 0.0, 1.8, 10)
    vals = res.values
    bs = closedform.bstar_p2(ProblemParams(3, 2, 2, 1, 0, 0))
    for b, v in zip(res.grid, vals):
        if b <= bs:
            assert v == 0.25
        else:
            assert v < 0.25
    assert all(b < a for a, b in zip(vals[1:], vals[2:]))
    assert all(d.passed for d in res.diagnostics)


def test_scan_rows_independent_of_workers():
    a = scan(ProblemParams(4, 2, 3, 1.5, 1, 1), "gamma", 1.0, 2.0, 3, workers=1)
    b = scan(ProblemParams(4, 2, 3, 1.5, 1, 1), "gamma", 1.0, 2.0, 3, workers=2)
    assert a.values == b.values


def test_scan_invalid_point_flagged_not_fatal():
    res = scan(ProblemParams(3, 2, 2, 1, 0, 0), "b", 1.0, 2.5, 4)
    assert res.rows[-1] is None and res.errors[-1]
    assert res.rows[0] is not None


def test_scan_empty_range():
    with pytest.raises(ValueError):
        scan(ProblemParams(3, 2, 2, 1, 1, 1), "gamma", 1.0, 3.0, 0)
    with pytest.raises(ValueError):
        scan(ProblemParams(3, 2, 2, 1, 1, 1), "a", 1.0, 3.0, 3)
