import math

import pytest
from hypothesis import given, strategies as st

from mixedhardy.params import (
    ParameterError,
    ProblemParams,
    Regime,
    classify_regime,
    derived,
    positivity,
    validate,
)


def test_validate_all_conditions_hold():
    r = validate(ProblemParams(3, 2, 2, 1, 1, 1))
    assert r.cylindrical_summable and r.spherical_summable and r.denominator_summable
    assert r.ok


def test_validate_boundary_k_plus_a_zero_rejected():
    r = validate(ProblemParams(3, 2, 2, -2, 0, 0))
    assert not r.cylindrical_summable
    assert not r.ok
    assert "k+a>0" in r.failures()


def test_validate_p3_example():
    assert validate(ProblemParams(5, 2, 3, 0, 1, 4)).ok


@pytest.mark.parametrize("d,k,p", [(3, 3, 2), (2, 3, 2), (3, 0, 2), (3, 2, 1.0), (3, 2, 0.5)])
def test_structural_constraints(d, k, p):
    with pytest.raises(ParameterError):
        ProblemParams(d, k, p, 1, 0, 0)


def test_derived_examples():
    dc = derived(ProblemParams(3, 2, 2, 1, 1, 1))
    assert dc.h_b == pytest.approx(0.5)
    assert dc.h_0 == pytest.approx(1.0)
    assert dc.lambda_0 == pytest.approx(0.5)
    assert dc.p_h0 == pytest.approx(2.0)
    assert dc.tau_b == pytest.approx(0.5)
    dc = derived(ProblemParams(3, 2, 2, 1, 0, 0))
    assert dc.h_b == dc.h_0
    assert derived(ProblemParams(5, 2, 3, 0, 1, 4)).h_b == pytest.approx(1 / 3)


def test_derived_rejects_inadmissible():
    with pytest.raises(ParameterError):
        derived(ProblemParams(3, 2, 2, -2, 0, 0))


def test_regime_examples():
    assert classify_regime(ProblemParams(3, 2, 2, 1, 0.5, 2.5)) is Regime.QUASI_SPHERICAL
    assert classify_regime(ProblemParams(3, 2, 2, 1, 1, 1)) is Regime.BOTTOM
    assert classify_regime(ProblemParams(3, 2, 2, 1, 1, 0.5)) is Regime.DEGENERATE
    assert classify_regime(ProblemParams(3, 2, 2, 1, 0, 0)) is Regime.CYLINDRICAL
    assert classify_regime(ProblemParams(3, 2, 2, 1, 1, 1.5)) is Regime.GENERAL_ABOVE_BOTTOM


def test_positivity_examples():
    base = ProblemParams(3, 2, 2, 1, 1, 1)
    assert positivity(base)
    assert not positivity(base.replace(gamma=0.0))
    assert positivity(base.replace(gamma=3.0))


@st.composite
def any_params(draw):
    d = draw(st.integers(2, 8))
    k = draw(st.integers(1, d - 1))
    p = draw(st.floats(1.05, 5))
    b = draw(st.floats(-3, 5))
    # land on the exact equalities often enough to exercise them
    gamma = draw(st.one_of(st.floats(-3, 8), st.just(b), st.just(b + p), st.just(0.0)))
    return ProblemParams(d, k, p, draw(st.floats(-3, 5)), b, gamma)


@given(any_params())
def test_regime_exhaustive_and_exclusive(params):
    tol = 1e-12
    gap = params.gamma - params.b
    cases = {
        Regime.DEGENERATE: gap < -tol,
        Regime.BOTTOM: abs(gap) <= tol and not (abs(params.b) <= tol and abs(params.gamma) <= tol),
        Regime.CYLINDRICAL: abs(gap) <= tol and abs(params.b) <= tol and abs(params.gamma) <= tol,
        Regime.QUASI_SPHERICAL: abs(gap - params.p) <= tol,
        Regime.GENERAL_ABOVE_BOTTOM: gap > tol and abs(gap - params.p) > tol,
    }
    assert sum(cases.values()) == 1
    assert cases[classify_regime(params, tol)]
    assert positivity(params, tol) == (gap >= -tol)


@given(st.floats(-1, 1), st.floats(0, 0.5))
def test_h_b_slope_is_minus_one_over_p(b, db):
    params = ProblemParams(6, 2, 2.5, 1.0, b, b + 3)
    h1 = derived(params).h_b
    h2 = derived(params.replace(b=b + db, gamma=b + db + 3)).h_b
    assert h1 - h2 == pytest.approx(db / 2.5, abs=1e-12)


@given(st.floats(-3, 3), st.floats(0, 3))
def test_validate_monotone_in_gamma(gamma, dg):
    params = ProblemParams(4, 2, 2, 1, 0.5, gamma)
    if validate(params).denominator_summable:
        assert validate(params.replace(gamma=gamma + dg)).denominator_summable


@given(st.floats(-4.9e-13, 4.9e-13))
def test_classification_stable_under_small_gamma_perturbation(eps):
    for g in (1.0, 1.0 + 0.7, 3.0, 0.4):
        params = ProblemParams(3, 2, 2, 1, 1, g)
        assert classify_regime(params.replace(gamma=g + eps), 1e-12) is classify_regime(params, 1e-12)


def test_admissibility_uses_strict_inequalities():
    # d + a - p == b exactly
    assert not validate(ProblemParams(3, 2, 2, 1, 2, 2)).spherical_summable
    assert math.isfinite(derived(ProblemParams(3, 2, 2, 1, 1.999, 1.999)).h_b)
