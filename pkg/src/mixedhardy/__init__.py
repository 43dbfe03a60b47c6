"""Sharp constants of Hardy inequalities with mixed cylindrical-spherical weights.

The inequality under study is

    S * int |y|^(a-p-b+gamma) |z|^(-gamma) |u|^p dz  <=  int |y|^a |z|^(-b) |grad u|^p dz

on R^d = R^k x R^(d-k), z = (y, x).  The package computes the best constant S
from closed forms where they exist and otherwise from a one-dimensional
reduction on the sphere, together with analytic upper and lower bounds.
"""

from .params import (
    DerivedConstants,
    ParameterError,
    ProblemParams,
    Regime,
    RegimeError,
    ValidityReport,
    classify_regime,
    derived,
    positivity,
    validate,
)
from .solver import BStarEstimate, ConstantEstimate, compute_bstar, compute_constant, scan

__all__ = [
    "BStarEstimate",
    "ConstantEstimate",
    "DerivedConstants",
    "ParameterError",
    "ProblemParams",
    "Regime",
    "RegimeError",
    "ValidityReport",
    "classify_regime",
    "compute_bstar",
    "compute_constant",
    "derived",
    "positivity",
    "scan",
    "validate",
]

__version__ = "0.1.0"
