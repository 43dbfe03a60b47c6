"""Reduced one-dimensional Rayleigh quotient and its minimization.

For profiles depending only on t = |Pi sigma| = sin(theta) the spherical
quotient becomes

    num = int_0^{pi/2} sin^(k+a-1) cos^(d-k-1) [phi_theta^2 + H_b^2 phi^2]^(p/2)
    den = int_0^{pi/2} sin^(k+a-1-p+gamma-b) cos^(d-k-1) |phi|^p

and is minimized over continuous piecewise-linear phi on a mesh graded
geometrically towards theta = 0 (no boundary conditions at either end).

Meshes reach down to theta ~ 1e-200 and below, where the raw weights
underflow.  Nodes are therefore kept as log(theta), and all cell integrals are
evaluated relative to the right end of the cell in the rescaled unknowns

    c_i = phi_i * theta_i^s,     s = Lambda_0 = (k+a-p)/p,

for which every cell contribution is O(1).  This is a diagonal change of
basis: the trial space and the discrete minimum are unchanged.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import LinAlgError, cho_solve_banded, cholesky_banded, eigvalsh_tridiagonal, solve_banded

from .params import ParameterError, ProblemParams, classify_regime, Regime, derived, require_valid
from .quadrature import HALF_PI, _jacobi, _legendre

log = logging.getLogger(__name__)

MIN_CELLS = 16
DEFAULT_THETA_MIN = 1e-200
DEFAULT_CELLS = 512
P2_LOG_THETA_MIN = -1500.0
P2_CELLS = 2048
DEFAULT_SWITCH = 0.5  # geometric grading below, uniform spacing above
DEFAULT_POINTS = 8


class ConvergenceError(RuntimeError):
    pass


class NonsmoothPointWarning(RuntimeWarning):
    pass


# ---------------------------------------------------------------------------
# meshes


@dataclass(frozen=True)
class ThetaMesh:
    """Partition 0 = theta_0 < theta_1 < ... < theta_N = pi/2.

    ``log_nodes`` holds log(theta_i) for i = 1..N.  ``n_geo`` counts the
    cells after the first one that are split geometrically on refinement.
    """

    log_nodes: np.ndarray
    n_geo: int
    theta_min: float
    ratio: float
    level: int = 0

    @property
    def n_cells(self) -> int:
        return self.log_nodes.size

    @property
    def nodes(self) -> np.ndarray:
        return np.concatenate(([0.0], np.exp(self.log_nodes)))

    @property
    def log_theta_min(self) -> float:
        return float(self.log_nodes[0])

    def contains(self, other: "ThetaMesh") -> bool:
        """True when every node of ``other`` is a node of this mesh."""
        return bool(np.all(np.isin(other.log_nodes, self.log_nodes)))


def build_mesh(
    theta_min: float = DEFAULT_THETA_MIN,
    n: int = DEFAULT_CELLS,
    switch: float = DEFAULT_SWITCH,
    level: int = 0,
    log_theta_min: float | None = None,
) -> ThetaMesh:
    """Graded mesh with ``n`` cells (n+1 nodes) and first interior node ``theta_min``.

    Cells are geometric from ``theta_min`` up to ``switch`` and uniform above,
    with the uniform step matched to the geometric step at ``switch``.
    ``level`` > 0 applies that many nested refinements, each halving
    theta_min and doubling the number of cells.  ``log_theta_min`` overrides
    ``theta_min`` for meshes deeper than the floating-point range.
    """
    if int(n) != n or n < MIN_CELLS:
        raise ValueError(f"need at least {MIN_CELLS} cells, got {n}")
    if log_theta_min is None:
        if not 0.0 < theta_min < 1e-4:
            raise ValueError(f"theta_min must lie in (0, 1e-4), got {theta_min}")
        log_theta_min = math.log(theta_min)
    elif not log_theta_min < math.log(1e-4):
        raise ValueError(f"log_theta_min must be below log(1e-4), got {log_theta_min}")
    theta_min = math.exp(log_theta_min)
    if not 0 < switch < HALF_PI:
        raise ValueError(f"switch point must lie in (theta_min, pi/2), got {switch}")
    n = int(n)
    lg = math.log(switch) - log_theta_min
    step = (lg + (HALF_PI - switch) / switch) / (n - 1)
    m_geo = min(n - 2, max(1, round(lg / step)))
    m_uni = n - 1 - m_geo
    logs_geo = log_theta_min + lg * np.arange(m_geo + 1) / m_geo
    uni = np.linspace(switch, HALF_PI, m_uni + 1)[1:]
    log_nodes = np.concatenate((logs_geo, np.log(uni)))
    log_nodes[-1] = math.log(HALF_PI)
    mesh = ThetaMesh(log_nodes=log_nodes, n_geo=m_geo, theta_min=theta_min, ratio=math.exp(lg / m_geo))
    for _ in range(level):
        mesh = refine(mesh)
    return mesh


def refine(mesh: ThetaMesh) -> ThetaMesh:
    """Split every cell in two; the result contains all nodes of ``mesh``."""
    ln = mesh.log_nodes
    left, right = ln[:-1], ln[1:]
    mid = np.empty_like(left)
    g = mesh.n_geo
    mid[:g] = 0.5 * (left[:g] + right[:g])
    mid[g:] = np.log(0.5 * (np.exp(left[g:]) + np.exp(right[g:])))
    out = np.empty(2 * ln.size)
    out[0] = ln[0] - math.log(2.0)
    out[1::2] = ln
    out[2::2] = mid
    return ThetaMesh(
        log_nodes=out,
        n_geo=2 * g + 1,
        theta_min=0.5 * mesh.theta_min,
        ratio=math.sqrt(mesh.ratio),
        level=mesh.level + 1,
    )


# ---------------------------------------------------------------------------
# cell rules in relative coordinates


@dataclass(frozen=True)
class _Cells:
    """Per-cell data for a weight sin^alpha cos^beta.

    For the cell with right end theta_r the integral of sin^alpha cos^beta f
    equals theta_r^(alpha+1) * sum_j omega_j f(x_j); x_j are reference
    coordinates in [-1, 1] with N_l = (1-x)/2, N_r = (1+x)/2.
    """

    omega: np.ndarray  # (ncells, npts)
    x: np.ndarray  # (ncells, npts)
    log_right: np.ndarray  # (ncells,)
    width: np.ndarray  # (ncells,) cell width in q = theta / theta_r


@lru_cache(maxsize=32)
def _cells_cached(key, alpha: float, beta: float, n_points: int) -> _Cells:
    log_nodes = np.frombuffer(key, dtype=float)
    return _build_cells(log_nodes, alpha, beta, n_points)


def _cells(mesh: ThetaMesh, alpha: float, beta: float, n_points: int = DEFAULT_POINTS) -> _Cells:
    return _cells_cached(mesh.log_nodes.tobytes(), float(alpha), float(beta), int(n_points))


def _build_cells(log_nodes: np.ndarray, alpha: float, beta: float, n_points: int) -> _Cells:
    if not (alpha > -1 and beta > -1):
        raise ParameterError(f"non-integrable weight exponents alpha={alpha}, beta={beta}")
    lr = log_nodes
    ll = np.concatenate(([-np.inf], log_nodes[:-1]))
    width = -np.expm1(ll - lr)  # 1 - q_l
    width[0] = 1.0
    theta_r = np.exp(lr)

    x, w = _legendre(n_points)
    X = np.broadcast_to(x, (lr.size, n_points)).copy()
    one_minus_q = width[:, None] * (1.0 - X) * 0.5
    q = 1.0 - one_minus_q
    theta = theta_r[:, None] * q
    u = (HALF_PI - theta_r)[:, None] + theta_r[:, None] * one_minus_q
    sinc = np.sinc(theta / math.pi)
    omega = 0.5 * width[:, None] * w * q**alpha * sinc**alpha * np.sin(u) ** beta

    # first cell [0, theta_1]: q^alpha absorbed into Gauss-Jacobi
    xj, wj = _jacobi(n_points, 0.0, float(alpha))
    X[0] = xj
    q0 = 0.5 * (1.0 + xj)
    th0 = theta_r[0] * q0
    omega[0] = wj * 2.0 ** (-alpha - 1.0) * np.sinc(th0 / math.pi) ** alpha * np.cos(th0) ** beta

    # last cell [theta_{N-1}, pi/2]: (pi/2 - theta)^beta absorbed into Gauss-Jacobi
    xj, wj = _jacobi(n_points, float(beta), 0.0)
    X[-1] = xj
    wl = width[-1]
    uj = HALF_PI * wl * 0.5 * (1.0 - xj)
    qj = 1.0 - wl * 0.5 * (1.0 - xj)
    omega[-1] = (
        wj
        * 0.5
        * wl
        * (HALF_PI * wl * 0.5) ** beta
        * np.sinc(uj / math.pi) ** beta
        * qj**alpha
        * np.sinc(HALF_PI * qj / math.pi) ** alpha
    )
    return _Cells(omega=omega, x=X, log_right=lr.copy(), width=width)


# ---------------------------------------------------------------------------
# discrete functional


@dataclass(frozen=True)
class QuotientBreakdown:
    numerator: float
    denominator: float

    @property
    def ratio(self) -> float:
        return self.numerator / self.denominator


@dataclass
class DiscreteProfile:
    """Nodal values of a piecewise-linear profile, stored in rescaled form.

    ``scaled[i] = phi(theta_i) * theta_i^s`` (node 0 uses theta_1 in place of
    theta_0 = 0).  ``values`` returns phi itself, which may overflow on very
    deep meshes for profiles growing faster than theta^(-s).
    """

    mesh: ThetaMesh
    scaled: np.ndarray
    exponent: float

    @property
    def values(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return self.scaled * np.exp(-self.exponent * _node_logs(self.mesh))

    @classmethod
    def from_values(cls, mesh: ThetaMesh, values, exponent: float) -> "DiscreteProfile":
        values = np.asarray(values, dtype=float)
        if values.shape != (mesh.n_cells + 1,):
            raise ValueError(f"expected {mesh.n_cells + 1} nodal values, got {values.shape}")
        return cls(mesh, values * np.exp(exponent * _node_logs(mesh)), exponent)

    @classmethod
    def constant(cls, mesh: ThetaMesh, exponent: float, value: float = 1.0) -> "DiscreteProfile":
        return cls.from_values(mesh, np.full(mesh.n_cells + 1, value), exponent)

    @classmethod
    def power(cls, mesh: ThetaMesh, exponent: float, lam: float) -> "DiscreteProfile":
        """Interpolant of sin(theta)^(-lam)."""
        ln = _node_logs(mesh)
        sin_log = ln + np.log(np.sinc(np.exp(ln) / math.pi))
        c = np.exp(exponent * ln - lam * sin_log)
        if lam < 0:
            c[0] = 0.0
        # lam > 0: the value at theta = 0 is infinite; the interpolant uses the value at theta_1
        return cls(mesh, c, exponent)


def _node_logs(mesh: ThetaMesh) -> np.ndarray:
    ln = mesh.log_nodes
    return np.concatenate(([ln[0]], ln))


class ReducedProblem:
    """The reduced quotient for fixed parameters on a fixed mesh.

    Works in the rescaled unknowns ``c`` (see module docstring).  Use
    :func:`eval_quotient` / :func:`eval_gradient` for the nodal-value API.
    """

    def __init__(self, params: ProblemParams, mesh: ThetaMesh, n_points: int = DEFAULT_POINTS):
        require_valid(params)
        if classify_regime(params) is Regime.DEGENERATE:
            raise ParameterError("reduced quotient needs gamma >= b")
        dc = derived(params)
        self.params = params
        self.mesh = mesh
        self.p = params.p
        self.hb2 = dc.h_b**2
        self.s = dc.lambda_0
        beta = params.d - params.k - 1
        alpha_num = params.k + params.a - 1
        alpha_den = params.k + params.a - 1 - params.p + params.gamma - params.b
        self.num = _cells(mesh, alpha_num, beta, n_points)
        self.den = _cells(mesh, alpha_den, beta, n_points)
        lr = self.num.log_right
        p = self.p
        self.fac_num = np.exp((alpha_num + 1 - p - p * self.s) * lr)
        self.fac_den = np.exp((alpha_den + 1 - p * self.s) * lr)
        # theta_r^2, multiplies H_b^2 in the bracket
        self.theta_r2 = np.exp(2.0 * lr)
        ln = _node_logs(mesh)
        # c -> c_hat on the left end of each cell
        self.left_scale = np.exp(-self.s * (ln[:-1] - lr))
        self.inv_width = 1.0 / self.num.width
        self.n = mesh.n_cells + 1

    # -- pieces -----------------------------------------------------------
    def _local(self, c: np.ndarray, cells: _Cells):
        cl = c[:-1] * self.left_scale
        cr = c[1:]
        nl = 0.5 * (1.0 - cells.x)
        nr = 0.5 * (1.0 + cells.x)
        val = cl[:, None] * nl + cr[:, None] * nr
        return cl, cr, nl, nr, val

    def numerator(self, c: np.ndarray) -> float:
        cl, cr, nl, nr, val = self._local(c, self.num)
        slope = ((cr - cl) * self.inv_width)[:, None]
        br = slope**2 + (self.hb2 * self.theta_r2)[:, None] * val**2
        return float(np.sum(self.fac_num * np.sum(self.num.omega * br ** (0.5 * self.p), axis=1)))

    def denominator(self, c: np.ndarray) -> float:
        *_, val = self._local(c, self.den)
        return float(np.sum(self.fac_den * np.sum(self.den.omega * np.abs(val) ** self.p, axis=1)))

    def breakdown(self, c: np.ndarray) -> QuotientBreakdown:
        return QuotientBreakdown(self.numerator(c), self.denominator(c))

    def ratio(self, c: np.ndarray) -> float:
        return self.numerator(c) / self.denominator(c)

    def _assemble_vec(self, gl: np.ndarray, gr: np.ndarray) -> np.ndarray:
        out = np.zeros(self.n)
        out[:-1] += gl * self.left_scale
        out[1:] += gr
        return out

    def _assemble_tri(self, hll, hlr, hrr):
        """Symmetric tridiagonal (diag, off) from per-cell 2x2 blocks in c_hat."""
        ls = self.left_scale
        diag = np.zeros(self.n)
        diag[:-1] += hll * ls * ls
        diag[1:] += hrr
        off = hlr * ls
        return diag, off

    def numerator_derivs(self, c: np.ndarray, hessian: bool = False):
        cl, cr, nl, nr, val = self._local(c, self.num)
        iw = self.inv_width[:, None]
        slope = (cr - cl)[:, None] * iw
        m = (self.hb2 * self.theta_r2)[:, None]
        br = slope**2 + m * val**2
        p = self.p
        w = self.num.omega * self.fac_num[:, None]
        zero = (br <= 0.0) if p < 2 else np.zeros(br.shape, dtype=bool)
        if np.any(zero):
            warnings.warn(
                "degenerate bracket in numerator; using subgradient 0 there", NonsmoothPointWarning, stacklevel=3
            )
        with np.errstate(divide="ignore", invalid="ignore"):
            e1 = np.where(zero, 0.0, br ** (0.5 * p - 1.0))
        # d br / d cl, d br / d cr (halved)
        dl = -slope * iw + m * val * nl
        dr = slope * iw + m * val * nr
        gl = np.sum(w * p * e1 * dl, axis=1)
        gr = np.sum(w * p * e1 * dr, axis=1)
        value = float(np.sum(w * br ** (0.5 * p)))
        grad = self._assemble_vec(gl, gr)
        if not hessian:
            return value, grad
        iw2 = iw * iw
        a1 = w * p * e1
        if p == 2.0:
            a2 = np.zeros_like(a1)
        else:
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                a2 = np.where(zero, 0.0, a1 * (p - 2.0) / br)
            a2[~np.isfinite(a2)] = 0.0
        hll = np.sum(a1 * (iw2 + m * nl * nl) + a2 * dl * dl, axis=1)
        hlr = np.sum(a1 * (-iw2 + m * nl * nr) + a2 * dl * dr, axis=1)
        hrr = np.sum(a1 * (iw2 + m * nr * nr) + a2 * dr * dr, axis=1)
        return value, grad, self._assemble_tri(hll, hlr, hrr)

    def denominator_derivs(self, c: np.ndarray, hessian: bool = False):
        cl, cr, nl, nr, val = self._local(c, self.den)
        p = self.p
        w = self.den.omega * self.fac_den[:, None]
        av = np.abs(val)
        with np.errstate(divide="ignore", invalid="ignore"):
            e1 = np.where(av > 0, av ** (p - 2.0), 0.0)
        gl = np.sum(w * p * e1 * val * nl, axis=1)
        gr = np.sum(w * p * e1 * val * nr, axis=1)
        value = float(np.sum(w * av**p))
        grad = self._assemble_vec(gl, gr)
        if not hessian:
            return value, grad
        a = w * p * (p - 1.0) * e1
        hll = np.sum(a * nl * nl, axis=1)
        hlr = np.sum(a * nl * nr, axis=1)
        hrr = np.sum(a * nr * nr, axis=1)
        return value, grad, self._assemble_tri(hll, hlr, hrr)

    def ratio_gradient(self, c: np.ndarray):
        nv, ng = self.numerator_derivs(c)
        dv, dg = self.denominator_derivs(c)
        r = nv / dv
        return r, (ng - r * dg) / dv

    def quadratic_forms(self):
        """Stiffness-like and mass-like tridiagonal matrices (p = 2 forms) in c."""
        cells = self.num
        x = cells.x
        nl, nr = 0.5 * (1.0 - x), 0.5 * (1.0 + x)
        iw2 = (self.inv_width**2)[:, None]
        m = (self.hb2 * self.theta_r2)[:, None]
        w = cells.omega * self.fac_num[:, None]
        a = self._assemble_tri(
            np.sum(w * (iw2 + m * nl * nl), axis=1),
            np.sum(w * (-iw2 + m * nl * nr), axis=1),
            np.sum(w * (iw2 + m * nr * nr), axis=1),
        )
        cells = self.den
        x = cells.x
        nl, nr = 0.5 * (1.0 - x), 0.5 * (1.0 + x)
        w = cells.omega * self.fac_den[:, None]
        b = self._assemble_tri(
            np.sum(w * nl * nl, axis=1), np.sum(w * nl * nr, axis=1), np.sum(w * nr * nr, axis=1)
        )
        return a, b


def eval_quotient(params: ProblemParams, profile: DiscreteProfile) -> QuotientBreakdown:
    """Numerator, denominator and ratio of the reduced quotient for ``profile``."""
    prob = ReducedProblem(params, profile.mesh)
    c = _rescale(profile, prob.s)
    if not np.any(c):
        raise ValueError("zero profile")
    return prob.breakdown(c)


def eval_gradient(params: ProblemParams, profile: DiscreteProfile) -> np.ndarray:
    """Gradient of the ratio with respect to the nodal values phi(theta_i)."""
    prob = ReducedProblem(params, profile.mesh)
    c = _rescale(profile, prob.s)
    if not np.any(c):
        raise ValueError("zero profile")
    _, g = prob.ratio_gradient(c)
    # c_i = phi_i theta_i^s
    return g * np.exp(prob.s * _node_logs(profile.mesh))


def _rescale(profile: DiscreteProfile, s: float) -> np.ndarray:
    if profile.exponent == s:
        return np.asarray(profile.scaled, dtype=float)
    return profile.scaled * np.exp((s - profile.exponent) * _node_logs(profile.mesh))


# ---------------------------------------------------------------------------
# tridiagonal helpers


def _tri_matvec(diag, off, x):
    y = diag * x
    y[:-1] += off * x[1:]
    y[1:] += off * x[:-1]
    return y


def _tri_banded(diag, off):
    ab = np.zeros((3, diag.size))
    ab[0, 1:] = off
    ab[1] = diag
    ab[2, :-1] = off
    return ab


def _upper_banded(diag, off):
    ab = np.zeros((2, diag.size))
    ab[0, 1:] = off
    ab[1] = diag
    return ab


def _is_positive_definite(diag, off):
    try:
        return cholesky_banded(_upper_banded(diag, off), lower=False, check_finite=False)
    except LinAlgError:
        return None


# ---------------------------------------------------------------------------
# p = 2: generalized tridiagonal eigenproblem


@dataclass
class MinimizeResult:
    value: float
    profile: DiscreteProfile
    converged: bool
    iterations: int
    history: list = field(default_factory=list)


def minimize_p2(params: ProblemParams, mesh: ThetaMesh, rtol: float = 1e-13, max_iter: int = 200) -> MinimizeResult:
    """Smallest eigenvalue of A c = lambda B c and its nonnegative eigenvector.

    The ground-state level is located by bisection on the shift, using that
    A - sigma B is positive definite exactly when sigma lies below it; the
    eigenvector then comes from inverse iteration at the lower bracket end.
    """
    if abs(params.p - 2.0) > 1e-12:
        raise ParameterError("minimize_p2 needs p = 2")
    prob = ReducedProblem(params, mesh)
    (ad, ao), (bd, bo) = prob.quadratic_forms()
    # symmetric diagonal equilibration
    sc = 1.0 / np.sqrt(ad)
    ad, ao = ad * sc * sc, ao * sc[:-1] * sc[1:]
    bd, bo = bd * sc * sc, bo * sc[:-1] * sc[1:]
    # B may be only semidefinite in floating point: with gamma > b its weight
    # underflows deep in the mesh.  A is definite, so the bisection still works.
    x = np.ones(prob.n)
    mass = float(x @ _tri_matvec(bd, bo, x))
    if not mass > 0:
        raise ConvergenceError("mass matrix vanishes")
    hi = float(x @ _tri_matvec(ad, ao, x) / mass)
    lo = 0.0
    factor = None
    it = 0
    while hi - lo > rtol * hi and it < max_iter:
        mid = 0.5 * (lo + hi)
        f = _is_positive_definite(ad - mid * bd, ao - mid * bo)
        if f is None:
            hi = mid
        else:
            lo, factor = mid, f
        it += 1
    if factor is None:
        factor = _is_positive_definite(ad - lo * bd, ao - lo * bo)
    # inverse iteration at the (positive definite) lower shift
    x = x / math.sqrt(x @ _tri_matvec(bd, bo, x))
    value = hi
    converged = False
    for k in range(50):
        y = cho_solve_banded((factor, False), _tri_matvec(bd, bo, x), check_finite=False)
        y /= math.sqrt(y @ _tri_matvec(bd, bo, y))
        value = float(y @ _tri_matvec(ad, ao, y))
        res = np.linalg.norm(_tri_matvec(ad, ao, y) - value * _tri_matvec(bd, bo, y))
        x = y
        if k >= 1 and res <= 1e-10 * value:
            converged = True
            break
    c = x * sc
    c = _orient(c)
    c /= prob.denominator(c) ** 0.5
    value = prob.ratio(c)
    return MinimizeResult(value, DiscreteProfile(mesh, c, prob.s), converged, it + k + 1)


def _orient(c: np.ndarray) -> np.ndarray:
    c = c if np.sum(c) >= 0 else -c
    neg = c < 0
    if np.any(neg):
        small = np.abs(c[neg]) < 1e-14 * np.max(np.abs(c))
        c = c.copy()
        c[np.flatnonzero(neg)[small]] = 0.0
    return c


# ---------------------------------------------------------------------------
# general p: constrained descent


def prolong(profile: DiscreteProfile, fine: ThetaMesh) -> DiscreteProfile:
    """Represent a piecewise-linear profile on a mesh containing its nodes."""
    coarse = profile.mesh
    s = profile.exponent
    cl_log = _node_logs(coarse)
    fl_log = _node_logs(fine)
    c = np.asarray(profile.scaled, dtype=float)
    # coarse cell index for every fine node (node 0 and the first cell handled separately)
    idx = np.searchsorted(coarse.log_nodes, fine.log_nodes, side="right") - 1  # -1: inside first cell
    out = np.empty(fine.n_cells + 1)
    # fine nodes coinciding with or between coarse interior nodes
    inner = idx >= 0
    j = np.clip(idx, 0, coarse.n_cells - 1)
    lo = coarse.log_nodes[j]
    hi = coarse.log_nodes[np.minimum(j + 1, coarse.n_cells - 1)]
    lf = fine.log_nodes
    with np.errstate(invalid="ignore", divide="ignore"):
        wr = np.where(hi > lo, np.expm1(lf - lo) / np.expm1(hi - lo), 0.0)
    wl = 1.0 - wr
    # phi at fine node, scaled by theta_f^s
    val = wl * c[j + 1] * np.exp(s * (lf - lo)) + wr * c[np.minimum(j + 2, c.size - 1)] * np.exp(s * (lf - hi))
    # nodes inside the first coarse cell [0, theta_1]: linear between node 0 and node 1
    first = ~inner
    if np.any(first):
        l1 = coarse.log_nodes[0]
        q = np.exp(lf[first] - l1)
        phi0 = c[0]  # scaled with theta_1
        out_first = ((1.0 - q) * phi0 + q * c[1]) * np.exp(s * (lf[first] - l1))
        val = np.where(first, 0.0, val)
        val[first] = out_first
    out[1:] = val
    # node 0: same phi(0), new scaling node theta_1(fine)
    out[0] = c[0] * np.exp(s * (fl_log[0] - cl_log[0]))
    return DiscreteProfile(fine, out, s)


def minimize_general(
    params: ProblemParams,
    mesh: ThetaMesh,
    tol: float = 1e-10,
    max_iter: int = 50_000,
    initial: DiscreteProfile | None = None,
    random_start: bool = False,
    seed: int = 20240601,
) -> MinimizeResult:
    """Minimize the reduced quotient over piecewise-linear profiles, any p > 1.

    Each iteration normalizes the denominator to 1 and moves along a descent
    direction with Armijo backtracking (factor 1/2).  The direction is the
    Newton step of the constrained problem when that is a descent direction,
    and otherwise the gradient preconditioned by the numerator Hessian, with
    the initial step taken from the local curvature along it.  Iteration
    stops once the relative change of the ratio stays below ``tol`` for five
    consecutive iterations.
    """
    prob = ReducedProblem(params, mesh)
    p = prob.p
    if initial is not None:
        c = _rescale(initial, prob.s).copy()
    elif random_start:
        rng = np.random.default_rng(seed)
        c = rng.uniform(0.5, 1.5, prob.n)
    else:
        # constant in the rescaled unknowns: a constant phi is numerically zero
        # deep in the mesh and the descent would stall on an excited state
        c = np.ones(prob.n)
    c /= prob.denominator(c) ** (1.0 / p)
    ratio = prob.numerator(c)
    history = [ratio]
    quiet = 0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        nv, ng, (hd, ho) = prob.numerator_derivs(c, hessian=True)
        dv, dg, (kd, ko) = prob.denominator_derivs(c, hessian=True)
        ratio = nv / dv
        grad = (ng - ratio * dg) / dv
        slope, d, kind = _newton_direction(hd, ho, kd, ko, ng, dg, ratio, grad)
        if d is None:
            d, slope = _precond_direction(hd, ho, kd, ko, ratio, grad)
            kind = "precond"
            if not slope < 0:
                break
        if kind == "newton":
            step = 1.0
        else:
            curv = float(d @ (_tri_matvec(hd, ho, d) - ratio * _tri_matvec(kd, ko, d))) / dv
            step = -slope / curv if curv > 0 else 1.0
        step = min(step, _step_cap(c, d))
        new_ratio, step = _armijo(prob, c, d, ratio, slope, step)
        if new_ratio is None:
            if kind == "newton":
                # retry along the preconditioned gradient
                d, slope = _precond_direction(hd, ho, kd, ko, ratio, grad)
                curv = float(d @ (_tri_matvec(hd, ho, d) - ratio * _tri_matvec(kd, ko, d))) / dv
                step = min(-slope / curv if curv > 0 else 1.0, _step_cap(c, d))
                new_ratio, step = _armijo(prob, c, d, ratio, slope, step) if slope < 0 else (None, 0.0)
            if new_ratio is None:
                # no decrease possible at working precision
                quiet += 1
                history.append(ratio)
                if quiet >= 5:
                    converged = True
                    break
                continue
        c = c + step * d
        c /= prob.denominator(c) ** (1.0 / p)
        new_ratio = prob.numerator(c)
        change = abs(ratio - new_ratio) / abs(new_ratio)
        history.append(new_ratio)
        ratio = new_ratio
        quiet = quiet + 1 if change < tol else 0
        if quiet >= 5:
            converged = True
            break
    if not converged:
        log.warning("minimize_general: no convergence after %d iterations (ratio %.12g)", it, ratio)
    c = _orient(c)
    c /= prob.denominator(c) ** (1.0 / p)
    return MinimizeResult(prob.numerator(c), DiscreteProfile(mesh, c, prob.s), converged, it, history)


def _tri_solve(diag, off, rhs):
    return solve_banded((1, 1), _tri_banded(diag, off), rhs, check_finite=False)


def _step_cap(c, d):
    dm = float(np.max(np.abs(d)))
    return float(np.max(np.abs(c))) / dm if dm > 0 else 1.0


def _precond_direction(hd, ho, kd, ko, ratio, grad):
    # numerator Hessian plus ratio times denominator Hessian: positive definite
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            pd = hd + ratio * kd
            po = ho + ratio * ko
            # nodes with negligible curvature: enforce diagonal dominance
            ab = np.abs(po)
            dom = np.zeros_like(pd)
            dom[:-1] += ab
            dom[1:] += ab
            pd = np.maximum(pd, np.maximum(dom, 1e-8 * np.median(pd)))
            d = -_tri_solve(pd, po, grad)
        if not np.all(np.isfinite(d)):
            raise ValueError
    except (LinAlgError, ValueError):
        d = -grad
    return d, float(grad @ d)


def _newton_direction(hd, ho, kd, ko, ng, dg, ratio, grad):
    td, to = hd - ratio * kd, ho - ratio * ko
    # Newton is only trusted near the ground state: at most one negative
    # eigenvalue of H - R K, otherwise it can be attracted to a saddle
    try:
        second = eigvalsh_tridiagonal(td, to, select="i", select_range=(1, 1), check_finite=False)[0]
    except (LinAlgError, ValueError):
        return None, None, None
    if not second > 0:
        return None, None, None
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            y1 = _tri_solve(td, to, -(ng - ratio * dg))
            y2 = _tri_solve(td, to, dg)
    except (LinAlgError, ValueError):
        return None, None, None
    den = float(dg @ y2)
    if not np.isfinite(den) or den == 0.0:
        return None, None, None
    d = y1 - (float(dg @ y1) / den) * y2
    if not np.all(np.isfinite(d)):
        return None, None, None
    slope = float(grad @ d)
    if not slope < 0:
        return None, None, None
    return slope, d, "newton"


def _armijo(prob: ReducedProblem, c, d, ratio, slope, step, max_halvings: int = 60):
    for _ in range(max_halvings):
        trial = c + step * d
        with np.errstate(over="ignore", invalid="ignore"):
            den = prob.denominator(trial)
            r = prob.numerator(trial) / den if den > 0 else math.inf
        if np.isfinite(r) and r <= ratio + 1e-4 * step * slope and r < ratio:
            return r, step
        step *= 0.5
    return None, 0.0


def minimize(params: ProblemParams, mesh: ThetaMesh, **opts) -> MinimizeResult:
    """Dispatch to the eigen-solver for p = 2 and the descent solver otherwise."""
    if abs(params.p - 2.0) <= 1e-12 and not opts.get("force_general", False):
        return minimize_p2(params, mesh)
    opts.pop("force_general", None)
    return minimize_general(params, mesh, **opts)


# ---------------------------------------------------------------------------
# refinement


def _is_p2(params: ProblemParams) -> bool:
    return abs(params.p - 2.0) <= 1e-12


def default_cells(params: ProblemParams) -> int:
    """Cells of the coarsest mesh; p = 2 solves are cheap enough to go deeper."""
    return P2_CELLS if _is_p2(params) else DEFAULT_CELLS


def default_log_theta_min(params: ProblemParams) -> float:
    """Depth of the coarsest mesh.

    For Lambda_0 > 0 minimizers blow up like theta^-lambda at the axis and
    plateau minimizing sequences concentrate there, so the mesh goes deep.
    For Lambda_0 < 0 minimizers are bounded at the axis, while rounding in
    nodal differences is amplified by theta_min^(p Lambda_0) in the energy;
    the depth is capped so that this factor stays below e^(14 p).
    """
    deep = P2_LOG_THETA_MIN if _is_p2(params) else math.log(DEFAULT_THETA_MIN)
    return max(deep, _depth_floor(params))


def _depth_floor(params: ProblemParams) -> float:
    lam0 = derived(params).lambda_0
    return -14.0 / abs(lam0) if lam0 < 0 else -math.inf


def truncation_excess(params: ProblemParams, depth: float) -> float:
    """Bias of a plateau value computed on a mesh of depth log(1/theta_min).

    On the plateau, minimizing sequences look like theta^-Lambda_0 times a
    slowly varying envelope in log(theta); confining the envelope to an
    interval of length ``depth`` raises the quotient by about
    2(p-1)/p * Lambda_0^(p-2) * (pi/depth)^2.  The bias is upward and only
    present in the bottom case with Lambda_0 > 0.
    """
    if classify_regime(params) is not Regime.BOTTOM:
        return 0.0
    lam0 = derived(params).lambda_0
    if lam0 <= 0:
        return 0.0
    p = params.p
    return 2.0 * (p - 1.0) / p * lam0 ** (p - 2.0) * (math.pi / depth) ** 2


def richardson(values) -> np.ndarray:
    """Second-order Richardson extrapolation of successive level values."""
    v = np.asarray(values, dtype=float)
    return v[1:] + (v[1:] - v[:-1]) / 3.0


def refine_and_extrapolate(
    params: ProblemParams,
    levels: int = 4,
    cells: int | None = None,
    log_theta_min: float | None = None,
    tol: float = 1e-10,
    max_iter: int = 50_000,
):
    """Minimize on ``levels`` nested meshes and extrapolate.

    Each level halves theta_min and doubles the number of cells, and starts
    the minimizer from the previous level's profile.  The error indicator is
    the difference of the last two extrapolated values.  For Lambda_0 < 0 a
    ``log_theta_min`` below the accuracy limit of
    :func:`default_log_theta_min` is raised to that limit.
    """
    from .estimate import ConstantEstimate, Flag, Provenance

    if int(levels) != levels or levels < 2:
        raise ValueError(f"need at least 2 refinement levels, got {levels}")
    if log_theta_min is None:
        log_theta_min = default_log_theta_min(params)
    elif log_theta_min < _depth_floor(params):
        log.warning("log_theta_min=%g loses accuracy for Lambda_0 < 0; using %g", log_theta_min, _depth_floor(params))
        log_theta_min = _depth_floor(params)
    if cells is None:
        cells = default_cells(params)
    mesh = build_mesh(n=cells, log_theta_min=log_theta_min)
    values: list[float] = []
    iters: list[int] = []
    flags: set = set()
    profile = None
    p2 = _is_p2(params)
    for level in range(int(levels)):
        if level:
            mesh = refine(mesh)
        if p2:
            res = minimize_p2(params, mesh)
        else:
            start = prolong(profile, mesh) if profile is not None else None
            res = minimize_general(params, mesh, tol=tol, max_iter=max_iter, initial=start)
        if not res.converged:
            flags.add(Flag.NOT_CONVERGED)
        value = res.value
        if values and value > values[-1]:
            # nested trial spaces: any increase is solver noise
            value = values[-1]
        values.append(value)
        iters.append(res.iterations)
        profile = res.profile
    ext = richardson(values)
    if ext.size >= 2:
        disc = float(abs(ext[-1] - ext[-2]))
    else:
        disc = float(abs(values[-1] - values[-2]))
    trunc = truncation_excess(params, -mesh.log_theta_min)
    est = ConstantEstimate(
        params=params,
        value=float(ext[-1]),
        provenance=Provenance.NUMERICAL,
        levels=values,
        extrapolated=float(ext[-1]),
        error_indicator=disc + trunc,
        discretization=disc,
        truncation=trunc,
        flags=flags,
        iterations=iters,
    )
    est.profile = profile
    return est
