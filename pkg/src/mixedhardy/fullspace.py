"""Checks in the full space R^d = R^k x R^(d-k), z = (y, x).

Monte-Carlo evaluation of the quotient on translated bump functions (the
constant degenerates like h^(gamma-b) when the bump is moved a distance h
along the x-block), and finite-difference checks of two pointwise identities.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .params import ParameterError, ProblemParams, derived, require_valid

MAX_DIM = 8
CHUNK = 1 << 16
DEFAULT_SEED = 12345
DEFAULT_H_LIST = (4.0, 8.0, 16.0, 32.0)
DEFAULT_FD_STEP = 1e-4


@dataclass(frozen=True)
class BumpSpec:
    """The bump (1 - |z-c|^2/R^2)^3, clipped at 0, centred away from y = 0."""

    center: tuple[float, ...]
    radius: float
    k: int

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float)
        object.__setattr__(self, "center", tuple(float(v) for v in c))
        if not self.radius > 0:
            raise ValueError(f"bump radius must be positive, got {self.radius}")
        if not 1 <= self.k < c.size:
            raise ValueError(f"need 1 <= k < d, got k={self.k}, d={c.size}")
        if not np.linalg.norm(c[: self.k]) > self.radius:
            raise ValueError("bump support touches the subspace y = 0")

    @property
    def d(self) -> int:
        return len(self.center)

    @classmethod
    def default(cls, params: ProblemParams) -> "BumpSpec":
        c = np.zeros(params.d)
        c[0] = 1.0
        return cls(tuple(c), 0.5, params.k)

    def shifted(self, h: float) -> "BumpSpec":
        """Translate by h along the first x-direction (a unit vector in y = 0)."""
        c = np.array(self.center)
        c[self.k] += h
        return BumpSpec(tuple(c), self.radius, self.k)

    def rotated_x(self, rotation: np.ndarray) -> "BumpSpec":
        c = np.array(self.center)
        c[self.k :] = rotation @ c[self.k :]
        return BumpSpec(tuple(c), self.radius, self.k)


@dataclass(frozen=True)
class MonteCarloEstimate:
    value: float
    std_error: float
    samples: int
    seed: int
    numerator: float = math.nan
    denominator: float = math.nan


def _check_mc(params: ProblemParams) -> None:
    require_valid(params)
    if params.d > MAX_DIM:
        raise ParameterError(f"Monte-Carlo checks are limited to d <= {MAX_DIM}, got d={params.d}")


def _chunk_sums(args):
    params, center, radius, k, n, seed_seq = args
    rng = np.random.default_rng(seed_seq)
    d = len(center)
    c = np.asarray(center)
    z = c + radius * rng.uniform(-1.0, 1.0, size=(n, d))
    w = z - c
    q = 1.0 - np.einsum("ij,ij->i", w, w) / radius**2
    inside = q > 0
    q = np.where(inside, q, 0.0)
    u = q**3
    # |grad u| = 6 q^2 |z - c| / R^2
    gnorm = 6.0 * q * q * np.sqrt(np.einsum("ij,ij->i", w, w)) / radius**2
    ynorm = np.linalg.norm(z[:, :k], axis=1)
    znorm = np.linalg.norm(z, axis=1)
    p, a, b, g = params.p, params.a, params.b, params.gamma
    fn = ynorm**a * znorm ** (-b) * gnorm**p
    fd = ynorm ** (a - p - b + g) * znorm ** (-g) * u**p
    return fn.sum(), fd.sum(), (fn * fn).sum(), (fd * fd).sum(), (fn * fd).sum()


def mc_quotient(
    params: ProblemParams,
    bump: BumpSpec | None = None,
    shift_h: float = 0.0,
    samples: int = 1_000_000,
    seed: int = DEFAULT_SEED,
    workers: int = 1,
) -> MonteCarloEstimate:
    """Monte-Carlo value of the full-space quotient on the bump moved by ``shift_h``.

    Points are uniform in the bounding box of the support.  The random stream
    is split into fixed-size chunks seeded from ``seed``, so the result does
    not depend on ``workers``.  The standard error comes from linearizing the
    ratio of the two sample means.
    """
    _check_mc(params)
    if bump is None:
        bump = BumpSpec.default(params)
    if bump.d != params.d or bump.k != params.k:
        raise ValueError("bump dimensions do not match the parameters")
    if samples < 2:
        raise ValueError("need at least two samples")
    moved = bump.shifted(shift_h)
    sizes = [CHUNK] * (samples // CHUNK)
    if samples % CHUNK:
        sizes.append(samples % CHUNK)
    seqs = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = [(params, moved.center, moved.radius, moved.k, n, s) for n, s in zip(sizes, seqs)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_chunk_sums, jobs))
    else:
        parts = [_chunk_sums(j) for j in jobs]
    sn, sd, snn, sdd, snd = (math.fsum(x) for x in zip(*parts))
    n = samples
    mn, md = sn / n, sd / n
    if not md > 0:
        raise ValueError("denominator estimate vanished")
    ratio = mn / md
    # influence values (fn - ratio*fd)/md
    var = (snn - 2 * ratio * snd + ratio * ratio * sdd) / n - (mn - ratio * md) ** 2
    var *= n / (n - 1)
    std = math.sqrt(max(var, 0.0) / n) / md
    volume = (2.0 * moved.radius) ** params.d
    return MonteCarloEstimate(ratio, std, n, seed, mn * volume, md * volume)


def scaling_slope(
    params: ProblemParams,
    h_list=DEFAULT_H_LIST,
    samples: int = 250_000,
    seed: int = DEFAULT_SEED,
    bump: BumpSpec | None = None,
    workers: int = 1,
) -> tuple[float, float]:
    """Least-squares slope of log J(u_h) against log h, with its standard error.

    ``samples`` is per shift.  The same seed is used at every shift (common
    random numbers), which makes the slope far less noisy than the values.
    """
    h = np.asarray(list(h_list), dtype=float)
    if h.size < 4:
        raise ValueError("need at least four shifts")
    if np.any(h <= 0):
        raise ValueError("shifts must be positive")
    ests = [mc_quotient(params, bump, float(x), samples, seed, workers) for x in h]
    y = np.log([e.value for e in ests])
    sy = np.array([e.std_error / e.value for e in ests])
    x = np.log(h)
    xm = x - x.mean()
    slope = float(xm @ (y - y.mean()) / (xm @ xm))
    # propagate per-point errors; independent-error bound, conservative under common random numbers
    stderr = float(math.sqrt(np.sum((xm / (xm @ xm)) ** 2 * sy**2)))
    return slope, stderr


# ---------------------------------------------------------------------------
# pointwise identities


def _split(z: np.ndarray, k: int):
    y = z[..., :k]
    return np.linalg.norm(y, axis=-1), np.linalg.norm(z, axis=-1)


def p2_solution(params: ProblemParams, lam: float, z: np.ndarray) -> np.ndarray:
    """U(z) = |y|^-lam |z|^(lam - H_b)."""
    dc = derived(params)
    ry, rz = _split(np.asarray(z, dtype=float), params.k)
    return ry ** (-lam) * rz ** (lam - dc.h_b)


def p2_flux(params: ProblemParams, lam: float, z: np.ndarray) -> np.ndarray:
    """|y|^a |z|^-b grad U, coded analytically."""
    z = np.asarray(z, dtype=float)
    k = params.k
    dc = derived(params)
    ry, rz = _split(z, k)
    u = ry ** (-lam) * rz ** (lam - dc.h_b)
    yext = np.zeros_like(z)
    yext[..., :k] = z[..., :k]
    grad = u[..., None] * (-lam * yext / (ry**2)[..., None] + (lam - dc.h_b) * z / (rz**2)[..., None])
    return (ry**params.a * rz ** (-params.b))[..., None] * grad


def p2_rhs(params: ProblemParams, lam: float, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """The two terms of the predicted -div(|y|^a |z|^-b grad U)."""
    dc = derived(params)
    ry, rz = _split(np.asarray(z, dtype=float), params.k)
    u = ry ** (-lam) * rz ** (lam - dc.h_b)
    a, b = params.a, params.b
    t1 = lam * (2 * dc.lambda_0 - lam) * ry ** (a - 2) * rz ** (-b) * u
    t2 = ((dc.h_b - lam) ** 2 - b * lam) * ry**a * rz ** (-b - 2) * u
    return t1, t2


def p2_pde_residual(
    params: ProblemParams,
    lam: float,
    sample_points,
    fd_step: float = DEFAULT_FD_STEP,
) -> float:
    """Largest relative mismatch between -div(flux) by central differences and the formula.

    The step is ``fd_step`` times |z|.  Mismatches are relative to the sum
    of the magnitudes of the two predicted terms.
    """
    require_valid(params)
    if abs(params.p - 2.0) > 1e-12:
        raise ParameterError("the identity holds for p = 2")
    pts = np.atleast_2d(np.asarray(sample_points, dtype=float))
    if pts.shape[1] != params.d:
        raise ValueError("sample points have the wrong dimension")
    ry, rz = _split(pts, params.k)
    steps = fd_step * rz
    if np.any(ry <= 10 * steps):
        raise ValueError("sample point too close to y = 0 for the finite-difference step")
    div = np.zeros(pts.shape[0])
    for i in range(params.d):
        e = np.zeros(params.d)
        e[i] = 1.0
        fp = p2_flux(params, lam, pts + steps[:, None] * e)[:, i]
        fm = p2_flux(params, lam, pts - steps[:, None] * e)[:, i]
        div += (fp - fm) / (2 * steps)
    t1, t2 = p2_rhs(params, lam, pts)
    res = np.abs(-div - (t1 + t2)) / (np.abs(t1) + np.abs(t2))
    return float(np.max(res))


def useful_identity_residual(sigma_samples, k: int, fd_step: float = 1e-6) -> float:
    """Check |grad_sigma |P sigma||^2 = 1 - |P sigma|^2 on the unit sphere.

    P keeps the first ``k`` coordinates.  The ambient gradient of |P z| is
    taken by central differences and projected onto the tangent space.  Both
    sides lie in [0, 1]; the residual is the largest absolute mismatch.
    """
    s = np.atleast_2d(np.asarray(sigma_samples, dtype=float))
    n, d = s.shape
    if not 1 <= k < d:
        raise ValueError(f"need 1 <= k < d, got k={k}, d={d}")
    s = s / np.linalg.norm(s, axis=1, keepdims=True)
    py = np.linalg.norm(s[:, :k], axis=1)
    if np.any(py <= 10 * fd_step):
        raise ValueError("sample on the subspace y = 0")
    grad = np.empty_like(s)
    for i in range(d):
        e = np.zeros(d)
        e[i] = fd_step
        grad[:, i] = (np.linalg.norm((s + e)[:, :k], axis=1) - np.linalg.norm((s - e)[:, :k], axis=1)) / (2 * fd_step)
    tang = grad - np.sum(grad * s, axis=1, keepdims=True) * s
    lhs = np.sum(tang * tang, axis=1)
    rhs = 1.0 - py**2
    return float(np.max(np.abs(lhs - rhs)))


def random_sphere_points(d: int, n: int, seed: int = DEFAULT_SEED) -> np.ndarray:
    rng = np.random.default_rng(seed)
    s = rng.standard_normal((n, d))
    return s / np.linalg.norm(s, axis=1, keepdims=True)


def random_points(d: int, k: int, n: int, seed: int = DEFAULT_SEED, min_y: float = 0.2) -> np.ndarray:
    """Points with |y| in [min_y, 2] and |x| up to 2, for the PDE check."""
    rng = np.random.default_rng(seed)
    y = rng.standard_normal((n, k))
    y *= (rng.uniform(min_y, 2.0, n) / np.linalg.norm(y, axis=1))[:, None]
    x = rng.uniform(-2.0, 2.0, (n, d - k)) / math.sqrt(d - k)
    return np.concatenate((y, x), axis=1)
