"""Radial shooting for the k-Hessian Dirichlet problem on a ball.

The equation S_k(D^2 u) = (lambda f(-u))^k is integrated outward in its
integral form.  With the flux variable

    m(r) = r^(N-k) (u'(r))^k,

the exact identity S_k = C(N-1,k-1) r^(1-N)/k * d/dr[ r^(N-k) (u')^k ] turns
the problem into the first-order system

    u' = (m r^(k-N))^(1/k),
    m' = (k / C(N-1,k-1)) r^(N-1) (lambda f(-u))^k,

which has no singularity to integrate through and keeps u' >= 0 by
construction, so admissibility holds wherever the right-hand side is positive.
The origin is seeded by the quadratic series u ~ -d + a r^2/2 with curvature
a = lambda f(d) / C(N,k)^(1/k).

f is extended below zero by f(max(s, 0)): past the (single) zero crossing of a
too-strongly-forced profile the forcing switches off, keeping the boundary
residual u(R) continuous and increasing in lambda.  Accepted Dirichlet
solutions never use the extension (u <= 0 up to root tolerance).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rk
from .core import EigenvalueResult, NonlinearitySpec, ProblemSpec, binom
from .errors import InvalidInputError, NumericalFailureError


@dataclass
class ShootingConfig:
    grid_points: int = 1024
    integrator_tol: float = 1e-10
    root_tol: float = 1e-10
    max_root_iter: int = 200
    scan_cells: int = 64

    def __post_init__(self):
        if self.grid_points < 64:
            raise InvalidInputError(f"grid_points must be >= 64, got {self.grid_points}")
        if not (self.integrator_tol > 0.0 and self.root_tol > 0.0):
            raise InvalidInputError("tolerances must be positive")
        if self.max_root_iter < 8 or self.scan_cells < 2:
            raise InvalidInputError("max_root_iter >= 8 and scan_cells >= 2 required")


DEFAULT_CONFIG = ShootingConfig()


@dataclass
class RadialProfile:
    """Discretized radial solution (r_i, u_i, u'_i) at one (lambda, d)."""

    r: np.ndarray
    u: np.ndarray
    uprime: np.ndarray
    lam: float
    d: float
    max_consistency_residual: float = math.nan

    @property
    def boundary_value(self) -> float:
        return float(self.u[-1])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("r,u,uprime\n")
            for r, u, up in zip(self.r, self.u, self.uprime):
                fh.write(f"{r:.17g},{u:.17g},{up:.17g}\n")


def _origin_radius(N: int, R: float) -> float:
    # keep r0^N representable; series truncation error is O(r0^4) regardless
    return R * max(1e-8, 10.0 ** (-280.0 / N))


def _origin_curvature(spec: ProblemSpec, lam: float, d: float) -> float:
    return lam * spec.f(d) / binom(spec.N, spec.k) ** (1.0 / spec.k)


def _make_rhs(spec: ProblemSpec, lam: float):
    N, k = spec.N, spec.k
    fev = spec.f
    coef = k / binom(N - 1, k - 1)
    k_inv = 1.0 / k
    r_exp = (k - N) / k
    exp = math.exp
    log = math.log

    def rhs(r, y):
        u, m = y
        s = -u
        fs = fev(s) if s > 0.0 else 0.0
        if fs < 0.0 or not math.isfinite(fs):
            raise NumericalFailureError(
                f"nonlinearity returned {fs!r} at s={s!r}; refusing a negative integrand")
        skt = (lam * fs) ** k
        if m <= 0.0:
            up = 0.0
        else:
            up = exp(k_inv * log(m) + r_exp * log(r))
        return (up, coef * r ** (N - 1) * skt)

    return rhs


def _atol_pair(spec: ProblemSpec, lam: float, d: float, tol: float):
    m_scale = (lam * spec.f(d)) ** spec.k * spec.R**spec.N / binom(spec.N, spec.k)
    return (tol * 1e-3 * max(d, 1.0), tol * 1e-3 * max(m_scale, 1e-30))


def _check_inputs(spec: ProblemSpec, lam: float, d: float) -> None:
    if not isinstance(spec, ProblemSpec):
        raise InvalidInputError("spec must be a ProblemSpec")
    if not (d > 0.0) or not math.isfinite(d):
        raise InvalidInputError(f"amplitude d must be positive, got {d!r}")
    if lam < 0.0 or not math.isfinite(lam):
        raise InvalidInputError(f"lambda must be nonnegative, got {lam!r}")


def shoot_boundary_value(spec: ProblemSpec, lam: float, d: float,
                         cfg: ShootingConfig = DEFAULT_CONFIG) -> float:
    """u(R) of the initial value problem with u(0) = -d; no profile is stored."""
    _check_inputs(spec, lam, d)
    if lam == 0.0:
        return -d
    r0 = _origin_radius(spec.N, spec.R)
    a = _origin_curvature(spec, lam, d)
    y0 = (-d + 0.5 * a * r0 * r0, a**spec.k * r0**spec.N)
    res = rk.integrate(_make_rhs(spec, lam), r0, y0, spec.R,
                       rtol=cfg.integrator_tol,
                       atol=_atol_pair(spec, lam, d, cfg.integrator_tol))
    return res.y[0]


def integrate_profile(spec: ProblemSpec, lam: float, d: float,
                      cfg: ShootingConfig = DEFAULT_CONFIG) -> RadialProfile:
    """Full radial profile on the fixed output grid of cfg.grid_points points."""
    _check_inputs(spec, lam, d)
    N, k, R = spec.N, spec.k, spec.R
    grid = np.linspace(0.0, R, cfg.grid_points)
    r0 = _origin_radius(N, R)
    a = _origin_curvature(spec, lam, d)

    series_mask = grid <= r0
    u = np.empty_like(grid)
    uprime = np.empty_like(grid)
    u[series_mask] = -d + 0.5 * a * grid[series_mask] ** 2
    uprime[series_mask] = a * grid[series_mask]

    outer = grid[~series_mask]
    if outer.size:
        y0 = (-d + 0.5 * a * r0 * r0, a**k * r0**N)
        res = rk.integrate(_make_rhs(spec, lam), r0, y0, R,
                           rtol=cfg.integrator_tol,
                           atol=_atol_pair(spec, lam, d, cfg.integrator_tol),
                           output_ts=outer)
        states = np.asarray(res.grid_states)
        u[~series_mask] = states[:, 0]
        m = states[:, 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            up = np.where(m > 0.0,
                          np.exp(np.log(np.maximum(m, 1e-300)) / k
                                 + (k - N) / k * np.log(outer)),
                          0.0)
        uprime[~series_mask] = up

    profile = RadialProfile(r=grid, u=u, uprime=uprime, lam=lam, d=d)
    profile.max_consistency_residual = self_consistency_residual(profile, spec)
    return profile


def boundary_residual(profile: RadialProfile) -> float:
    """u(R): zero within root tolerance iff the profile solves the Dirichlet problem."""
    return profile.boundary_value


def self_consistency_residual(profile: RadialProfile, spec: ProblemSpec) -> float:
    """sup over interior grid points of |S_k(u'', u'/r) - (lambda f(-u))^k|.

    u'' comes from second-order central differences of the stored u', so this
    cross-checks the integral-form integration against the differential form.
    """
    r, u, up = profile.r, profile.u, profile.uprime
    n = len(r)
    if n < 3:
        raise InvalidInputError("profile too short for a consistency check")
    h = r[1] - r[0]
    upp = (up[2:] - up[:-2]) / (2.0 * h)
    q = up[1:-1] / r[1:-1]
    N, k = spec.N, spec.k
    sk = binom(N - 1, k) * q**k + binom(N - 1, k - 1) * q ** (k - 1) * upp
    fs = np.array([spec.f(s) if s > 0.0 else 0.0 for s in -u[1:-1]])
    target = (profile.lam * fs) ** k
    return float(np.max(np.abs(sk - target)))


def profile_admissible(profile: RadialProfile, N: int, k: int) -> bool:
    """Cone membership S_j > 0, j = 1..k, at every interior grid point."""
    r, up = profile.r[1:-1], profile.uprime[1:-1]
    n = len(profile.r)
    if n < 3:
        raise InvalidInputError("profile too short for an admissibility check")
    h = profile.r[1] - profile.r[0]
    upp = (profile.uprime[2:] - profile.uprime[:-2]) / (2.0 * h)
    q = up / r
    for j in range(1, k + 1):
        sj = binom(N - 1, j) * q**j + binom(N - 1, j - 1) * q ** (j - 1) * upp
        if not np.all(sj > 0.0):
            return False
    return True


# ---------------------------------------------------------------------------
# root finding on the boundary residual
# ---------------------------------------------------------------------------


def _bisect(fun, lo, hi, f_lo, f_hi, rel_tol, max_iter):
    """Bracketing bisection; returns (root, iterations)."""
    it = 0
    while it < max_iter:
        mid = 0.5 * (lo + hi)
        if hi - lo <= rel_tol * max(abs(mid), 1e-300):
            return mid, it
        f_mid = fun(mid)
        it += 1
        if f_mid == 0.0:
            return mid, it
        if (f_lo < 0.0) == (f_mid < 0.0):
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
    return 0.5 * (lo + hi), it


def solve_lambda(spec: ProblemSpec, d: float, bracket, cfg: ShootingConfig = DEFAULT_CONFIG,
                 scan_cells: int | None = None) -> list[float]:
    """All lambda roots of the boundary residual at fixed amplitude d.

    Log-spaced scan over the bracket followed by bisection on every sign
    change.  Empty list means no root in the bracket (non-existence evidence at
    this amplitude).  Roots are sorted ascending; more than one is unusual but
    reported rather than suppressed.
    """
    lam_lo, lam_hi = bracket
    if not (lam_lo < lam_hi):
        raise InvalidInputError(f"empty bracket {bracket!r}")
    if lam_lo < 0.0:
        raise InvalidInputError("bracket must lie in lambda >= 0")
    _check_inputs(spec, lam_lo, d)
    cells = scan_cells if scan_cells is not None else cfg.scan_cells

    lo_eff = max(lam_lo, lam_hi * 1e-15)
    nodes = np.geomspace(lo_eff, lam_hi, cells + 1)
    if lam_lo < lo_eff:
        nodes = np.concatenate([[lam_lo], nodes])

    def res(lam):
        return shoot_boundary_value(spec, lam, d, cfg)

    values = [res(lam) for lam in nodes]
    roots = []
    for i in range(len(nodes) - 1):
        f_a, f_b = values[i], values[i + 1]
        if f_a == 0.0:
            roots.append(float(nodes[i]))
        elif (f_a < 0.0) != (f_b < 0.0):
            root, _ = _bisect(res, float(nodes[i]), float(nodes[i + 1]),
                              f_a, f_b, cfg.root_tol, cfg.max_root_iter)
            roots.append(root)
    if values[-1] == 0.0:
        roots.append(float(nodes[-1]))
    return sorted(roots)


def first_eigenvalue(N: int, k: int, R: float,
                     cfg: ShootingConfig = DEFAULT_CONFIG) -> EigenvalueResult:
    """First eigenvalue: S_k(D^2 v) = lambda1^k |v|^k with v(R) = 0, v < 0 inside.

    Degree-k homogeneity makes the amplitude irrelevant; shooting runs at
    d = 1.  The bracket is expanded automatically around the 1/R^2 scale.
    """
    spec = ProblemSpec(N=N, k=k, R=float(R), f=NonlinearitySpec("linear"))
    d = 1.0

    def res(lam):
        return shoot_boundary_value(spec, lam, d, cfg)

    lo, hi = 0.5 / R**2, 8.0 / R**2
    f_lo, f_hi = res(lo), res(hi)
    it = 2
    while f_lo > 0.0:
        hi, f_hi = lo, f_lo
        lo *= 0.25
        f_lo = res(lo)
        it += 1
        if lo < 1e-12 / R**2:
            raise NumericalFailureError("eigenvalue bracket expansion failed (low side)")
    while f_hi < 0.0:
        lo, f_lo = hi, f_hi
        hi *= 4.0
        f_hi = res(hi)
        it += 1
        if hi > 1e12 / R**2:
            raise NumericalFailureError("eigenvalue bracket expansion failed (high side)")
    root, n_bis = _bisect(res, lo, hi, f_lo, f_hi, cfg.root_tol, cfg.max_root_iter)
    return EigenvalueResult(lambda1=root, residual=res(root), iterations=it + n_bis + 1)
