"""Coupled radial k-Hessian systems: two-parameter shooting and eigen-structure.

Two coupled components on the same ball,

    S_k(D^2 u) = (lambda g(-u, -v))^k,
    S_k(D^2 v) = (lambda h(-u, -v))^k,

integrated simultaneously in integral form (see shooting.py for the scalar
construction).  At fixed u-amplitude d_u the Dirichlet conditions (u(R), v(R))
= (0, 0) are solved by a damped Newton iteration over (lambda, d_v) in log
coordinates, with a finite-difference Jacobian.

The power-pair eigenproblem S_k(D^2 u) = lambda (-v)^alpha, S_k(D^2 v) =
mu (-u)^beta (alpha beta = k^2) uses the same machinery with the direct
right-hand sides; the product lambda mu^(alpha/k) is the scaling invariant
whose constancy across mu is the checkable claim.

Two-argument nonlinearities are weight forms phi(x) * w(s + t), with phi = t
for the u-equation ("_t" kinds) and phi = s for the v-equation ("_s" kinds):

    linear_t/_s        w = 1                      (1, 1)
    saturating_t/_s    w = 1/(1+x)                (1, 0)
    superlinear_t/_s   w = 1+x                    (1, inf)
    rational_t/_s      w = (1+b x)/(1+x)          (1, b)
    powermix_t/_s      w = x^(-1/2) + x           (inf, inf)
    logbump_t/_s       w = log(1+x^2)/x           (0, 0; coercive in s+t)

where the class pair is (lim_{x->0} w, lim_{x->inf} w) relative to |t| (resp.
|s|).  All of them are non-decreasing in their coupling variable on s, t >= 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import rk
from .branch import (
    Branch,
    BranchPoint,
    VerificationReport,
    asymptote_estimates,
    detect_folds,
    solution_amplitudes,
)
from .core import LimitClass, binom
from .errors import InvalidInputError, NumericalFailureError
from .shooting import (
    DEFAULT_CONFIG,
    RadialProfile,
    ShootingConfig,
    first_eigenvalue,
    profile_admissible,
)

NEWTON_MAX_ITER = 40
NEWTON_FD_STEP = 1e-6
NEWTON_MAX_HALVINGS = 8


# ---------------------------------------------------------------------------
# two-argument nonlinearities
# ---------------------------------------------------------------------------

def _weight(kind_base, params):
    if kind_base == "linear":
        return lambda x: 1.0, LimitClass.finite(1.0), LimitClass.finite(1.0)
    if kind_base == "saturating":
        return (lambda x: 1.0 / (1.0 + x),
                LimitClass.finite(1.0), LimitClass.zero())
    if kind_base == "superlinear":
        return (lambda x: 1.0 + x,
                LimitClass.finite(1.0), LimitClass.infinite())
    if kind_base == "rational":
        b = float(params.get("b", 0.0))
        if b <= 0.0:
            raise InvalidInputError("rational kind needs param b > 0")
        return (lambda x: (1.0 + b * x) / (1.0 + x),
                LimitClass.finite(1.0), LimitClass.finite(b))
    if kind_base == "powermix":
        return (lambda x: x**-0.5 + x if x > 0.0 else math.inf,
                LimitClass.infinite(), LimitClass.infinite())
    if kind_base == "logbump":
        return (lambda x: math.log1p(x * x) / x if x > 0.0 else 0.0,
                LimitClass.zero(), LimitClass.zero())
    raise InvalidInputError(f"unknown two-argument kind base {kind_base!r}")


@dataclass
class NonlinearitySpec2:
    """g(s, t) (kinds ``*_t``, coupling through t) or h(s, t) (kinds ``*_s``).

    Zeros exactly where the coupling variable vanishes; limit classes are
    relative to |t| (for g) or |s| (for h) as |s + t| tends to 0 / infinity.
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        base, _, suffix = self.kind.rpartition("_")
        if suffix not in ("t", "s") or not base:
            raise InvalidInputError(
                f"two-argument kind must end in _t or _s, got {self.kind!r}")
        self.couples_in_t = suffix == "t"
        self._w, self.lim0, self.liminf = _weight(base, self.params)

    def __call__(self, s: float, t: float) -> float:
        if s < 0.0 or t < 0.0:
            raise InvalidInputError(f"evaluated at negative arguments ({s!r}, {t!r})")
        phi = t if self.couples_in_t else s
        if phi == 0.0:
            return 0.0
        return phi * self._w(s + t)

    def to_json(self) -> dict:
        return {"kind": self.kind, "params": dict(self.params)}

    @staticmethod
    def from_json(obj) -> "NonlinearitySpec2":
        if not isinstance(obj, dict) or "kind" not in obj:
            raise InvalidInputError(f"bad two-argument nonlinearity spec {obj!r}")
        return NonlinearitySpec2(obj["kind"], dict(obj.get("params", {})))


@dataclass
class SystemSpec:
    """Coupled problem on the ball B_R: u driven by g, v driven by h."""

    N: int
    k: int
    R: float
    g: NonlinearitySpec2
    h: NonlinearitySpec2
    monotone_g_in_t: bool = True
    monotone_h_in_s: bool = True

    def __post_init__(self):
        if not (1 <= self.k <= self.N):
            raise InvalidInputError(f"need 1 <= k <= N, got N={self.N}, k={self.k}")
        if not (self.R > 0.0):
            raise InvalidInputError(f"radius must be positive, got {self.R!r}")
        if not self.g.couples_in_t:
            raise InvalidInputError("g must couple through t (a *_t kind)")
        if self.h.couples_in_t:
            raise InvalidInputError("h must couple through s (a *_s kind)")

    @property
    def matched_classes(self) -> bool:
        return (self.g.lim0.agrees_with(self.h.lim0)
                and self.g.liminf.agrees_with(self.h.liminf))

    @property
    def mu(self) -> LimitClass:
        return self.g.lim0

    @property
    def nu(self) -> LimitClass:
        return self.g.liminf

    def to_json(self) -> dict:
        return {"N": self.N, "k": self.k, "R": self.R,
                "g": self.g.to_json(), "h": self.h.to_json(),
                "monotone": {"g_in_t": self.monotone_g_in_t,
                             "h_in_s": self.monotone_h_in_s}}

    @staticmethod
    def from_json(obj: dict) -> "SystemSpec":
        try:
            mono = obj.get("monotone", {})
            return SystemSpec(
                N=obj["N"], k=obj["k"], R=float(obj["R"]),
                g=NonlinearitySpec2.from_json(obj["g"]),
                h=NonlinearitySpec2.from_json(obj["h"]),
                monotone_g_in_t=bool(mono.get("g_in_t", True)),
                monotone_h_in_s=bool(mono.get("h_in_s", True)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"bad system spec: {exc}") from exc


# ---------------------------------------------------------------------------
# coupled integration
# ---------------------------------------------------------------------------


def _pair_rhs(N, k, target_u, target_v):
    """RHS of the 4-state system; target_* return the S_k values from (s_u, s_v)."""
    coef = k / binom(N - 1, k - 1)
    k_inv = 1.0 / k
    r_exp = (k - N) / k
    exp = math.exp
    log = math.log

    def rhs(r, y):
        u, mu, v, mv = y
        su = -u if u < 0.0 else 0.0
        sv = -v if v < 0.0 else 0.0
        tu = target_u(su, sv)
        tv = target_v(su, sv)
        if tu < 0.0 or tv < 0.0 or not (math.isfinite(tu) and math.isfinite(tv)):
            raise NumericalFailureError(
                f"system right-hand side ({tu!r}, {tv!r}) invalid at (s_u, s_v)=({su!r}, {sv!r})")
        ra = coef * r ** (N - 1)
        up = exp(k_inv * log(mu) + r_exp * log(r)) if mu > 0.0 else 0.0
        vp = exp(k_inv * log(mv) + r_exp * log(r)) if mv > 0.0 else 0.0
        return (up, ra * tu, vp, ra * tv)

    return rhs


def _pair_terminal(N, k, R, target_u, target_v, d_u, d_v, tol):
    r0 = R * max(1e-8, 10.0 ** (-280.0 / N))
    c_full = binom(N, k)
    a_u = (target_u(d_u, d_v) / c_full) ** (1.0 / k)
    a_v = (target_v(d_u, d_v) / c_full) ** (1.0 / k)
    y0 = (-d_u + 0.5 * a_u * r0 * r0, a_u**k * r0**N,
          -d_v + 0.5 * a_v * r0 * r0, a_v**k * r0**N)
    m_u = max(target_u(d_u, d_v) * R**N, 1e-30)
    m_v = max(target_v(d_u, d_v) * R**N, 1e-30)
    atol = (tol * 1e-3 * max(d_u, 1.0), tol * 1e-3 * m_u,
            tol * 1e-3 * max(d_v, 1.0), tol * 1e-3 * m_v)
    res = rk.integrate(_pair_rhs(N, k, target_u, target_v), r0, y0, R,
                       rtol=tol, atol=atol)
    return res.y[0], res.y[2]


def _pair_profiles(N, k, R, target_u, target_v, d_u, d_v, lam, cfg):
    r0 = R * max(1e-8, 10.0 ** (-280.0 / N))
    c_full = binom(N, k)
    a_u = (target_u(d_u, d_v) / c_full) ** (1.0 / k)
    a_v = (target_v(d_u, d_v) / c_full) ** (1.0 / k)
    grid = np.linspace(0.0, R, cfg.grid_points)
    mask = grid <= r0
    arrays = {}
    for name, d, a in (("u", d_u, a_u), ("v", d_v, a_v)):
        val = np.empty_like(grid)
        vp = np.empty_like(grid)
        val[mask] = -d + 0.5 * a * grid[mask] ** 2
        vp[mask] = a * grid[mask]
        arrays[name] = (val, vp)
    outer = grid[~mask]
    if outer.size:
        y0 = (-d_u + 0.5 * a_u * r0 * r0, a_u**k * r0**N,
              -d_v + 0.5 * a_v * r0 * r0, a_v**k * r0**N)
        m_u = max(target_u(d_u, d_v) * R**N, 1e-30)
        m_v = max(target_v(d_u, d_v) * R**N, 1e-30)
        atol = (cfg.integrator_tol * 1e-3 * max(d_u, 1.0), cfg.integrator_tol * 1e-3 * m_u,
                cfg.integrator_tol * 1e-3 * max(d_v, 1.0), cfg.integrator_tol * 1e-3 * m_v)
        res = rk.integrate(_pair_rhs(N, k, target_u, target_v), r0, y0, R,
                           rtol=cfg.integrator_tol, atol=atol, output_ts=outer)
        states = np.asarray(res.grid_states)
        with np.errstate(divide="ignore", invalid="ignore"):
            for name, iu, im in (("u", 0, 1), ("v", 2, 3)):
                val, vp = arrays[name]
                val[~mask] = states[:, iu]
                m = states[:, im]
                vp[~mask] = np.where(
                    m > 0.0,
                    np.exp(np.log(np.maximum(m, 1e-300)) / k
                           + (k - N) / k * np.log(outer)),
                    0.0)
    prof_u = RadialProfile(r=grid, u=arrays["u"][0], uprime=arrays["u"][1],
                           lam=lam, d=d_u)
    prof_v = RadialProfile(r=grid, u=arrays["v"][0], uprime=arrays["v"][1],
                           lam=lam, d=d_v)
    _fill_pair_consistency(prof_u, prof_v, N, k, target_u, target_v)
    return prof_u, prof_v


def _fill_pair_consistency(prof_u, prof_v, N, k, target_u, target_v):
    r = prof_u.r
    h = r[1] - r[0]
    su = np.maximum(-prof_u.u[1:-1], 0.0)
    sv = np.maximum(-prof_v.u[1:-1], 0.0)
    for prof, target in ((prof_u, target_u), (prof_v, target_v)):
        upp = (prof.uprime[2:] - prof.uprime[:-2]) / (2.0 * h)
        q = prof.uprime[1:-1] / r[1:-1]
        sk = binom(N - 1, k) * q**k + binom(N - 1, k - 1) * q ** (k - 1) * upp
        want = np.array([target(a, b) for a, b in zip(su, sv)])
        prof.max_consistency_residual = float(np.max(np.abs(sk - want)))


def _system_targets(spec: SystemSpec, lam: float):
    k = spec.k
    g, h = spec.g, spec.h

    def target_u(su, sv):
        return (lam * g(su, sv)) ** k

    def target_v(su, sv):
        return (lam * h(su, sv)) ** k

    return target_u, target_v


def integrate_system(spec: SystemSpec, lam: float, d_u: float, d_v: float,
                     cfg: ShootingConfig = DEFAULT_CONFIG):
    """Simultaneous outward integration; returns the (u, v) profile pair."""
    if not (d_u > 0.0 and d_v > 0.0):
        raise InvalidInputError(f"amplitudes must be positive, got {d_u!r}, {d_v!r}")
    if lam < 0.0:
        raise InvalidInputError(f"lambda must be nonnegative, got {lam!r}")
    tu, tv = _system_targets(spec, lam)
    return _pair_profiles(spec.N, spec.k, spec.R, tu, tv, d_u, d_v, lam, cfg)


def system_boundary_values(spec: SystemSpec, lam: float, d_u: float, d_v: float,
                           cfg: ShootingConfig = DEFAULT_CONFIG):
    """(u(R), v(R)) without storing profiles."""
    if not (d_u > 0.0 and d_v > 0.0):
        raise InvalidInputError(f"amplitudes must be positive, got {d_u!r}, {d_v!r}")
    if lam == 0.0:
        return -d_u, -d_v
    tu, tv = _system_targets(spec, lam)
    return _pair_terminal(spec.N, spec.k, spec.R, tu, tv, d_u, d_v,
                          cfg.integrator_tol)


# ---------------------------------------------------------------------------
# two-residual Newton
# ---------------------------------------------------------------------------


@dataclass
class SystemBranchPoint:
    d_u: float
    d_v: float
    lam: float
    res_u: float
    res_v: float
    admissible: bool = True

    @property
    def d_total(self) -> float:
        return self.d_u + self.d_v


def _newton_pair(residual_fn, lam0, dv0, scale_u, scale_v, tol, max_iter=NEWTON_MAX_ITER):
    """Damped Newton on (log lambda, log d_v); residual_fn(lam, d_v) -> (ru, rv)."""

    def fval(z):
        ru, rv = residual_fn(math.exp(z[0]), math.exp(z[1]))
        return (ru / scale_u, rv / scale_v)

    z = [math.log(lam0), math.log(dv0)]
    f = fval(z)
    norm = max(abs(f[0]), abs(f[1]))
    for _ in range(max_iter):
        if norm <= tol:
            return math.exp(z[0]), math.exp(z[1]), norm
        jac = [[0.0, 0.0], [0.0, 0.0]]
        for j in range(2):
            zp = list(z)
            zp[j] += NEWTON_FD_STEP
            fp = fval(zp)
            jac[0][j] = (fp[0] - f[0]) / NEWTON_FD_STEP
            jac[1][j] = (fp[1] - f[1]) / NEWTON_FD_STEP
        det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0]
        if det == 0.0 or not math.isfinite(det):
            raise NumericalFailureError("singular Jacobian in system shooting")
        dz0 = -(jac[1][1] * f[0] - jac[0][1] * f[1]) / det
        dz1 = -(-jac[1][0] * f[0] + jac[0][0] * f[1]) / det
        # trust region in log space keeps amplitudes/lambda positive and sane
        cap = 2.0
        biggest = max(abs(dz0), abs(dz1))
        if biggest > cap:
            dz0 *= cap / biggest
            dz1 *= cap / biggest
        step = 1.0
        for _ in range(NEWTON_MAX_HALVINGS + 1):
            zn = [z[0] + step * dz0, z[1] + step * dz1]
            try:
                fn = fval(zn)
            except NumericalFailureError:
                step *= 0.5
                continue
            nn = max(abs(fn[0]), abs(fn[1]))
            if nn < norm or nn <= tol:
                z, f, norm = zn, fn, nn
                break
            step *= 0.5
        else:
            raise NumericalFailureError(
                f"system Newton stalled at residual norm {norm:.3e}")
    if norm <= tol:
        return math.exp(z[0]), math.exp(z[1]), norm
    raise NumericalFailureError(
        f"system Newton did not converge (residual norm {norm:.3e})")


def solve_system_shooting(spec: SystemSpec, d_u: float, init,
                          cfg: ShootingConfig = DEFAULT_CONFIG,
                          check_admissible: bool = True) -> SystemBranchPoint:
    """Converged (lambda, d_v) at fixed d_u from an initial guess in the basin."""
    if not (d_u > 0.0):
        raise InvalidInputError(f"d_u must be positive, got {d_u!r}")
    lam0, dv0 = init
    if not (lam0 > 0.0 and dv0 > 0.0):
        raise InvalidInputError(f"init must be positive, got {init!r}")

    def residual(lam, d_v):
        return system_boundary_values(spec, lam, d_u, d_v, cfg)

    lam, d_v, _ = _newton_pair(residual, lam0, dv0,
                               scale_u=max(d_u, 1e-12), scale_v=max(dv0, 1e-12),
                               tol=cfg.root_tol)
    ru, rv = residual(lam, d_v)
    admissible = True
    if check_admissible:
        adm_cfg = cfg if cfg.grid_points <= 256 else ShootingConfig(
            grid_points=256, integrator_tol=cfg.integrator_tol,
            root_tol=cfg.root_tol, max_root_iter=cfg.max_root_iter,
            scan_cells=cfg.scan_cells)
        pu, pv = integrate_system(spec, lam, d_u, d_v, adm_cfg)
        admissible = (profile_admissible(pu, spec.N, spec.k)
                      and profile_admissible(pv, spec.N, spec.k))
    return SystemBranchPoint(d_u=d_u, d_v=d_v, lam=lam, res_u=ru, res_v=rv,
                             admissible=admissible)


def system_eigenvalue(N: int, k: int, R: float,
                      cfg: ShootingConfig = DEFAULT_CONFIG) -> float:
    """Coupled eigenvalue lambda0 of (S_k(D^2 u))^(1/k) = |lambda v|, and dually.

    The symmetric reduction u = v collapses the system to the scalar
    eigenproblem; the value is then confirmed by a two-residual solve that does
    not impose symmetry.  Disagreement beyond 1e-6 relative is an internal
    inconsistency and raises NumericalFailureError.
    """
    lam_sym = first_eigenvalue(N, k, R, cfg).lambda1
    spec = SystemSpec(N=N, k=k, R=R,
                      g=NonlinearitySpec2("linear_t"),
                      h=NonlinearitySpec2("linear_s"))
    point = solve_system_shooting(spec, 1.0, (1.07 * lam_sym, 0.9), cfg,
                                  check_admissible=False)
    if abs(point.lam - lam_sym) > 1e-6 * lam_sym:
        raise NumericalFailureError(
            f"asymmetric coupled solve gave {point.lam!r}, symmetric reduction {lam_sym!r}")
    return lam_sym


# ---------------------------------------------------------------------------
# power-pair eigen manifold
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PowerPairResult:
    alpha: float
    beta: float
    samples: list
    constant: float
    max_rel_deviation: float


def power_pair_constant(N: int, k: int, alpha: float, beta: float, R: float = 1.0,
                        n_samples: int = 8, cfg: ShootingConfig = DEFAULT_CONFIG,
                        mu_lo: float | None = None, mu_hi: float | None = None) -> PowerPairResult:
    """Constancy of lambda * mu^(alpha/k) for S_k(D^2 u) = lambda (-v)^alpha,
    S_k(D^2 v) = mu (-u)^beta with alpha beta = k^2.

    Each mu on the log grid is solved independently by two-residual shooting
    with the u-amplitude normalized to 1 (degree-k^2 homogeneity); the
    constant is the geometric mean of the products and the maximum relative
    deviation quantifies the constancy.
    """
    if not (alpha > 0.0 and beta > 0.0):
        raise InvalidInputError("alpha and beta must be positive")
    if abs(alpha * beta - k * k) > 1e-12 * k * k:
        raise InvalidInputError(
            f"alpha*beta must equal k^2, got {alpha}*{beta} != {k*k}")
    if n_samples < 2:
        raise InvalidInputError("need at least 2 mu samples")
    lam1 = first_eigenvalue(N, k, R, cfg).lambda1
    if mu_lo is None:
        mu_lo = 1e-2 * lam1**k
    if mu_hi is None:
        mu_hi = 1e2 * lam1**k
    if not (0.0 < mu_lo < mu_hi):
        raise InvalidInputError(f"bad mu range ({mu_lo!r}, {mu_hi!r})")

    mus = [mu_lo * (mu_hi / mu_lo) ** (i / (n_samples - 1)) for i in range(n_samples)]
    samples = []
    seed = None
    for mu in mus:
        if seed is None:
            lam0 = lam1 ** (k + alpha) * mu ** (-alpha / k)
            dv0 = (mu / lam1**k) ** (1.0 / k)
        else:
            lam_prev, dv_prev, mu_prev = seed
            lam0 = lam_prev * (mu_prev / mu) ** (alpha / k)
            dv0 = dv_prev * (mu / mu_prev) ** (1.0 / k)
        # detune the seed so every sample genuinely re-converges instead of
        # inheriting the scaling orbit of its neighbor
        lam0 *= 1.17
        dv0 *= 0.91

        def residual(lam, d_v, mu=mu):
            def tu(su, sv):
                return lam * sv**alpha

            def tv(su, sv):
                return mu * su**beta

            return _pair_terminal(N, k, R, tu, tv, 1.0, d_v, cfg.integrator_tol)

        lam, d_v, _ = _newton_pair(residual, lam0, dv0, scale_u=1.0,
                                   scale_v=max(dv0, 1e-12), tol=cfg.root_tol)
        samples.append((lam, mu))
        seed = (lam, d_v, mu)

    products = [lam * mu ** (alpha / k) for lam, mu in samples]
    log_mean = sum(math.log(p) for p in products) / len(products)
    constant = math.exp(log_mean)
    max_dev = max(abs(p - constant) / constant for p in products)
    return PowerPairResult(alpha=alpha, beta=beta, samples=samples,
                           constant=constant, max_rel_deviation=max_dev)


# ---------------------------------------------------------------------------
# system branches
# ---------------------------------------------------------------------------


@dataclass
class SystemBranch:
    points: list[SystemBranchPoint]
    branch: Branch    # projection onto (d_u + d_v, lambda) for fold/count reuse
    gaps: list[float] = field(default_factory=list)

    def to_csv(self, path) -> None:
        fold_idx = {f.index for f in self.branch.folds}
        with open(path, "w", newline="") as fh:
            fh.write("index,d_u,d_v,lambda,res_u,res_v,is_fold\n")
            for i, p in enumerate(self.points):
                fh.write(f"{i},{p.d_u:.17g},{p.d_v:.17g},{p.lam:.17g},"
                         f"{p.res_u:.17g},{p.res_v:.17g},"
                         f"{1 if i in fold_idx else 0}\n")


def _system_lambda_predictor(spec: SystemSpec, lam1: float):
    def pred(d):
        half = 0.5 * d
        val = spec.g(half, half) / half
        return lam1 / val if val > 0.0 else lam1
    return pred


def trace_system_branch(spec: SystemSpec, d_grid, cfg: ShootingConfig = DEFAULT_CONFIG,
                        *, lambda_scale: float | None = None) -> SystemBranch:
    """System branch over total amplitude d = d_u + d_v (d_u drives, d_v solved).

    Newton is seeded from the previous converged point; cold starts fall back
    to a coarse (lambda, d_v) grid scan around the eigenvalue-based predictor.
    Unresolved amplitudes are recorded as gaps.
    """
    d_grid = [float(d) for d in d_grid]
    if len(d_grid) < 4 or any(b <= a for a, b in zip(d_grid, d_grid[1:])):
        raise InvalidInputError("d_grid must be >= 4 strictly increasing amplitudes")
    if lambda_scale is None:
        lambda_scale = first_eigenvalue(spec.N, spec.k, spec.R, cfg).lambda1
    pred = _system_lambda_predictor(spec, lambda_scale)

    points: list[SystemBranchPoint] = []
    gaps: list[float] = []
    seed = None
    for d in d_grid:
        d_u = 0.5 * d
        inits = []
        if seed is not None:
            lam_s, dv_s, d_prev = seed
            inits.append((lam_s, dv_s * d / d_prev))
        inits.append((pred(d), d_u))
        point = None
        for init in inits:
            try:
                point = solve_system_shooting(spec, d_u, init, cfg)
                break
            except NumericalFailureError:
                continue
        if point is None:
            point = _grid_rescue(spec, d_u, pred(d), cfg)
        if point is None:
            gaps.append(d)
            continue
        points.append(point)
        seed = (point.lam, point.d_v, d)

    if len(points) < 4:
        raise NumericalFailureError("system trace resolved fewer than 4 points")
    entries = _refine_system_jumps(spec, points, cfg)
    proj = [BranchPoint(d=p.d_total, lam=p.lam,
                        residual=max(abs(p.res_u), abs(p.res_v)),
                        admissible=p.admissible, seed=base)
            for p, base in entries]
    points = [p for p, _ in entries]
    branch = Branch(points=proj, gaps=list(gaps))
    branch.folds = detect_folds(branch)
    try:
        branch.lambda_at_zero, branch.lambda_at_infinity = asymptote_estimates(branch)
    except InvalidInputError:
        pass
    return SystemBranch(points=points, branch=branch, gaps=gaps)


def _refine_system_jumps(spec, points, cfg, jump_rel=0.20, max_depth=3):
    """Insert midpoints where neighbor lambda jumps exceed 20% relative."""
    entries = [(p, True) for p in points]
    depth = {id(p): 0 for p in points}
    i = 0
    while i < len(entries) - 1:
        a, b = entries[i][0], entries[i + 1][0]
        level = max(depth[id(a)], depth[id(b)])
        jump = abs(b.lam - a.lam) / min(a.lam, b.lam)
        if jump > jump_rel and level < max_depth:
            d_u = 0.5 * math.sqrt(a.d_total * b.d_total)
            init = (math.sqrt(a.lam * b.lam), math.sqrt(a.d_v * b.d_v))
            try:
                mid = solve_system_shooting(spec, d_u, init, cfg)
            except NumericalFailureError:
                mid = None
            if mid is not None and a.d_total < mid.d_total < b.d_total:
                depth[id(mid)] = level + 1
                entries.insert(i + 1, (mid, False))
                continue
        i += 1
    return entries


def _grid_rescue(spec, d_u, lam_center, cfg):
    best = None
    for lam in (lam_center * 10.0**e for e in np.linspace(-2, 2, 9)):
        for dv in (d_u * 10.0**e for e in np.linspace(-1, 1, 7)):
            try:
                ru, rv = system_boundary_values(spec, lam, d_u, dv, cfg)
            except NumericalFailureError:
                continue
            norm = max(abs(ru) / max(d_u, 1e-12), abs(rv) / max(dv, 1e-12))
            if best is None or norm < best[0]:
                best = (norm, lam, dv)
    if best is None:
        return None
    try:
        return solve_system_shooting(spec, d_u, (best[1], best[2]), cfg)
    except NumericalFailureError:
        return None


# ---------------------------------------------------------------------------
# hypothesis checks and monitors
# ---------------------------------------------------------------------------


def fd_nondecreasing(fun, argument: str, s_max: float, n: int = 33,
                     tol: float = 1e-9) -> bool:
    """Finite differences of fun(s, t) in the named argument are >= -tol on [0, s_max]^2."""
    if argument not in ("s", "t"):
        raise InvalidInputError("argument must be 's' or 't'")
    xs = np.linspace(0.0, s_max, n)
    step = s_max / (8.0 * n)
    scale = tol * max(1.0, s_max)
    for a in xs:
        for b in xs:
            if argument == "t":
                delta = fun(a, b + step) - fun(a, b)
            else:
                delta = fun(a + step, b) - fun(a, b)
            if delta < -scale:
                return False
    return True


def check_monotonicity(spec: SystemSpec, s_max: float, n: int = 33) -> bool:
    """True iff g is non-decreasing in t and h is non-decreasing in s on [0, s_max]^2."""
    return (fd_nondecreasing(spec.g, "t", s_max, n)
            and fd_nondecreasing(spec.h, "s", s_max, n))


def system_apriori_monitor(sys_branch: SystemBranch, spec: SystemSpec,
                           lam1: float | None = None,
                           cfg: ShootingConfig = DEFAULT_CONFIG) -> VerificationReport:
    """Norm-bound monitors on a traced system branch.

    Superlinear case (nu = Infinite): amplitudes at sampled lambdas in a
    compact are bounded.  Sublinear case (asymptotic ratio below the
    eigenvalue at the sampled lambda): a uniform bound over the whole branch.
    Hypotheses that do not apply produce a vacuous pass note.
    """
    rep = VerificationReport(notes=["scope: radial shooting branches on a ball"])
    branch = sys_branch.branch
    if lam1 is None:
        lam1 = first_eigenvalue(spec.N, spec.k, spec.R, cfg).lambda1
    lams = branch.lam_values()
    lam_min, lam_max = min(lams), max(lams)
    d_cap = max(p.d for p in branch.points) / 3.0
    nu = spec.nu

    if nu.is_infinite:
        for frac in (0.3, 0.5, 0.7):
            lam = lam_min + frac * (lam_max - lam_min)
            amps = solution_amplitudes(branch, lam)
            top = max(amps) if amps else 0.0
            rep.add(f"superlinear norm bound at lambda={lam:.6g}",
                    f"max (d_u+d_v) <= {d_cap:.6g}", f"max = {top:.6g}",
                    top <= d_cap)
        return rep

    # asymptotic ratio bound: lambda * nu < lambda1 makes solutions uniformly bounded
    if nu.is_zero:
        qualifying = [p for p in branch.points]
    else:
        lam_bound = lam1 / nu.value
        qualifying = [p for p in branch.points if p.lam < lam_bound * (1.0 - 1e-9)]
    if not qualifying:
        rep.notes.append("norm-bound hypotheses not met on this branch (vacuous pass)")
        return rep
    top = max(p.d for p in qualifying)
    rep.add("uniform norm bound (sublinear ratios)",
            "qualifying branch points have finite total amplitude",
            f"max (d_u+d_v) = {top:.6g} over {len(qualifying)} points",
            math.isfinite(top))
    return rep
