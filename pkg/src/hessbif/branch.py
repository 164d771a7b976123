"""Bifurcation diagrams lambda(d), folds, solution counts, theorem predicates.

The branch coordinate is the amplitude d = -u(0) = max|u|, which makes the
multivalued lambda -> u correspondence a single-valued map d -> lambda(d) for
radial shooting.  A traced branch is the concrete, finite stand-in for the
solution continuum: existence/multiplicity claims become crossing counts of
horizontal lines lambda = const against the polyline, and the bifurcation
points at zero/infinite amplitude become extrapolated asymptotes of the two
tails.

All verification is for radial branches on balls; reports say so explicitly.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .core import LimitClass, ProblemSpec
from .errors import (
    AtFoldError,
    InvalidInputError,
    OutOfTableError,
    TracingFailureError,
)
from .shooting import (
    DEFAULT_CONFIG,
    ShootingConfig,
    integrate_profile,
    profile_admissible,
    shoot_boundary_value,
    solve_lambda,
)

PLATEAU_REL = 1e-6          # extremum must beat neighbors by this (relative)
JUMP_REL = 0.20             # neighbor jump that triggers local grid refinement
MAX_REFINE_DEPTH = 3
GAP_FRACTION_LIMIT = 0.10
RADIAL_SCOPE_NOTE = "scope: radial shooting branches on a ball; non-radial solutions are not examined"


@dataclass
class BranchPoint:
    d: float
    lam: float
    residual: float
    admissible: bool
    seed: bool = True   # True for points of the base log grid (tails use these)


@dataclass(frozen=True)
class Fold:
    index: int
    lam: float
    kind: str   # "max" | "min"


@dataclass(frozen=True)
class AsymptoteEstimate:
    """Extrapolated branch limit: finite value, 0, +inf, or undetermined."""

    kind: str                 # "finite" | "zero" | "infinite" | "undetermined"
    value: float | None = None

    @property
    def as_float(self) -> float:
        if self.kind == "finite":
            return self.value
        if self.kind == "zero":
            return 0.0
        if self.kind == "infinite":
            return math.inf
        return math.nan

    def __str__(self):
        return f"{self.value:.8g}" if self.kind == "finite" else self.kind


@dataclass
class Branch:
    points: list[BranchPoint]
    gaps: list[float] = field(default_factory=list)
    extra_roots: list[tuple[float, float]] = field(default_factory=list)
    folds: list[Fold] = field(default_factory=list)
    lambda_at_zero: AsymptoteEstimate | None = None
    lambda_at_infinity: AsymptoteEstimate | None = None

    def __post_init__(self):
        ds = [p.d for p in self.points]
        if any(b <= a for a, b in zip(ds, ds[1:])):
            raise InvalidInputError("branch points must be strictly increasing in d")

    def lam_values(self):
        return [p.lam for p in self.points]

    def segments(self):
        """Index ranges [start, stop) of points not interrupted by a gap."""
        if not self.points:
            return []
        cuts = sorted(self.gaps)
        out = []
        start = 0
        for i in range(len(self.points) - 1):
            lo, hi = self.points[i].d, self.points[i + 1].d
            if any(lo < g < hi for g in cuts):
                out.append((start, i + 1))
                start = i + 1
        out.append((start, len(self.points)))
        return out

    def to_csv(self, path) -> None:
        fold_idx = {f.index for f in self.folds}
        with open(path, "w", newline="") as fh:
            fh.write("index,d,lambda,residual,is_fold\n")
            for i, p in enumerate(self.points):
                fh.write(f"{i},{p.d:.17g},{p.lam:.17g},{p.residual:.17g},"
                         f"{1 if i in fold_idx else 0}\n")

    @staticmethod
    def from_csv(path) -> "Branch":
        try:
            with open(path) as fh:
                header = fh.readline().strip()
                if header != "index,d,lambda,residual,is_fold":
                    raise InvalidInputError(f"bad branch CSV header: {header!r}")
                points = []
                fold_rows = []
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    cells = line.split(",")
                    if len(cells) != 5:
                        raise InvalidInputError(f"bad branch CSV row: {line!r}")
                    idx, d, lam, res, is_fold = cells
                    points.append(BranchPoint(d=float(d), lam=float(lam),
                                              residual=float(res), admissible=True))
                    if is_fold.strip() not in ("0", "1"):
                        raise InvalidInputError(f"bad is_fold flag in row: {line!r}")
                    if is_fold.strip() == "1":
                        fold_rows.append(len(points) - 1)
        except OSError as exc:
            raise InvalidInputError(f"cannot read branch CSV {path}: {exc}") from exc
        except ValueError as exc:
            raise InvalidInputError(f"malformed branch CSV {path}: {exc}") from exc
        if not points:
            raise InvalidInputError(f"branch CSV {path} contains no points")
        br = Branch(points=points)
        lams = br.lam_values()
        br.folds = [Fold(i, lams[i], "max") for i in fold_rows]
        return br


# ---------------------------------------------------------------------------
# fold detection and solution counting
# ---------------------------------------------------------------------------


def detect_folds(branch: Branch, plateau_rel: float = PLATEAU_REL) -> list[Fold]:
    """Interior local extrema of lambda over d, with plateau hysteresis.

    An extremum counts only if the sequence moves by more than plateau_rel
    relative on both flanks, so flat (eigen-type) branches report none.
    Segments separated by gaps are scanned independently.
    """
    if len(branch.points) < 3:
        return []
    lams = branch.lam_values()
    folds = []
    for start, stop in branch.segments():
        if stop - start < 3:
            continue
        trend = 0
        ref = lams[start]
        ref_idx = start
        for i in range(start + 1, stop):
            tol = plateau_rel * max(abs(lams[i]), abs(ref))
            if lams[i] > ref + tol:
                if trend < 0 and ref_idx > start:
                    folds.append(Fold(ref_idx, lams[ref_idx], "min"))
                trend, ref, ref_idx = 1, lams[i], i
            elif lams[i] < ref - tol:
                if trend > 0 and ref_idx > start:
                    folds.append(Fold(ref_idx, lams[ref_idx], "max"))
                trend, ref, ref_idx = -1, lams[i], i
            else:
                if (trend >= 0 and lams[i] > ref) or (trend < 0 and lams[i] < ref):
                    ref, ref_idx = lams[i], i
    return sorted(folds, key=lambda f: f.index)


def _crossings(branch: Branch, lam: float):
    """(d, index) of every crossing of the horizontal line lambda = lam."""
    lams = branch.lam_values()
    hits = []
    for start, stop in branch.segments():
        for i in range(start, stop - 1):
            a, b = lams[i] - lam, lams[i + 1] - lam
            if a == 0.0:
                if i == start or (lams[i - 1] - lam) != 0.0:
                    hits.append((branch.points[i].d, i))
            elif a * b < 0.0:
                t = a / (a - b)
                ld = (math.log(branch.points[i].d) * (1 - t)
                      + math.log(branch.points[i + 1].d) * t)
                hits.append((math.exp(ld), i))
        last = stop - 1
        if lams[last] - lam == 0.0 and (stop - start) >= 2:
            hits.append((branch.points[last].d, last))
    return hits


def count_solutions(branch: Branch, lam: float,
                    plateau_rel: float = PLATEAU_REL) -> int:
    """Crossings of lambda = const against the branch polyline.

    Raises AtFoldError when lam sits within plateau tolerance of a fold value
    (the fold contributes its own single solution there).
    """
    if not (lam > 0.0) or not math.isfinite(lam):
        raise InvalidInputError(f"lambda must be positive, got {lam!r}")
    folds = branch.folds if branch.folds else detect_folds(branch, plateau_rel)
    for f in folds:
        if abs(lam - f.lam) <= plateau_rel * max(abs(lam), abs(f.lam)):
            others = [d for d, i in _crossings(branch, lam)
                      if abs(i - f.index) > 1]
            raise AtFoldError(lam, f.lam, 1, len(others))
    return len(_crossings(branch, lam))


def solution_amplitudes(branch: Branch, lam: float) -> list[float]:
    """Amplitudes d of the branch crossings at lambda = lam (log-d interpolation)."""
    return sorted(d for d, _ in _crossings(branch, lam))


# ---------------------------------------------------------------------------
# asymptote extrapolation
# ---------------------------------------------------------------------------


def _aitken(a, b, c):
    denom = (c - b) - (b - a)
    if denom == 0.0:
        return c
    return c - (c - b) ** 2 / denom


def _classify_tail(lams) -> AsymptoteEstimate:
    """lams: three branch values ordered toward the limit, log-spaced in d."""
    a, b, c = lams
    if min(lams) <= 0.0:
        return AsymptoteEstimate("undetermined")
    d1 = math.log10(b) - math.log10(a)
    d2 = math.log10(c) - math.log10(b)
    if abs(d2) < 1e-4:
        return AsymptoteEstimate("finite", _aitken(a, b, c))
    if d1 * d2 < 0.0:
        return AsymptoteEstimate("undetermined")
    if abs(d2) <= 0.75 * abs(d1):
        # contracting in log lambda: geometric approach to a finite limit
        val = _aitken(a, b, c)
        if val <= 0.02 * c:
            return AsymptoteEstimate("zero")
        return AsymptoteEstimate("finite", val)
    # persistent log-slope: power-law tail
    return AsymptoteEstimate("infinite") if d2 > 0.0 else AsymptoteEstimate("zero")


def asymptote_estimates(branch: Branch):
    """(lambda_at_zero, lambda_at_infinity) extrapolated from the branch tails.

    Uses the base-grid (seed) points only, which stay log-spaced after local
    refinement; the tail beyond the outermost fold must be monotone or the end
    is reported undetermined.
    """
    seeds = [p for p in branch.points if p.seed]
    if len(seeds) < 4:
        raise InvalidInputError("need at least 4 base-grid points for asymptotes")
    span = math.log10(seeds[-1].d / seeds[0].d)
    if span < 4.0 - 1e-9:
        raise InvalidInputError(f"branch covers only {span:.2f} decades of d, need >= 4")

    folds = branch.folds if branch.folds else detect_folds(branch)
    d_values = [p.d for p in branch.points]
    lo_lim = d_values[folds[0].index] if folds else math.inf
    hi_lim = d_values[folds[-1].index] if folds else 0.0

    head = [p for p in seeds if p.d < lo_lim]
    tail = [p for p in seeds if p.d > hi_lim]
    if len(head) >= 3:
        at_zero = _classify_tail([head[2].lam, head[1].lam, head[0].lam])
    else:
        at_zero = AsymptoteEstimate("undetermined")
    if len(tail) >= 3:
        at_inf = _classify_tail([tail[-3].lam, tail[-2].lam, tail[-1].lam])
    else:
        at_inf = AsymptoteEstimate("undetermined")
    return at_zero, at_inf


# ---------------------------------------------------------------------------
# theorem predictions
# ---------------------------------------------------------------------------

AT_LEAST_ONE = "at-least-one"
TWO_BELOW_MAX_FOLD = "two-below-max-fold"
TWO_ABOVE_MIN_FOLD = "two-above-min-fold"


@dataclass(frozen=True)
class TheoremPrediction:
    """Existence interval and multiplicity profile for one (f0, finf) cell."""

    case: str
    lam_lo: float
    lam_hi: float
    profile: str
    lam_from_zero: float       # branch limit as d -> 0 (may be 0.0 or inf)
    lam_from_infinity: float   # branch limit as d -> inf (may be 0.0 or inf)
    fold_driven: bool = False  # interval endpoints come from observed folds


def predicted_interval(f0: LimitClass, finf: LimitClass,
                       lambda1: float) -> TheoremPrediction:
    """Existence-table cell for the given limit classes.

    The two diagonal cells (both Infinite / both Zero) have fold-driven
    multiplicity profiles instead of a-priori intervals; the Zero-Zero cell
    additionally requires a coercive nonlinearity.  Equal finite limits are
    outside the table.
    """
    if not (lambda1 > 0.0):
        raise InvalidInputError(f"lambda1 must be positive, got {lambda1!r}")
    from_zero = f0.ratio_under(lambda1)
    from_inf = finf.ratio_under(lambda1)
    case = f"{f0.kind}-{finf.kind}"

    if f0.is_finite and finf.is_finite:
        if f0.value == finf.value:
            raise OutOfTableError(
                "equal finite limits at 0 and infinity are outside the existence table")
        lo, hi = sorted((from_zero, from_inf))
        return TheoremPrediction(case, lo, hi, AT_LEAST_ONE, from_zero, from_inf)
    if f0.is_finite and finf.is_zero:
        return TheoremPrediction(case, from_zero, math.inf, AT_LEAST_ONE, from_zero, from_inf)
    if f0.is_finite and finf.is_infinite:
        return TheoremPrediction(case, 0.0, from_zero, AT_LEAST_ONE, from_zero, from_inf)
    if f0.is_zero and finf.is_finite:
        return TheoremPrediction(case, from_inf, math.inf, AT_LEAST_ONE, from_zero, from_inf)
    if f0.is_zero and finf.is_infinite:
        return TheoremPrediction(case, 0.0, math.inf, AT_LEAST_ONE, from_zero, from_inf)
    if f0.is_infinite and finf.is_finite:
        return TheoremPrediction(case, 0.0, from_inf, AT_LEAST_ONE, from_zero, from_inf)
    if f0.is_infinite and finf.is_zero:
        return TheoremPrediction(case, 0.0, math.inf, AT_LEAST_ONE, from_zero, from_inf)
    if f0.is_infinite and finf.is_infinite:
        return TheoremPrediction(case, 0.0, math.inf, TWO_BELOW_MAX_FOLD,
                                 from_zero, from_inf, fold_driven=True)
    # both zero: requires coercive f
    return TheoremPrediction(case, 0.0, math.inf, TWO_ABOVE_MIN_FOLD,
                             from_zero, from_inf, fold_driven=True)


# ---------------------------------------------------------------------------
# verification report
# ---------------------------------------------------------------------------


@dataclass
class Check:
    name: str
    predicted: str
    observed: str
    passed: bool
    tol: float | None = None

    def to_json(self):
        return {"name": self.name, "predicted": self.predicted,
                "observed": self.observed, "pass": self.passed, "tol": self.tol}


@dataclass
class VerificationReport:
    checks: list[Check] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name, predicted, observed, passed, tol=None):
        self.checks.append(Check(name, str(predicted), str(observed), bool(passed), tol))

    def to_json(self):
        return {
            "schema_version": 1,
            "checks": [c.to_json() for c in self.checks],
            "pass": self.passed,
            "notes": list(self.notes),
        }


def _count_off_fold(branch: Branch, lam: float) -> int:
    # nudge off a fold value if a sample accidentally lands on one
    for bump in (1.0, 1.0 + 1e-4, 1.0 - 1e-4, 1.0 + 1e-3):
        try:
            return count_solutions(branch, lam * bump)
        except AtFoldError:
            continue
    raise AtFoldError(lam, lam, 1, 0)


def _sample_inside(lam_lo, lam_hi, branch: Branch, n: int):
    """n lambda samples strictly inside the predicted interval, within coverage."""
    lams = branch.lam_values()
    lam_min, lam_max = min(lams), max(lams)
    margin = 1e-2
    lo = lam_lo * (1.0 + margin) if lam_lo > 0.0 else max(lam_min * 1.5, lam_max * 1e-6)
    hi = lam_hi * (1.0 - margin) if math.isfinite(lam_hi) else lam_max / 1.5
    hi = min(hi, lam_max / 1.02)
    lo = max(lo, lam_min * 1.02)
    if not (lo < hi):
        return []
    if n == 1:
        return [math.sqrt(lo * hi)]
    step = (hi / lo) ** (1.0 / (n - 1))
    return [lo * step**i for i in range(n)]


def verify_predictions(branch: Branch, prediction: TheoremPrediction,
                       lambda_samples: int = 5) -> VerificationReport:
    """Check a traced branch against its predicted interval and profile.

    Samples the existence interval one tolerance-width inside (endpoint
    behavior is never asserted), checks multiplicity on both sides of the
    relevant fold for the diagonal cells, compares extrapolated asymptotes
    against the predicted bifurcation points, and runs the norm-bound monitor
    in the superlinear cases.  Failures are report entries, never exceptions.
    """
    rep = VerificationReport(notes=[RADIAL_SCOPE_NOTE])
    folds = branch.folds if branch.folds else detect_folds(branch)

    if prediction.profile == AT_LEAST_ONE:
        samples = _sample_inside(prediction.lam_lo, prediction.lam_hi,
                                 branch, lambda_samples)
        rep.add("interval-sample-coverage", f"{lambda_samples} samples",
                f"{len(samples)} samples", len(samples) == lambda_samples)
        for lam in samples:
            n = _count_off_fold(branch, lam)
            rep.add(f"existence at lambda={lam:.6g}", "count >= 1", f"count = {n}",
                    n >= 1)
    elif prediction.profile == TWO_BELOW_MAX_FOLD:
        maxima = [f for f in folds if f.kind == "max"]
        rep.add("fold-count", ">= 1 maximum", f"{len(maxima)} maxima", len(maxima) >= 1)
        if maxima:
            lam_star = max(f.lam for f in maxima)
            rep.notes.append(f"radial lambda* = {lam_star:.10g}")
            n_below = _count_off_fold(branch, 0.5 * lam_star)
            rep.add("multiplicity below radial lambda*", "count = 2",
                    f"count = {n_below}", n_below == 2)
            n_above = _count_off_fold(branch, 2.0 * lam_star)
            rep.add("non-existence above radial lambda*", "count = 0",
                    f"count = {n_above}", n_above == 0)
    elif prediction.profile == TWO_ABOVE_MIN_FOLD:
        minima = [f for f in folds if f.kind == "min"]
        rep.add("fold-count", ">= 1 minimum", f"{len(minima)} minima", len(minima) >= 1)
        if minima:
            lam_low = min(f.lam for f in minima)
            rep.notes.append(f"radial lambda_* = {lam_low:.10g}")
            n_above = _count_off_fold(branch, 2.0 * lam_low)
            rep.add("multiplicity above radial lambda_*", "count = 2",
                    f"count = {n_above}", n_above == 2)
            n_below = _count_off_fold(branch, 0.5 * lam_low)
            rep.add("non-existence below radial lambda_*", "count = 0",
                    f"count = {n_below}", n_below == 0)
    else:
        raise InvalidInputError(f"unknown profile {prediction.profile!r}")

    at_zero = branch.lambda_at_zero
    at_inf = branch.lambda_at_infinity
    if at_zero is None or at_inf is None:
        try:
            at_zero, at_inf = asymptote_estimates(branch)
        except InvalidInputError:
            at_zero = at_inf = AsymptoteEstimate("undetermined")
    _asymptote_check(rep, "bifurcation point (d -> 0)", prediction.lam_from_zero,
                     at_zero, 1e-3)
    _asymptote_check(rep, "bifurcation point (d -> inf)", prediction.lam_from_infinity,
                     at_inf, 1e-2)

    if prediction.lam_from_infinity == 0.0 and prediction.profile == AT_LEAST_ONE:
        # superlinear growth: amplitudes stay bounded on compact lambda sets;
        # sample the upper part of the interval so crossings are interior
        samples = _sample_inside(prediction.lam_lo, prediction.lam_hi, branch, 8)[-3:]
        d_cap = max(p.d for p in branch.points) / 3.0
        for lam in samples:
            amps = solution_amplitudes(branch, lam)
            top = max(amps) if amps else 0.0
            rep.add(f"a-priori bound at lambda={lam:.6g}", f"max d <= {d_cap:.6g}",
                    f"max d = {top:.6g}", top <= d_cap)

    if branch.gaps:
        rep.notes.append(
            "no lambda root at d = "
            + ", ".join(f"{g:.6g}" for g in branch.gaps)
            + " (retained as potential non-existence evidence)")
    return rep


def _asymptote_check(rep: VerificationReport, name: str, target: float,
                     est: AsymptoteEstimate, rtol: float) -> None:
    if est.kind == "undetermined":
        rep.add(name, _fmt_limit(target), "undetermined", False, rtol)
        return
    if target == 0.0 or math.isinf(target):
        ok = est.as_float == target
        rep.add(name, _fmt_limit(target), str(est), ok, rtol)
        return
    ok = est.kind == "finite" and abs(est.value - target) <= rtol * target
    rep.add(name, f"{target:.8g}", str(est), ok, rtol)


def _fmt_limit(x: float) -> str:
    if x == 0.0:
        return "0"
    if math.isinf(x):
        return "inf"
    return f"{x:.8g}"


# ---------------------------------------------------------------------------
# tracing
# ---------------------------------------------------------------------------


def _lambda_predictor(spec: ProblemSpec, lam_scale: float):
    def pred(d):
        return lam_scale * d / spec.f(d)
    return pred


def _solve_point(spec, d, cfg, seed, pred):
    """All lambda roots at amplitude d, expanding the bracket until one is found."""
    if seed is not None:
        plans = ((seed, 1.6, 6), (seed, 4.0, 10), (seed, 40.0, 20),
                 (pred(d), 100.0, 24), (pred(d), 1e4, 48))
    else:
        plans = ((pred(d), 30.0, 16), (pred(d), 1e3, 32), (pred(d), 1e6, 64))
    for center, width, cells in plans:
        lo, hi = center / width, center * width
        roots = solve_lambda(spec, d, (lo, hi), cfg, scan_cells=cells)
        if roots:
            return roots
    return []


def _make_point(spec, d, lam, cfg, seed_flag):
    residual = shoot_boundary_value(spec, lam, d, cfg)
    adm_cfg = cfg if cfg.grid_points <= 256 else ShootingConfig(
        grid_points=256, integrator_tol=cfg.integrator_tol,
        root_tol=cfg.root_tol, max_root_iter=cfg.max_root_iter,
        scan_cells=cfg.scan_cells)
    prof = integrate_profile(spec, lam, d, adm_cfg)
    return BranchPoint(d=d, lam=lam, residual=residual,
                       admissible=profile_admissible(prof, spec.N, spec.k),
                       seed=seed_flag)


def _pick_root(roots, seed):
    if seed is None or len(roots) == 1:
        return roots[0], roots[1:]
    best = min(roots, key=lambda r: abs(math.log(r / seed)))
    return best, [r for r in roots if r is not best]


def trace_branch(spec: ProblemSpec, d_min: float, d_max: float, n_points: int,
                 cfg: ShootingConfig = DEFAULT_CONFIG, *, lambda_scale: float | None = None,
                 refine_folds: bool = True, threads: int = 1) -> Branch:
    """Trace lambda(d) over a log grid of amplitudes.

    Brackets are seeded from the previous point (sequential mode) or from the
    eigenvalue-based predictor lambda1 * d / f(d) (cold starts and threaded
    mode).  Amplitudes with no root in the fully expanded bracket are recorded
    as gaps; more than 10% gaps on the base grid raises TracingFailureError.
    Neighbor jumps above 20% relative trigger local log-grid refinement up to
    3 levels, and detected folds are localized by golden-section search before
    the final fold/asymptote summaries are attached.
    """
    if not (0.0 < d_min < d_max):
        raise InvalidInputError(f"need 0 < d_min < d_max, got {d_min!r}, {d_max!r}")
    if n_points < 16:
        raise InvalidInputError(f"n_points must be >= 16, got {n_points}")
    if lambda_scale is None:
        from .shooting import first_eigenvalue

        lambda_scale = first_eigenvalue(spec.N, spec.k, spec.R, cfg).lambda1
    pred = _lambda_predictor(spec, lambda_scale)

    ratio = (d_max / d_min) ** (1.0 / (n_points - 1))
    grid = [d_min * ratio**i for i in range(n_points)]
    grid[-1] = d_max

    points: list[BranchPoint] = []
    gaps: list[float] = []
    extras: list[tuple[float, float]] = []

    if threads > 1:
        def solve_cold(d):
            return _solve_point(spec, d, cfg, None, pred)

        with ThreadPoolExecutor(max_workers=threads) as pool:
            all_roots = list(pool.map(solve_cold, grid))
        for d, roots in zip(grid, all_roots):
            if not roots:
                gaps.append(d)
                continue
            lam, rest = _pick_root(roots, None)
            extras.extend((d, r) for r in rest)
            points.append(_make_point(spec, d, lam, cfg, True))
    else:
        seed = None
        for d in grid:
            roots = _solve_point(spec, d, cfg, seed, pred)
            if not roots:
                gaps.append(d)
                continue
            lam, rest = _pick_root(roots, seed)
            extras.extend((d, r) for r in rest)
            points.append(_make_point(spec, d, lam, cfg, True))
            seed = lam

    if len(gaps) > GAP_FRACTION_LIMIT * n_points:
        raise TracingFailureError(
            f"{len(gaps)}/{n_points} amplitudes have no lambda root")
    if len(points) < 4:
        raise TracingFailureError("too few resolved points to form a branch")

    points = _refine_jumps(spec, points, cfg, pred)
    branch = Branch(points=points, gaps=gaps, extra_roots=extras)

    if refine_folds:
        _refine_folds(spec, branch, cfg, pred)
    branch.folds = detect_folds(branch)
    try:
        branch.lambda_at_zero, branch.lambda_at_infinity = asymptote_estimates(branch)
    except InvalidInputError:
        pass  # short span traces keep asymptotes unset
    return branch


def _refine_jumps(spec, points, cfg, pred):
    work = list(points)
    depth = {id(p): 0 for p in work}
    i = 0
    while i < len(work) - 1:
        a, b = work[i], work[i + 1]
        level = max(depth[id(a)], depth[id(b)])
        jump = abs(b.lam - a.lam) / min(a.lam, b.lam)
        if jump > JUMP_REL and level < MAX_REFINE_DEPTH:
            d_mid = math.sqrt(a.d * b.d)
            seed = math.sqrt(a.lam * b.lam)
            roots = _solve_point(spec, d_mid, cfg, seed, pred)
            if roots:
                lam, _ = _pick_root(roots, seed)
                mid = _make_point(spec, d_mid, lam, cfg, False)
                depth[id(mid)] = level + 1
                work.insert(i + 1, mid)
                continue  # re-examine the left sub-interval
        i += 1
    return work


def _refine_folds(spec, branch, cfg, pred, log_tol=2e-3):
    """Golden-section localization of each discrete fold apex in log-d."""
    gr = (math.sqrt(5.0) - 1.0) / 2.0
    folds = detect_folds(branch)
    inserted = []
    for fold in folds:
        idx = fold.index
        if idx <= 0 or idx >= len(branch.points) - 1:
            continue
        sign = 1.0 if fold.kind == "max" else -1.0
        a = math.log(branch.points[idx - 1].d)
        b = math.log(branch.points[idx + 1].d)
        seed = branch.points[idx].lam

        cache = {}

        def lam_at(ld):
            if ld not in cache:
                roots = _solve_point(spec, math.exp(ld), cfg, seed, pred)
                cache[ld] = roots[0] if roots else None
            return cache[ld]

        x1 = b - gr * (b - a)
        x2 = a + gr * (b - a)
        f1, f2 = lam_at(x1), lam_at(x2)
        while (b - a) > log_tol and f1 is not None and f2 is not None:
            if sign * f1 >= sign * f2:
                b, x2, f2 = x2, x1, f1
                x1 = b - gr * (b - a)
                f1 = lam_at(x1)
            else:
                a, x1, f1 = x1, x2, f2
                x2 = a + gr * (b - a)
                f2 = lam_at(x2)
        for ld, lam in cache.items():
            if lam is not None:
                inserted.append(_make_point(spec, math.exp(ld), lam, cfg, False))
    if inserted:
        merged = {p.d: p for p in branch.points}
        for p in inserted:
            merged.setdefault(p.d, p)
        branch.points = [merged[d] for d in sorted(merged)]
