"""Pipelines built from the model and the root finders: bound spectra,
capture depths, resonance searches and trajectories, delay curves and the
resonance/delay comparison."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import core, rootfind
from .core import Branch, Classification, DelayCurve, DotParams, ResonancePoint, StateKind
from .errors import DiracDotError, DomainError, IndeterminatePhase, TrackLost, UnmatchedResonance

log = logging.getLogger(__name__)

EPS_POINTS = 2000
DELAY_POINTS = 800
TRAJECTORY_STEP = 0.05
BRANCH_JUMP = 0.1
WINDOW_MARGIN = 1e-9
RESIDUAL_CHECK = 1e-9


def two_decimals(x: float) -> float:
    """Cut a depth to two decimals (toward zero), as depths are quoted."""
    return math.trunc(round(x * 100.0, 6)) / 100.0


# ---------------------------------------------------------------------------
# result types


@dataclass(frozen=True)
class SpectrumBranch:
    v: np.ndarray
    eps: np.ndarray
    residual: np.ndarray


@dataclass(frozen=True)
class SpectrumResult:
    mu: float
    ell: int
    branches: list
    critical_depths: list
    supercritical_depths: list
    gaps: list = field(default_factory=list)

    def coexisting(self) -> int:
        """Largest number of branches present at a single v."""
        counts = {}
        for br in self.branches:
            for v in br.v:
                counts[float(v)] = counts.get(float(v), 0) + 1
        return max(counts.values(), default=0)


@dataclass(frozen=True)
class CaptureDepth:
    v: float
    kind: StateKind
    p_inner: float
    residual: float


@dataclass(frozen=True)
class CaptureEvent:
    """Depth at which a tracked state sits on a continuum threshold.

    ``v`` is the depth solved from the threshold condition and ``v_grid``
    the grid value closest to it.
    """

    v: float
    kind: StateKind
    v_grid: float
    eps: float


@dataclass
class ResonanceTrajectory:
    mu: float
    ell: int
    points: list
    capture_events: list
    classifications: list
    lost: bool = False
    message: str = ""

    def resonance_points(self) -> list:
        return [
            ResonancePoint(p.param_value, p.root, p.residual, c)
            for p, c in zip(self.points, self.classifications)
        ]


@dataclass(frozen=True)
class ConsistencyRow:
    eps_R: float
    eps_I: float
    delay_peak_eps: float
    delay_peak_value: float
    gap: float


@dataclass(frozen=True)
class ConsistencyReport:
    mu: float
    ell: int
    v: float
    rows: list


# ---------------------------------------------------------------------------
# bound states


def _bound_roots(params: DotParams, points: int = EPS_POINTS, lo: float | None = None, hi: float | None = None):
    mu = params.mu
    lo = -mu + WINDOW_MARGIN if lo is None else max(lo, -mu + WINDOW_MARGIN)
    hi = mu - WINDOW_MARGIN if hi is None else min(hi, mu - WINDOW_MARGIN)
    if not lo < hi:
        return []

    def f(e):
        return core.bound_residual(params, e)

    brackets = rootfind.bracket_roots(f, lo, hi, points - 1, vectorized=True)
    return [float(rootfind.refine_root(f, b, tol=1e-15)) for b in brackets]


def bound_states(params: DotParams, points: int = EPS_POINTS) -> list:
    """All bound-state energies in the window at one depth, ascending."""
    if params.massless:
        raise DomainError("massive bound states need mu > 0")
    return sorted(_bound_roots(params, points))


def _threshold_roots(fn, p_max: float, step: float = 0.05) -> list:
    if p_max <= step:
        return []
    n = max(4, int(math.ceil(p_max / step)))
    brackets = rootfind.bracket_roots(fn, 1e-6, p_max, n, vectorized=True)
    return [float(rootfind.refine_root(fn, b, tol=1e-14)) for b in brackets]


def _critical_p(ell: int, mu: float, p_max: float) -> list:
    roots = _threshold_roots(lambda p: core.critical_residual(ell, mu, p), p_max)
    return ([0.0] if ell == 0 else []) + roots


def _supercritical_p(ell: int, p_max: float) -> list:
    return _threshold_roots(lambda p: core.supercritical_residual(ell, p), p_max)


def bound_spectrum(mu: float, ell: int, v_lo: float, v_hi: float, v_steps: int, eps_points: int = EPS_POINTS,
                   jump: float = BRANCH_JUMP) -> SpectrumResult:
    """Bound-state levels eps(v) over a range of depths.

    Roots at each depth come from a sign scan of the real bound residual
    on ``eps_points`` energies followed by Brent refinement; they are
    joined into branches by nearest energy at neighbouring depths.
    """
    if not mu > 0:
        raise DomainError("bound spectrum needs mu > 0")
    if not (v_lo < v_hi < 0):
        raise DomainError("need v_lo < v_hi < 0")
    if v_steps < 10:
        raise DomainError("need at least 10 depth steps")
    grid = np.linspace(v_lo, v_hi, v_steps)
    open_branches: list[list] = []
    closed: list[list] = []
    gaps = []
    for v in grid:
        params = DotParams(mu, float(v), ell)
        try:
            roots = _bound_roots(params, eps_points)
        except DiracDotError as exc:
            gaps.append((float(v), str(exc)))
            log.warning("bound scan failed at v=%.6g: %s", v, exc)
            closed.extend(open_branches)
            open_branches = []
            continue
        resid = [float(core.relative_residual(params, e, Branch.BOUND_SEARCH)) for e in roots]
        # a level closer to threshold than float resolution in eps allows
        # cannot meet the residual check; drop it and report the gap
        for e, r in zip(roots, resid):
            if not r <= RESIDUAL_CHECK:
                gaps.append((float(v), f"level at eps={e:.17g} fails residual check ({r:.2e})"))
        kept = [(e, r) for e, r in zip(roots, resid) if r <= RESIDUAL_CHECK]
        roots, resid = [e for e, _ in kept], [r for _, r in kept]
        unused = list(range(len(roots)))
        still_open = []
        for br in open_branches:
            last = br[-1][1]
            if unused:
                k = min(unused, key=lambda i: abs(roots[i] - last))
                if abs(roots[k] - last) <= jump:
                    br.append((float(v), roots[k], resid[k]))
                    unused.remove(k)
                    still_open.append(br)
                    continue
            closed.append(br)
        for k in unused:
            still_open.append([(float(v), roots[k], resid[k])])
        open_branches = still_open
    closed.extend(open_branches)
    closed.sort(key=lambda br: (br[0][0], br[0][1]))
    branches = [
        SpectrumBranch(np.array([p[0] for p in br]), np.array([p[1] for p in br]), np.array([p[2] for p in br]))
        for br in closed
    ]
    p_crit = math.sqrt(v_lo * v_lo - 2 * v_lo * mu)
    crit = [core.depth_for_root(StateKind.CRITICAL, mu, p) if p > 0 else 0.0 for p in _critical_p(ell, mu, p_crit)]
    sup = []
    if v_lo < -2 * mu:
        p_sup = math.sqrt(v_lo * v_lo + 2 * v_lo * mu)
        sup = [core.depth_for_root(StateKind.SUPERCRITICAL, mu, p) for p in _supercritical_p(ell, p_sup)]
    return SpectrumResult(mu, ell, branches, crit, sup, gaps)


def capture_depths(mu: float, ell: int, count: int = 3) -> list:
    """First ``count`` capture depths of each kind, shallowest first.

    For mu > 0 these are the critical depths (a level enters at eps = mu)
    and the supercritical depths (a level leaves at eps = -mu); for mu = 0
    the zero-energy bound-state depths.
    """
    if count < 1:
        raise DomainError("count must be >= 1")
    DotParams(mu, 0.0, ell)
    out = []
    p_max = 10.0 + 4.0 * count
    while True:
        if mu > 0:
            crit = _critical_p(ell, mu, p_max)
            sup = _supercritical_p(ell, p_max)
            if len(crit) >= count and len(sup) >= count:
                break
        else:
            found = _threshold_roots(lambda p: core.massless_bound_residual(ell, p), p_max)
            if len(found) >= count:
                break
        p_max *= 2
        if p_max > 5000:
            raise DomainError("capture depths beyond the supported range")
    if mu > 0:
        for p in crit[:count]:
            res = 0.0 if p == 0 else abs(core.critical_residual(ell, mu, p))
            v = 0.0 if p == 0 else core.depth_for_root(StateKind.CRITICAL, mu, p)
            out.append(CaptureDepth(v, StateKind.CRITICAL, p, res))
        for p in sup[:count]:
            out.append(CaptureDepth(core.depth_for_root(StateKind.SUPERCRITICAL, mu, p), StateKind.SUPERCRITICAL, p,
                                    abs(core.supercritical_residual(ell, p))))
    else:
        for p in found[:count]:
            out.append(CaptureDepth(core.depth_for_root(StateKind.MASSLESS_BOUND, 0.0, p), StateKind.MASSLESS_BOUND, p,
                                    abs(core.massless_bound_residual(ell, p))))
    out.sort(key=lambda c: -c.v)
    return out


# ---------------------------------------------------------------------------
# resonances


def _outgoing_grid(params: DotParams, re: np.ndarray, im: np.ndarray) -> np.ndarray:
    z = re[None, :] + 1j * im[:, None]
    rel = np.full(z.shape, np.inf)
    for branch, mask in ((Branch.OUTGOING_RIGHT, z.real > 0), (Branch.OUTGOING_LEFT, z.real < 0)):
        pts = z[mask]
        if not pts.size:
            continue
        try:
            rel[mask] = core.relative_residual(params, pts, branch)
        except DiracDotError:
            for idx in np.flatnonzero(mask.ravel()):
                try:
                    rel.flat[idx] = core.relative_residual(params, z.flat[idx], branch)
                except DiracDotError:
                    pass
    return z, rel


def _outgoing_root(params: DotParams, seed: complex, rel_tol: float = 1e-12) -> complex:
    """Complex root of the outgoing function with a tolerance scaled to the
    size of its two terms at the seed."""
    seed = complex(seed)
    t1, t2 = core._reduced_terms(params, np.array([seed]), core.outgoing_branch(seed))
    scale = float(abs(t1[0]) + abs(t2[0]))
    tol = rel_tol * scale if scale > 0 and math.isfinite(scale) else 1e-10
    radius = 10.0 * (abs(seed) + params.mu + abs(params.v))
    return rootfind.complex_root(lambda e: core.outgoing_function(params, e), seed, tol, radius=radius)


def polish_resonance(params: DotParams, seed: complex):
    """Converge a seed onto a root and classify it, or return None."""
    try:
        z = _outgoing_root(params, seed)
    except DiracDotError:
        return None
    return _as_point(params, z)


def _as_point(params: DotParams, z: complex):
    cls = core.classify(params, z)
    if cls is Classification.BOUND and not params.massless:
        z = complex(z.real, 0.0)
        res = float(core.relative_residual(params, z.real, Branch.BOUND_SEARCH))
    elif z.real == 0:
        return None
    else:
        res = float(core.relative_residual(params, z, core.outgoing_branch(z)))
    if not res <= RESIDUAL_CHECK:
        return None
    return ResonancePoint(params.v, z, res, cls)


def find_resonances(params: DotParams, re_range=None, im_range=(-3.0, 3.0), shape=(161, 81),
                    threshold: float = 0.3) -> list:
    """Complex roots of the outgoing matching condition in a rectangle.

    Local minima of the relative residual on a grid seed the complex root
    iteration; the lower half-plane is scanned first.  Massive bound
    states in the window are added from the real-axis search.  Results are
    sorted by real part.
    """
    mu, v = params.mu, params.v
    if re_range is None:
        span = abs(v) + mu
        re_range = (-span, span) if span > 0 else (-1.0, 1.0)
    found: list[ResonancePoint] = []

    def add(point):
        if point is None:
            return
        for q in found:
            if abs(q.eps - point.eps) <= 1e-7 * (1 + abs(point.eps)):
                return
        found.append(point)

    nre, nim = shape
    re = np.linspace(re_range[0], re_range[1], nre)
    re = re[re != 0]
    halves = []
    lo_im, hi_im = im_range
    if lo_im < 0:
        halves.append(np.linspace(lo_im, min(hi_im, 0.0), nim // 2 + 1))
    if hi_im > 0:
        halves.append(np.linspace(max(lo_im, 0.0), hi_im, nim // 2 + 1))
    for im in halves:
        z, rel = _outgoing_grid(params, re, im)
        for i in range(z.shape[0]):
            for k in range(z.shape[1]):
                value = rel[i, k]
                if not value < threshold:
                    continue
                window = rel[max(i - 1, 0): i + 2, max(k - 1, 0): k + 2]
                if value <= window.min():
                    add(polish_resonance(params, complex(z[i, k])))
    if not params.massless:
        for e in _bound_roots(params):
            add(ResonancePoint(v, complex(e, 0.0), float(core.relative_residual(params, e, Branch.BOUND_SEARCH)),
                               Classification.BOUND))
    lo_re, hi_re = re_range
    found = [p for p in found if lo_re <= p.eps.real <= hi_re and lo_im <= p.eps.imag <= hi_im]
    found.sort(key=lambda p: (p.eps.real, p.eps.imag))
    return found


def leading_resonance(points: list):
    """Narrowest resonance with positive real part, or None."""
    cands = [p for p in points if p.classification is Classification.RESONANCE and p.eps.real > 0]
    if not cands:
        return None
    return min(cands, key=lambda p: (abs(p.eps.imag), p.eps.real))


def _tracking_solver(mu: float, ell: int, jump: float):
    def solve(v, seed):
        params = DotParams(mu, v, ell)
        if mu > 0 and -mu < seed.real < mu and abs(seed.imag) < jump:
            lo, hi = seed.real - jump, seed.real + jump
            roots = _bound_roots(params, 200, lo, hi)
            if roots:
                best = min(roots, key=lambda e: abs(e - seed.real))
                if abs(best - seed) <= jump:
                    return complex(best, 0.0)
        return _outgoing_root(params, seed)

    return solve


def _point_residual(mu: float, ell: int):
    def residual(v, z):
        params = DotParams(mu, v, ell)
        if mu > 0 and z.imag == 0 and -mu < z.real < mu:
            return float(core.relative_residual(params, z.real, Branch.BOUND_SEARCH))
        return float(core.relative_residual(params, z, core.outgoing_branch(z)))

    return residual


def _refine_event(mu: float, ell: int, kind: StateKind, v_a: float, v_b: float):
    """Depth between two grid values at which the threshold condition holds."""
    if kind is StateKind.CRITICAL:
        def p_of(v):
            return math.sqrt(max(v * v - 2 * v * mu, 0.0))

        def fn(p):
            return core.critical_residual(ell, mu, p)
    elif kind is StateKind.SUPERCRITICAL:
        def p_of(v):
            return math.sqrt(max(v * v + 2 * v * mu, 0.0))

        def fn(p):
            return core.supercritical_residual(ell, p)
    else:
        def p_of(v):
            return max(-v, 0.0)

        def fn(p):
            return core.massless_bound_residual(ell, p)
    lo, hi = sorted((p_of(v_a), p_of(v_b)))
    lo = max(lo, 1e-9)
    if hi <= lo:
        return None
    try:
        brackets = rootfind.bracket_roots(fn, lo, hi, 16, vectorized=True)
        if not brackets:
            return None
        p = rootfind.refine_root(fn, brackets[0], tol=1e-14)
    except DiracDotError:
        return None
    return core.depth_for_root(kind, mu, p)


def _events(mu: float, ell: int, points: list, classes: list) -> list:
    events = []
    for k in range(1, len(points)):
        a, b = points[k - 1], points[k]
        ca, cb = classes[k - 1], classes[k]
        kind = None
        if mu > 0:
            if (ca is Classification.BOUND) != (cb is Classification.BOUND):
                outside = a.root if cb is Classification.BOUND else b.root
                kind = StateKind.CRITICAL if outside.real > 0 else StateKind.SUPERCRITICAL
        elif np.sign(a.root.real) != np.sign(b.root.real):
            kind = StateKind.MASSLESS_BOUND
        if kind is None:
            continue
        v = _refine_event(mu, ell, kind, a.param_value, b.param_value)
        nearest = min((a.param_value, b.param_value), key=lambda g: abs(g - v)) if v is not None else None
        if v is None:
            # fall back to the grid value closest to the threshold
            target = {StateKind.CRITICAL: mu, StateKind.SUPERCRITICAL: -mu}.get(kind, 0.0)
            nearest = min((a, b), key=lambda p: abs(p.root - target)).param_value
            v = nearest
        eps = {StateKind.CRITICAL: mu, StateKind.SUPERCRITICAL: -mu}.get(kind, 0.0)
        events.append(CaptureEvent(v, kind, nearest, eps))
    return events


def track_resonance(mu: float, ell: int, v_grid, seed: complex, jump: float = rootfind.JUMP) -> ResonanceTrajectory:
    """Follow one root along the depth grid, switching between outgoing
    resonances and real bound states as it crosses the thresholds."""
    solve = _tracking_solver(mu, ell, jump)
    residual = _point_residual(mu, ell)
    lost, message = False, ""
    try:
        points = rootfind.track(None, v_grid, complex(seed), jump=jump, solve=solve, residual_fn=residual)
    except TrackLost as exc:
        points = exc.partial
        lost, message = True, str(exc)
    except DiracDotError as exc:
        points, lost, message = [], True, str(exc)
    classes = [core.classify(DotParams(mu, p.param_value, ell), p.root) for p in points]
    events = _events(mu, ell, points, classes)
    return ResonanceTrajectory(mu, ell, points, events, classes, lost, message)


def resonance_trajectories(mu: float, ell: int, v_grid, seeds) -> list:
    """One trajectory per seed; a lost track does not stop the others."""
    out = []
    for seed in seeds:
        traj = track_resonance(mu, ell, v_grid, seed)
        if traj.lost:
            log.warning("track from seed %s lost: %s", seed, traj.message)
        out.append(traj)
    return out


def depth_grid(v_start: float, v_stop: float, step: float = TRAJECTORY_STEP) -> np.ndarray:
    """Depth values from v_start to v_stop inclusive with spacing step."""
    n = int(round(abs(v_stop - v_start) / step))
    return np.round(np.linspace(v_start, v_stop, n + 1), 12)


# ---------------------------------------------------------------------------
# scattering


def _raw_phase(params: DotParams, energies: np.ndarray):
    """Raw phase with indeterminate points interpolated; returns the
    phase and the flagged indices."""
    try:
        return core.phase_shift_raw(params, energies), ()
    except IndeterminatePhase:
        pass
    raw = np.full(energies.size, np.nan)
    for k, e in enumerate(energies):
        try:
            raw[k] = core.phase_shift_raw(params, e)
        except IndeterminatePhase:
            pass
    bad = np.flatnonzero(np.isnan(raw))
    good = np.flatnonzero(~np.isnan(raw))
    if good.size < 2:
        raise IndeterminatePhase("phase indeterminate on almost the whole grid")
    raw[bad] = np.interp(energies[bad], energies[good], raw[good])
    return raw, tuple(int(k) for k in bad)


def _reference_grid(params: DotParams, eps_hi: float) -> np.ndarray:
    """Energies from eps_hi up to where the phase is close to its limit.

    A fine uniform part covers the region where narrow resonances can
    sit, a geometric part climbs to the reference energy.
    """
    scale = abs(params.v) + params.mu
    e1 = max(eps_hi, 2 * scale + 10.0)
    e2 = max(e1, 100.0 + 10.0 * scale)
    fine = np.linspace(eps_hi, e1, max(2, int(math.ceil((e1 - eps_hi) / 0.005)) + 1))
    coarse = np.geomspace(e1, e2, 400)[1:] if e2 > e1 else np.array([])
    return np.concatenate([fine[1:], coarse])


def delay_scan(mu: float, ell: int, v: float, eps_lo: float, eps_hi: float, steps: int = DELAY_POINTS,
               anchor: float | None = None) -> DelayCurve:
    """Phase shift and Wigner delay on a uniform energy grid.

    By default the phase is unwrapped continuously from a high reference
    energy down to the grid, starting from the branch closest to -v (its
    high-energy limit).  With ``anchor`` given, the top grid point is
    instead put on the branch closest to ``anchor``.  Points where the
    phase is indeterminate are filled by linear interpolation and listed
    in ``flagged``.
    """
    params = DotParams(mu, v, ell)
    lower = 0.0 if params.massless else mu
    if not eps_lo > lower:
        raise DomainError(f"eps_lo must exceed {lower}")
    if not eps_hi > eps_lo:
        raise DomainError("need eps_hi > eps_lo")
    if steps < 100:
        raise DomainError("delay curves need at least 100 points")
    energies = np.linspace(eps_lo, eps_hi, steps)
    raw, flagged = _raw_phase(params, energies)
    if anchor is None:
        ref, _ = _raw_phase(params, _reference_grid(params, eps_hi))
        full = core.unwrap_phase(np.concatenate([raw, ref]), anchor=-v)
        unwrapped = full[:steps]
    else:
        unwrapped = core.unwrap_phase(raw, anchor=anchor)
    return core.wigner_delay(DelayCurve(energies, raw, unwrapped, None, flagged))


def delay_maxima(curve: DelayCurve) -> np.ndarray:
    """Indices of interior strict local maxima of the delay."""
    tau = np.asarray(curve.delay)
    inner = (tau[1:-1] > tau[:-2]) & (tau[1:-1] >= tau[2:])
    return np.flatnonzero(inner) + 1


def resonances_for_curve(params: DotParams, curve: DelayCurve) -> list:
    """Lower half-plane resonances near the energy span of a delay curve."""
    lo, hi = float(curve.energies[0]), float(curve.energies[-1])
    return find_resonances(params, re_range=(max(lo - 1.0, 1e-3), hi + 1.0), im_range=(-3.0, 0.0))


def consistency_report(mu: float, ell: int, v: float, resonances: list, curve: DelayCurve) -> ConsistencyReport:
    """Pair each resonance inside the curve's span with the nearest delay
    maximum.

    Raises
    ------
    UnmatchedResonance
        If a resonance lies in the span but the curve has no maximum.
    """
    lo, hi = float(curve.energies[0]), float(curve.energies[-1])
    peaks = delay_maxima(curve)
    rows = []
    for r in resonances:
        if r.classification is not Classification.RESONANCE:
            continue
        e = complex(r.eps)
        if not lo <= e.real <= hi:
            continue
        if peaks.size == 0:
            raise UnmatchedResonance(f"no delay maximum in [{lo:.6g}, {hi:.6g}] for resonance {e}")
        k = peaks[np.argmin(np.abs(curve.energies[peaks] - e.real))]
        peak = float(curve.energies[k])
        rows.append(ConsistencyRow(e.real, e.imag, peak, float(curve.delay[k]), abs(e.real - peak)))
    rows.sort(key=lambda row: row.eps_R)
    return ConsistencyReport(mu, ell, v, rows)


# ---------------------------------------------------------------------------
# spinors


@dataclass(frozen=True)
class SpinorProfile:
    params: DotParams
    eps: complex
    kind: StateKind
    points: list


def spinor_profile(params: DotParams, eps, kind, rho_grid) -> SpinorProfile:
    """Radial spinor on a grid of radii.

    When ``eps`` is None it is taken from the state kind: +mu or -mu for
    critical and supercritical states, 0 for massless bound states and the
    highest level in the window for massive bound states.
    """
    kind = StateKind(kind)
    if eps is None:
        if kind is StateKind.CRITICAL:
            eps = params.mu
        elif kind is StateKind.SUPERCRITICAL:
            eps = -params.mu
        elif kind is StateKind.MASSLESS_BOUND:
            eps = 0.0
        elif kind is StateKind.BOUND:
            levels = bound_states(params)
            if not levels:
                raise DomainError(f"no bound state at v = {params.v}")
            eps = levels[-1]
        else:
            raise DomainError("scattering spinors need an energy")
    points = [core.radial_spinor(params, eps, float(r), kind) for r in rho_grid]
    return SpinorProfile(params, complex(eps), kind, points)
