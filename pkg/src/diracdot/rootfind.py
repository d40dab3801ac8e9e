"""Real bracketing and refinement, complex root iteration and continuation
of a root in a real parameter."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DiracDotError, EscapedRegion, EvaluationError, NoConvergence, TrackLost

MAX_ITER = 200
JUMP = 0.5
MAX_HALVINGS = 6


@dataclass(frozen=True)
class Bracket:
    lo: float
    hi: float
    f_lo: float
    f_hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError("bracket needs lo < hi")
        if not self.f_lo * self.f_hi < 0:
            raise ValueError("bracket needs a sign change")


@dataclass(frozen=True)
class TrackedRoot:
    """Root of the family at one grid value of the parameter.

    ``substeps`` counts the rejected attempts (step halvings) needed to
    reach this grid value.
    """

    param_value: float
    root: complex
    residual: float
    step_accepted: bool
    substeps: int = 0


def bracket_roots(f: Callable, lo: float, hi: float, subdivisions: int, vectorized: bool = False) -> list[Bracket]:
    """Brackets around every sign change of f on a uniform grid.

    Parameters
    ----------
    vectorized : bool
        If True, f is called once with the whole grid array.
    """
    if not lo < hi:
        raise ValueError("need lo < hi")
    if subdivisions < 2:
        raise ValueError("need at least two subdivisions")
    grid = np.linspace(lo, hi, subdivisions + 1)
    try:
        if vectorized:
            values = np.asarray(f(grid), dtype=float)
        else:
            values = np.array([float(f(x)) for x in grid])
    except Exception as exc:
        raise EvaluationError(f"function raised during bracketing: {exc}") from exc
    if not np.all(np.isfinite(values)):
        raise EvaluationError("function is not finite on the bracketing grid")
    sign = np.sign(values)
    out = []
    for k in range(len(grid) - 1):
        if sign[k] * sign[k + 1] < 0:
            out.append(Bracket(grid[k], grid[k + 1], values[k], values[k + 1]))
        elif sign[k + 1] == 0 and k + 2 < len(grid) and sign[k] * sign[k + 2] < 0:
            # exact zero on an interior grid point
            out.append(Bracket(grid[k], grid[k + 2], values[k], values[k + 2]))
    return out


def refine_root(f: Callable, b: Bracket, tol: float = 1e-12, maxiter: int = MAX_ITER) -> float:
    """Brent's method inside a bracket.

    Stops when the enclosing interval is narrower than ``tol`` or f is
    exactly zero.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    a, fa = b.lo, b.f_lo
    c, fc = b.hi, b.f_hi
    x, fx = c, fc
    d = e = c - a
    eps = np.finfo(float).eps
    for _ in range(maxiter):
        if fx * fc > 0:
            c, fc = a, fa
            d = e = x - a
        if abs(fc) < abs(fx):
            a, fa = x, fx
            x, fx = c, fc
            c, fc = a, fa
        tol1 = 2 * eps * abs(x) + 0.5 * tol
        m = 0.5 * (c - x)
        if abs(m) <= tol1 or fx == 0:
            return x
        if abs(e) >= tol1 and abs(fa) > abs(fx):
            s = fx / fa
            if a == c:
                p, q = 2 * m * s, 1 - s
            else:
                q0, r = fa / fc, fx / fc
                p = s * (2 * m * q0 * (q0 - r) - (x - a) * (r - 1))
                q = (q0 - 1) * (r - 1) * (s - 1)
            if p > 0:
                q = -q
            p = abs(p)
            if 2 * p < min(3 * m * q - abs(tol1 * q), abs(e * q)):
                e, d = d, p / q
            else:
                d = e = m
        else:
            d = e = m
        a, fa = x, fx
        x = x + (d if abs(d) > tol1 else math.copysign(tol1, m))
        fx = float(f(x))
    raise NoConvergence(f"Brent refinement did not converge in {maxiter} iterations")


def _call(f, z):
    try:
        value = complex(f(z))
    except DiracDotError as exc:
        raise NoConvergence(f"function failed at {z}: {exc}") from exc
    if not cmath.isfinite(value):
        raise NoConvergence(f"function not finite at {z}")
    return value


def _newton(f, z, fz, tol, radius, maxiter=60):
    for _ in range(maxiter):
        if abs(fz) <= tol:
            return z
        h = 1e-7 * (1 + abs(z))
        deriv = (_call(f, z + h) - _call(f, z - h)) / (2 * h)
        if deriv == 0:
            break
        full = fz / deriv
        lam = 1.0
        for _ in range(12):
            trial = z - lam * full
            if radius is not None and abs(trial) > radius:
                lam *= 0.5
                continue
            f_trial = _call(f, trial)
            if abs(f_trial) < abs(fz):
                z, fz = trial, f_trial
                break
            lam *= 0.5
        else:
            break
    if abs(fz) <= tol:
        return z
    raise NoConvergence(f"complex root not found near {z} (|f| = {abs(fz):.3g})")


def complex_root(f: Callable, seed: complex, tol: float = 1e-10, radius: float | None = None,
                 maxiter: int = 100, h: float = 1e-3) -> complex:
    """Muller iteration for an analytic function, Newton fallback.

    Parameters
    ----------
    f : callable
        Complex function of one complex variable.
    seed : complex
        Starting point; Muller starts from seed and seed +- h.
    tol : float
        Convergence when ``|f(z)| <= tol``.
    radius : float, optional
        Raise EscapedRegion when an iterate leaves ``|z| <= radius``.
    """
    seed = complex(seed)
    x0, x1, x2 = seed - h, seed + h, seed
    f0, f1, f2 = _call(f, x0), _call(f, x1), _call(f, x2)
    for x, fx in ((x2, f2), (x1, f1), (x0, f0)):
        if abs(fx) <= tol:
            return x
    for _ in range(maxiter):
        q = (x2 - x1) / (x1 - x0)
        a = q * f2 - q * (1 + q) * f1 + q * q * f0
        b = (2 * q + 1) * f2 - (1 + q) ** 2 * f1 + q * q * f0
        c = (1 + q) * f2
        disc = cmath.sqrt(b * b - 4 * a * c)
        den = b + disc if abs(b + disc) >= abs(b - disc) else b - disc
        if den == 0:
            break
        x3 = x2 - (x2 - x1) * 2 * c / den
        if radius is not None and abs(x3) > radius:
            raise EscapedRegion(f"iterate {x3} left |z| <= {radius:.6g}")
        f3 = _call(f, x3)
        if abs(f3) <= tol:
            return x3
        if abs(x3 - x2) <= 4 * np.finfo(float).eps * (1 + abs(x3)):
            x2, f2 = x3, f3
            break
        x0, x1, x2 = x1, x2, x3
        f0, f1, f2 = f1, f2, f3
    best, f_best = min(((x0, f0), (x1, f1), (x2, f2)), key=lambda t: abs(t[1]))
    return _newton(f, best, f_best, tol, radius)


def track(f_family: Callable, v_grid, seed: complex, tol: float = 1e-10, jump: float = JUMP,
          max_halvings: int = MAX_HALVINGS, solve: Callable | None = None,
          residual_fn: Callable | None = None) -> list[TrackedRoot]:
    """Follow a root of f_family(v, z) along v_grid.

    Each new root is seeded by linear extrapolation from the previous two
    accepted roots.  A step whose root moves by more than ``jump`` is
    rejected and retried with half the parameter step, at most
    ``max_halvings`` times per grid interval.

    Parameters
    ----------
    solve : callable, optional
        ``solve(v, seed)`` returning a root; defaults to ``complex_root`` on
        ``f_family(v, .)``.
    residual_fn : callable, optional
        ``residual_fn(v, z)`` stored as the residual; defaults to
        ``|f_family(v, z)|``.

    Raises
    ------
    TrackLost
        When halving is exhausted.  The roots found so far are attached
        as ``exc.partial``.
    """
    grid = [float(v) for v in v_grid]
    if len(grid) > 1:
        diffs = np.diff(grid)
        if not (np.all(diffs > 0) or np.all(diffs < 0)):
            raise ValueError("v_grid must be strictly monotone")

    if solve is None:
        def solve(v, z0):
            return complex_root(lambda z: f_family(v, z), z0, tol)
    if residual_fn is None:
        def residual_fn(v, z):
            return abs(complex(f_family(v, z)))

    z = solve(grid[0], complex(seed))
    out = [TrackedRoot(grid[0], z, float(residual_fn(grid[0], z)), True, 0)]
    hist = [(grid[0], z)]
    for target in grid[1:]:
        v_cur, z_cur = hist[-1]
        step = target - v_cur
        rejected = 0
        while v_cur != target:
            v_try = target if abs(target - v_cur) <= abs(step) * (1 + 1e-12) else v_cur + step
            if len(hist) >= 2:
                (v_a, z_a), (v_b, z_b) = hist[-2], hist[-1]
                z_seed = z_b + (z_b - z_a) * (v_try - v_b) / (v_b - v_a)
            else:
                z_seed = z_cur
            try:
                z_new = solve(v_try, z_seed)
                ok = abs(z_new - z_cur) <= jump
            except DiracDotError:
                ok = False
            if ok:
                v_cur, z_cur = v_try, z_new
                hist.append((v_cur, z_cur))
                continue
            rejected += 1
            if rejected > max_halvings:
                err = TrackLost(f"lost the root between v = {v_cur:.6g} and {target:.6g}")
                err.partial = out
                raise err
            step /= 2
        out.append(TrackedRoot(target, z_cur, float(residual_fn(target, z_cur)), True, rejected))
    return out
