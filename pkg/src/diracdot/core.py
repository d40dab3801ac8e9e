"""Dirac particle in a circular step well: energies, momenta, matching
conditions, phase shifts, Wigner delays and radial spinors.

Everything is in natural units: radius rho = r/R, energy eps = E R/(hbar vF),
depth v = V0 R/(hbar vF) and mass mu = m vF R/hbar.  The well occupies
rho < 1 and a well has v < 0.

Most functions accept a scalar energy or an array of energies and return
a value of the same form.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import specfun
from .errors import BranchError, DomainError, IndeterminatePhase, MatchError, SingularArgument, UnwrapError

ROOT_TOL = 1e-10
MATCH_TOL = 1e-6
PHASE_FLOOR = 1e-13


class Branch(str, enum.Enum):
    BOUND_SEARCH = "BoundSearch"
    OUTGOING_RIGHT = "OutgoingRight"
    OUTGOING_LEFT = "OutgoingLeft"
    SCATTERING_REAL = "ScatteringReal"


class StateKind(str, enum.Enum):
    BOUND = "Bound"
    CRITICAL = "Critical"
    SUPERCRITICAL = "Supercritical"
    SCATTERING = "Scattering"
    MASSLESS_BOUND = "MasslessBound"


class Classification(str, enum.Enum):
    RESONANCE = "Resonance"
    BOUND = "Bound"
    CRITICAL = "Critical"
    SUPERCRITICAL = "Supercritical"


class Region(str, enum.Enum):
    INNER = "Inner"
    OUTER = "Outer"


@dataclass(frozen=True)
class DotParams:
    """Dimensionless dot configuration.

    Parameters
    ----------
    mu : float
        Mass, ``mu >= 0``; ``mu == 0`` selects the massless mode.
    v : float
        Well depth, negative for an attractive well.
    ell : int
        Orbital momentum of the upper spinor component.  Massive channels
        need ``ell >= 0``.
    """

    mu: float
    v: float
    ell: int

    def __post_init__(self):
        if not (math.isfinite(self.mu) and self.mu >= 0):
            raise DomainError(f"mu must be finite and >= 0, got {self.mu}")
        if not math.isfinite(self.v):
            raise DomainError(f"v must be finite, got {self.v}")
        if int(self.ell) != self.ell:
            raise DomainError(f"ell must be an integer, got {self.ell}")
        object.__setattr__(self, "ell", int(self.ell))
        if self.mu > 0 and self.ell < 0:
            raise DomainError("massive channels require ell >= 0")
        if self.ell > specfun.MAX_ORDER - 1 or self.ell < -specfun.MAX_ORDER:
            raise DomainError(f"ell = {self.ell} outside the supported order range")

    @property
    def massless(self) -> bool:
        return self.mu == 0

    @property
    def j(self) -> float:
        """Total angular momentum ell + 1/2."""
        return self.ell + 0.5

    def with_v(self, v: float) -> "DotParams":
        return DotParams(self.mu, v, self.ell)


@dataclass(frozen=True)
class ChannelEnergies:
    eps_i_plus: complex
    eps_i_minus: complex
    eps_o_plus: complex
    eps_o_minus: complex
    p_i: complex
    p_o: complex
    branch_tag: Branch


@dataclass(frozen=True)
class RadialSpinor:
    phi1: complex
    phi2: complex
    rho: float
    region: Region
    coeffs: dict = field(default_factory=dict)


@dataclass(frozen=True)
class DelayCurve:
    """Phase shift and Wigner delay on a real energy grid.

    ``flagged`` lists grid indices whose raw phase was indeterminate and
    has been interpolated from the neighbours.
    """

    energies: np.ndarray
    raw_phase: np.ndarray
    unwrapped_phase: np.ndarray | None = None
    delay: np.ndarray | None = None
    flagged: tuple = ()


@dataclass(frozen=True)
class ResonancePoint:
    v: float
    eps: complex
    residual: float
    classification: Classification


# ---------------------------------------------------------------------------
# units


def to_natural_units(E, V0, R, m, vF, hbar):
    """Convert physical energy, depth and mass to natural units.

    Returns
    -------
    (eps, v, mu) : tuple of float
    """
    for name, value in (("R", R), ("vF", vF), ("hbar", hbar)):
        if not value > 0:
            raise DomainError(f"{name} must be positive, got {value}")
    if m < 0:
        raise DomainError(f"mass must be non-negative, got {m}")
    scale = R / (hbar * vF)
    return E * scale, V0 * scale, m * vF * R / hbar


# ---------------------------------------------------------------------------
# momenta


def _scalar_or_array(x, scalar):
    if scalar:
        value = x.reshape(-1)[0]
        return complex(value) if np.iscomplexobj(x) else float(value)
    return x


def _energies(eps):
    arr = np.asarray(eps, dtype=complex)
    return arr, arr.ndim == 0


def _momenta(params: DotParams, eps: np.ndarray, branch: Branch):
    """Return (p_i, p_o) arrays for the branch, checking its preconditions."""
    branch = Branch(branch)
    mu, v = params.mu, params.v
    re, im = eps.real, eps.imag
    if branch is Branch.BOUND_SEARCH:
        if params.massless:
            raise BranchError("bound-state search needs mu > 0")
        if np.any(np.abs(im) > 0) or np.any(np.abs(re) >= mu):
            raise BranchError("bound-state search needs real eps with |eps| < mu")
        p_o = 1j * np.sqrt(mu * mu - re * re)
    elif branch is Branch.SCATTERING_REAL:
        if np.any(im != 0) or np.any(np.abs(re) < mu) or (params.massless and np.any(re == 0)):
            raise BranchError("real scattering needs real eps with |eps| >= mu (eps != 0)")
        p_o = np.sqrt(re * re - mu * mu) + 0j
    else:
        want = 1.0 if branch is Branch.OUTGOING_RIGHT else -1.0
        if np.any(np.sign(re) != want):
            side = "positive" if want > 0 else "negative"
            raise BranchError(f"{branch.value} needs Re eps {side}")
        if params.massless:
            p_o = want * eps
        else:
            p_o = np.sqrt(eps * eps - mu * mu)
    if params.massless:
        p_i = eps - v
    else:
        p_i = np.sqrt((eps - v) ** 2 - mu * mu)
    return p_i, p_o


def outgoing_branch(eps) -> Branch:
    """Outgoing branch selected by the sign of Re eps."""
    return Branch.OUTGOING_RIGHT if complex(eps).real > 0 else Branch.OUTGOING_LEFT


def channel(params: DotParams, eps, branch) -> ChannelEnergies:
    """Region energies and momenta at a single energy on a given branch."""
    arr, _ = _energies(eps)
    p_i, p_o = _momenta(params, arr.reshape(1), branch)
    e = complex(arr)
    mu, v = params.mu, params.v
    return ChannelEnergies(
        eps_i_plus=e - v + mu,
        eps_i_minus=e - v - mu,
        eps_o_plus=e + mu,
        eps_o_minus=e - mu,
        p_i=complex(p_i[0]),
        p_o=complex(p_o[0]),
        branch_tag=Branch(branch),
    )


# ---------------------------------------------------------------------------
# matching conditions


def secular_residual(params: DotParams, eps, branch):
    """Matching determinant at rho = 1 in multiplied-through form.

    Massive: eps_i+ J_l(p_i) p_o H_{l+1}(p_o) - eps_o+ H_l(p_o) p_i J_{l+1}(p_i).
    Massless: J_l(eps - v) H_{l+1}(s eps) - s J_{l+1}(eps - v) H_l(s eps)
    with s the sign of Re eps.
    """
    arr, scalar = _energies(eps)
    flat = arr.reshape(-1)
    p_i, p_o = _momenta(params, flat, branch)
    if np.any(p_o == 0):
        raise SingularArgument("p_o = 0 at the continuum threshold; use critical_residual")
    ell = params.ell
    j0, j1 = specfun.bessel_pair("J", ell, p_i)
    h0, h1 = specfun.bessel_pair("H1", ell, p_o)
    if params.massless:
        s = np.sign(flat.real)
        out = j0 * h1 - s * j1 * h0
    else:
        out = (flat - params.v + params.mu) * j0 * p_o * h1 - (flat + params.mu) * h0 * p_i * j1
    return _scalar_or_array(out.reshape(arr.shape), scalar)


def _jhat_pair(n: int, p: np.ndarray):
    """J_n(p)/p^n and J_{n+1}(p)/p^(n+1) for n >= 0, regular at p = 0."""
    j0, j1 = specfun.bessel_pair("J", n, p)
    tiny = np.abs(p) < 1e-6
    with np.errstate(divide="ignore", invalid="ignore"):
        a = j0 / p ** n
        b = j1 / p ** (n + 1)
    if tiny.any():
        q = p[tiny] ** 2 / 4
        a[tiny] = (1 - q / (n + 1)) / (2.0 ** n * math.factorial(n))
        b[tiny] = (1 - q / (n + 2)) / (2.0 ** (n + 1) * math.factorial(n + 1))
    return a, b


def _reduced_terms(params: DotParams, eps: np.ndarray, branch):
    """The two terms of the reduced matching function.

    Massive channels divide the determinant by eps_i+ p_i^l, which removes
    the trivial zero where the inner momentum vanishes and makes the result
    independent of the sign of p_i; multiplying by p_o^l keeps it finite
    at the continuum thresholds.  Massless channels are treated likewise
    with the appropriate powers of p_i and p_o.
    """
    p_i, p_o = _momenta(params, eps, branch)
    if np.any(p_o == 0):
        raise SingularArgument("p_o = 0 at the continuum threshold")
    ell = params.ell
    if params.massless:
        if ell >= 0:
            a, b = _jhat_pair(ell, p_i)
            inner0, inner1 = a, p_i * b
            power = ell + 1
        else:
            k = -ell - 1
            a, b = _jhat_pair(k, p_i)
            sign = -1.0 if ell % 2 else 1.0
            inner0, inner1 = sign * p_i * b, -sign * a
            power = k + 1
        h0, h1 = specfun.bessel_pair("H1", ell, p_o)
        scale = p_o ** power
        s = np.sign(eps.real)
        with np.errstate(over="ignore", invalid="ignore"):
            return inner0 * scale * h1, s * inner1 * scale * h0
    a, b = _jhat_pair(ell, p_i)
    h0, h1 = specfun.bessel_pair("H1", ell, p_o)
    scale = p_o ** ell
    # far from the physical region the products can overflow; callers reject non-finite values
    with np.errstate(over="ignore", invalid="ignore"):
        term1 = a * p_o * h1 * scale
        term2 = (eps - params.v - params.mu) * (eps + params.mu) * b * h0 * scale
    return term1, term2


def matching_function(params: DotParams, eps, branch):
    """Reduced matching function whose zeros are the physical roots.

    Same zeros as ``secular_residual`` away from the trivial points where
    the inner momentum vanishes, and regular at the continuum thresholds.
    This is the function handed to the root finders.
    """
    arr, scalar = _energies(eps)
    t1, t2 = _reduced_terms(params, arr.reshape(-1), branch)
    return _scalar_or_array((t1 - t2).reshape(arr.shape), scalar)


def relative_residual(params: DotParams, eps, branch):
    """|reduced matching function| relative to the size of its two terms."""
    arr, scalar = _energies(eps)
    t1, t2 = _reduced_terms(params, arr.reshape(-1), branch)
    denom = np.abs(t1) + np.abs(t2)
    with np.errstate(invalid="ignore", divide="ignore"):
        rel = np.where(denom > 0, np.abs(t1 - t2) / denom, 0.0)
    return _scalar_or_array(rel.reshape(arr.shape), scalar)


def outgoing_function(params: DotParams, eps):
    """Reduced matching function on the outgoing branch fixed by sign(Re eps)."""
    e = complex(eps)
    return matching_function(params, e, outgoing_branch(e))


def bound_residual(params: DotParams, eps):
    """Real-valued matching function for bound states, -mu < eps < mu.

    With p_o = i kappa the Hankel functions reduce to K_n(kappa) up to a
    common complex factor; dropping it (and scaling by kappa^l e^kappa)
    leaves a real function with the same zeros as the secular equation.
    """
    if params.massless:
        raise BranchError("bound-state residual needs mu > 0")
    x = np.asarray(eps, dtype=float)
    scalar = x.ndim == 0
    e = x.reshape(-1)
    mu, v, ell = params.mu, params.v, params.ell
    if np.any(np.abs(e) >= mu):
        raise BranchError("bound-state residual needs |eps| < mu")
    kappa = np.sqrt(mu * mu - e * e)
    ks = specfun.bessel_k_scaled(ell + 1, kappa)
    p_i = np.sqrt((e - v) ** 2 - mu * mu + 0j)
    a, b = _jhat_pair(ell, p_i)
    a, b = a.real, b.real
    scale = kappa ** ell
    out = scale * (a * kappa * ks[ell + 1] - (e - v - mu) * (e + mu) * b * ks[ell])
    return float(out[0]) if scalar else out.reshape(x.shape)


def critical_residual(ell: int, mu: float, p_inner):
    """l (mu + sqrt(mu^2 + p^2)) J_l(p) - mu p J_{l+1}(p)."""
    p = np.asarray(p_inner, dtype=float)
    if np.any(p <= 0):
        raise DomainError("p_inner must be positive")
    j0, j1 = specfun.bessel_pair("J", ell, p)
    out = (ell * (mu + np.sqrt(mu * mu + p * p)) * j0 - mu * p * j1).real
    return float(out) if out.ndim == 0 else out


def supercritical_residual(ell: int, p_inner):
    """J_l(p); its zeros fix the supercritical depths."""
    p = np.asarray(p_inner, dtype=float)
    if np.any(p <= 0):
        raise DomainError("p_inner must be positive")
    out = np.asarray(specfun.bessel_j(ell, p)).real
    return float(out) if out.ndim == 0 else out


def massless_bound_residual(ell: int, p_inner):
    """J_l(p) for l >= 0 and J_{l+1}(p) for l < 0."""
    p = np.asarray(p_inner, dtype=float)
    if np.any(p <= 0):
        raise DomainError("p_inner must be positive")
    order = ell if ell >= 0 else ell + 1
    out = np.asarray(specfun.bessel_j(order, p)).real
    return float(out) if out.ndim == 0 else out


def depth_for_root(kind, mu: float, p_inner: float) -> float:
    """Well depth at which a root p of the corresponding residual is reached."""
    kind = StateKind(kind)
    if kind is StateKind.MASSLESS_BOUND:
        if mu != 0:
            raise DomainError("MasslessBound depth needs mu = 0")
        return -float(p_inner)
    if mu <= 0:
        raise DomainError(f"{kind.value} depth needs mu > 0")
    root = math.sqrt(mu * mu + p_inner * p_inner)
    if kind is StateKind.CRITICAL:
        return min(mu - root, 0.0)
    if kind is StateKind.SUPERCRITICAL:
        return -mu - root
    raise DomainError(f"no closed-form depth for {kind.value}")


def classify(params: DotParams, eps, tol: float = 1e-9) -> Classification:
    """Classify a root of the matching condition by where it sits."""
    e = complex(eps)
    mu = params.mu
    if params.massless:
        return Classification.BOUND if abs(e) <= 1e-10 else Classification.RESONANCE
    if abs(e.imag) <= tol:
        if abs(e.real - mu) <= tol:
            return Classification.CRITICAL
        if abs(e.real + mu) <= tol:
            return Classification.SUPERCRITICAL
        if -mu < e.real < mu:
            return Classification.BOUND
    return Classification.RESONANCE


# ---------------------------------------------------------------------------
# scattering


def _phase_terms(params: DotParams, eps: np.ndarray):
    """Numerator and denominator of tan(delta), both reduced by eps_i+ p_i^l."""
    p_i, p_o = _momenta(params, eps + 0j, Branch.SCATTERING_REAL)
    p_o = p_o.real
    ell = params.ell
    jo0, jo1 = (np.real(x) for x in specfun.bessel_pair("J", ell, p_o))
    yo0, yo1 = (np.real(x) for x in specfun.bessel_pair("Y", ell, p_o))
    if params.massless:
        ji0, ji1 = (np.real(x) for x in specfun.bessel_pair("J", ell, p_i))
        num = ji0 * jo1 - ji1 * jo0
        den = ji0 * yo1 - ji1 * yo0
        return num, den
    a, b = _jhat_pair(ell, p_i)
    a, b = a.real, b.real
    cross = (eps - params.v - params.mu) * (eps + params.mu) * b
    num = p_o * a * jo1 - cross * jo0
    den = p_o * a * yo1 - cross * yo0
    return num, den


def _principal(angle):
    """Reduce modulo pi onto (-pi/2, pi/2]."""
    out = angle - np.pi * np.ceil(angle / np.pi - 0.5)
    return out


def phase_shift_raw(params: DotParams, eps):
    """Principal phase shift delta in (-pi/2, pi/2] at real energies.

    Raises
    ------
    IndeterminatePhase
        When numerator and denominator of tan(delta) both vanish.
    """
    x = np.asarray(eps, dtype=float)
    scalar = x.ndim == 0
    e = x.reshape(-1)
    lower = 0.0 if params.massless else params.mu
    if np.any(e <= lower):
        raise DomainError(f"phase shift needs eps > {lower}")
    num, den = _phase_terms(params, e)
    bad = (np.abs(num) < PHASE_FLOOR) & (np.abs(den) < PHASE_FLOOR)
    if bad.any():
        err = IndeterminatePhase(f"phase indeterminate at eps = {e[bad][0]:.15g}")
        err.indices = np.flatnonzero(bad)
        raise err
    delta = _principal(np.arctan2(num, den))
    return float(delta[0]) if scalar else delta.reshape(x.shape)


def tan_phase(params: DotParams, eps):
    """tan(delta) as the plain ratio of numerator and denominator."""
    x = np.asarray(eps, dtype=float)
    num, den = _phase_terms(params, x.reshape(-1))
    out = num / den
    return float(out[0]) if x.ndim == 0 else out.reshape(x.shape)


def unwrap_phase(raw, anchor: float | None = None, max_step: float = np.pi / 2):
    """Continuous phase from principal values on an increasing grid.

    The curve is built downward from the highest energy, adding at each
    point the multiple of pi closest to continuity.  The top point is then
    shifted by the multiple of pi that brings it closest to ``anchor``
    (left as is when ``anchor`` is None).

    Raises
    ------
    UnwrapError
        If any adjusted step is ``max_step`` or more.
    """
    raw = np.asarray(raw, dtype=float)
    out = np.empty_like(raw)
    if raw.size == 0:
        return out
    top = raw[-1]
    if anchor is not None:
        top = top + np.pi * np.round((anchor - top) / np.pi)
    out[-1] = top
    for k in range(raw.size - 2, -1, -1):
        step = raw[k] - out[k + 1]
        step -= np.pi * np.round(step / np.pi)
        if abs(step) >= max_step:
            raise UnwrapError(f"phase step {step:.3f} at index {k} too large to unwrap")
        out[k] = out[k + 1] + step
    return out


def wigner_delay(curve: DelayCurve) -> DelayCurve:
    """Fill in tau = 2 d(delta)/d(eps) by central differences."""
    e = np.asarray(curve.energies, dtype=float)
    d = np.asarray(curve.unwrapped_phase, dtype=float)
    if e.size < 3:
        raise DomainError("delay needs at least three grid points")
    tau = np.empty_like(d)
    tau[1:-1] = 2.0 * (d[2:] - d[:-2]) / (e[2:] - e[:-2])
    tau[0] = 2.0 * (d[1] - d[0]) / (e[1] - e[0])
    tau[-1] = 2.0 * (d[-1] - d[-2]) / (e[-1] - e[-2])
    return DelayCurve(e, curve.raw_phase, d, tau, curve.flagged)


# ---------------------------------------------------------------------------
# spinors


def _inner(params: DotParams, p_i: complex, eps: complex, rho: float):
    ell = params.ell
    j0, j1 = specfun.bessel_pair("J", ell, p_i * rho)
    ratio = 1.0 if params.massless else p_i / (eps - params.v + params.mu)
    return j0, ratio * j1


def _check_match(inner_at_one, outer_at_one, kind):
    scale = max(abs(inner_at_one[0]), abs(inner_at_one[1]), 1e-300)
    miss = max(abs(inner_at_one[0] - outer_at_one[0]), abs(inner_at_one[1] - outer_at_one[1])) / scale
    if miss > MATCH_TOL:
        raise MatchError(f"{kind.value} matching violated by {miss:.3g} at rho = 1")


def radial_spinor(params: DotParams, eps, rho: float, state_kind, region=None) -> RadialSpinor:
    """Radial components (phi1, phi2) at radius rho.

    The inner solution is normalized with a_i = 1 and the outer
    coefficients are fixed by continuity of phi1 (phi2 for supercritical
    and negative-ell massless bound states, whose outer phi1 vanishes).
    Continuity of the other component is the matching condition, checked
    at rho = 1.

    Parameters
    ----------
    region : Region, optional
        Force the inner or outer expression; defaults to the region that
        contains rho.

    Raises
    ------
    MatchError
        If eps is inconsistent with ``state_kind`` beyond 1e-6.
    """
    kind = StateKind(state_kind)
    if not rho > 0:
        raise DomainError("rho must be positive")
    region = Region(region) if region is not None else (Region.INNER if rho <= 1 else Region.OUTER)
    e = complex(eps)
    mu, v, ell = params.mu, params.v, params.ell

    if kind is StateKind.CRITICAL or kind is StateKind.SUPERCRITICAL:
        if params.massless:
            raise MatchError(f"{kind.value} states need mu > 0")
        target = mu if kind is StateKind.CRITICAL else -mu
        if abs(e - target) > 1e-9:
            raise MatchError(f"{kind.value} state needs eps = {target}")
        e = complex(target)
        p_i = math.sqrt((target - v) ** 2 - mu * mu)
    elif kind is StateKind.MASSLESS_BOUND:
        if not params.massless or abs(e) > 1e-10:
            raise MatchError("massless bound states need mu = 0 and eps = 0")
        e = 0j
        p_i = -v
        if p_i <= 0:
            raise MatchError("massless bound states need v < 0")
    elif kind is StateKind.BOUND:
        p_i = channel(params, e.real, Branch.BOUND_SEARCH).p_i
    else:
        p_i = channel(params, e.real, Branch.SCATTERING_REAL).p_i

    in_one = _inner(params, p_i, e, 1.0)
    coeffs = {"a_i": 1.0}

    if kind is StateKind.BOUND:
        p_o = 1j * math.sqrt(mu * mu - e.real ** 2)
        h0, h1 = specfun.bessel_pair("H1", ell, p_o)
        a_o = in_one[0] / h0
        ratio = p_o / (e + mu)
        coeffs["a_o_tilde"] = a_o

        def outer(r):
            g0, g1 = specfun.bessel_pair("H1", ell, p_o * r)
            return a_o * g0, a_o * ratio * g1

    elif kind is StateKind.CRITICAL:
        a_o = in_one[0]
        coeffs["a_o"] = a_o

        def outer(r):
            return a_o * r ** (-ell), a_o * (ell / mu) * r ** (-(ell + 1))

    elif kind is StateKind.SUPERCRITICAL:
        a_o = in_one[1]
        coeffs["a_o"] = a_o

        def outer(r):
            return 0.0, a_o * r ** (-(ell + 1))

    elif kind is StateKind.MASSLESS_BOUND:
        if ell >= 0:
            c2 = in_one[1]
            coeffs["c2"] = c2

            def outer(r):
                return 0.0, c2 * r ** (-(ell + 1))

        else:
            c1 = in_one[0]
            coeffs["c1"] = c1

            def outer(r):
                return c1 * r ** ell, 0.0

    else:
        p_o = channel(params, e.real, Branch.SCATTERING_REAL).p_o.real
        ratio = 1.0 if params.massless else p_o / (e.real + mu)
        jo0, jo1 = specfun.bessel_pair("J", ell, p_o)
        yo0, yo1 = specfun.bessel_pair("Y", ell, p_o)
        system = np.array([[jo0, yo0], [ratio * jo1, ratio * yo1]], dtype=complex)
        big_a, big_b = np.linalg.solve(system, np.array(in_one, dtype=complex))
        coeffs["A"], coeffs["B"] = complex(big_a), complex(big_b)

        def outer(r):
            g0, g1 = specfun.bessel_pair("J", ell, p_o * r)
            k0, k1 = specfun.bessel_pair("Y", ell, p_o * r)
            return big_a * g0 + big_b * k0, ratio * (big_a * g1 + big_b * k1)

    _check_match(in_one, outer(1.0), kind)
    if region is Region.INNER:
        phi1, phi2 = _inner(params, p_i, e, rho)
    else:
        phi1, phi2 = outer(rho)
    return RadialSpinor(complex(phi1), complex(phi2), float(rho), region, coeffs)
