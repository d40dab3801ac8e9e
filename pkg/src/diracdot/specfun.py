"""Integer-order Bessel and Hankel functions of complex argument.

Three regimes are used, selected per element of the argument array:

* ``|z| <= SERIES_RADIUS``, or ``|z| - |Im z| <= SERIES_SECTOR`` (a band
  around the imaginary axis where the terms do not cancel): ascending
  power series for every order of J and Y.
* ``SERIES_RADIUS < |z| <= ASYMPTOTIC_RADIUS``: Miller backward recurrence
  for J, normalized by the generating-function sum for exp(-i s z); Y_0 and
  Y_1 from the Neumann expansions in the same J values, then forward
  recurrence.
* ``|z| > ASYMPTOTIC_RADIUS``: Hankel asymptotic expansions for orders 0
  and 1 in the right half-plane, forward recurrence in the order, and
  analytic continuation across the imaginary axis.

On the positive (negative) imaginary axis H^(1) (H^(2)) is taken from the
modified Bessel function K, which avoids the cancellation in J + iY where
those Hankel functions are exponentially small.  Elsewhere in the interior
regimes H = J +- iY carries the absolute accuracy of J and Y.

All public functions accept a scalar or an array of complex arguments and
return a Python ``complex`` or a complex ``ndarray`` of the same shape.
"""

from __future__ import annotations

import enum
import math
import operator

import numpy as np

from .errors import ConvergenceError, DomainError, SingularArgument

MAX_ORDER = 12
MAX_ARG = 1.0e4
MAX_IMAG = 690.0
SERIES_RADIUS = 6.0
SERIES_SECTOR = 8.0
ASYMPTOTIC_RADIUS = 35.0
EULER_GAMMA = 0.57721566490153286
_TINY = 1.0e-200
_EPS = 2.0 ** -52


class FunctionKind(str, enum.Enum):
    J = "J"
    Y = "Y"
    H1 = "H1"
    H2 = "H2"


def _order(order) -> int:
    try:
        n = operator.index(order)
    except TypeError:
        raise DomainError(f"order must be an integer, got {order!r}") from None
    if abs(n) > MAX_ORDER:
        raise DomainError(f"|order| = {abs(n)} exceeds {MAX_ORDER}")
    return n


def _prepare(z, kind: FunctionKind):
    arr = np.asarray(z, dtype=complex)
    flat = arr.ravel() + 0j  # folds -0.0 imaginary parts onto the principal side
    if not np.all(np.isfinite(flat)):
        raise DomainError("argument is not finite")
    if flat.size:
        big = np.abs(flat).max()
        if big > MAX_ARG:
            raise DomainError(f"|z| = {big:.6g} exceeds {MAX_ARG:g}")
        if np.abs(flat.imag).max() > MAX_IMAG:
            raise DomainError(f"|Im z| exceeds {MAX_IMAG:g}")
    if kind is not FunctionKind.J and np.any(flat == 0):
        raise SingularArgument(f"{kind.value} is singular at z = 0")
    return flat, arr.shape, arr.ndim == 0


# ---------------------------------------------------------------------------
# regimes


_HARMONIC = np.concatenate(([0.0], np.cumsum(1.0 / np.arange(1, 400))))


def _series(nmax: int, z: np.ndarray, want_y: bool):
    """Ascending series for J_0..J_nmax, and Y_0..Y_nmax if requested.

    Every Y_n comes from its own logarithmic series, so no recurrence in the
    order is involved.
    """
    n = np.arange(nmax + 1)[:, None]
    half = 0.5 * z
    w = -half * half
    term = np.empty((nmax + 1, z.size), complex)
    term[0] = 1.0
    for k in range(1, nmax + 1):
        term[k] = term[k - 1] * half / k
    jt = term.copy()
    # sum_k (H_k + H_{n+k}) * term_{n,k}
    hsum = term * _HARMONIC[: nmax + 1, None]
    aw = np.abs(w)
    for k in range(1, 300):
        term = term * w / (k * (n + k))
        jt += term
        if want_y:
            hsum += (_HARMONIC[k] + _HARMONIC[n + k]) * term
        if np.all(aw <= 0.25 * (k + 1) ** 2):
            small = np.abs(term) * (2.0 * _HARMONIC[nmax + k] + 1.0) <= 0.1 * _EPS * np.abs(jt)
            if np.all(small | (term == 0)):
                break
    else:
        raise ConvergenceError("ascending series did not converge")
    if not want_y:
        return jt, None
    yt = (2.0 / np.pi) * (np.log(half) + EULER_GAMMA) * jt - hsum / np.pi
    # finite part -(z/2)^(-n)/pi * sum_{k<n} (n-k-1)!/k! (z/2)^(2k)
    q = -w
    for order in range(1, nmax + 1):
        acc = np.zeros(z.size, complex)
        power = np.ones(z.size, complex)
        for k in range(order):
            acc += math.factorial(order - k - 1) / math.factorial(k) * power
            power = power * q
        yt[order] -= acc / (np.pi * half ** order)
    return jt, yt


def _forward(table: np.ndarray, z: np.ndarray, second: np.ndarray) -> None:
    """Fill rows 2.. of table by upward recurrence from rows 0 and 1."""
    if table.shape[0] < 2:
        return
    table[1] = second
    for k in range(1, table.shape[0] - 1):
        table[k + 1] = (2.0 * k / z) * table[k] - table[k - 1]


def _miller(nmax: int, z: np.ndarray, want_y: bool):
    """Backward recurrence for J with generating-function normalization."""
    az = np.abs(z)
    amax = float(az.max())
    top = int(max(nmax, amax) + 25 + 6.0 * amax ** (1.0 / 3.0))
    top += top % 2
    s = np.where(z.imag >= 0, 1.0, -1.0)
    rot = -1j * s  # (-i s)^k weights of exp(-i s z) = J_0 + 2 sum (-i s)^k J_k
    acc = [np.zeros(z.size, complex) for _ in range(4)]
    mag = np.zeros(z.size)
    neu0 = np.zeros(z.size, complex)
    neu1 = np.zeros(z.size, complex)
    jt = np.empty((nmax + 1, z.size), complex)
    f_next = np.zeros(z.size, complex)
    f = np.full(z.size, _TINY, complex)
    inv = 2.0 / z
    for k in range(top, 0, -1):
        if k <= nmax:
            jt[k] = f
        acc[k % 4] += f
        mag += np.abs(f)
        if k % 2 == 0:
            h = k // 2
            neu0 += (-1.0 if h % 2 else 1.0) * f / h
        elif k >= 3:
            h = (k - 1) // 2
            neu1 += (-1.0 if h % 2 else 1.0) * (1 + 2 * h) * f / (h * (h + 1))
        f, f_next = k * inv * f - f_next, f
    jt[0] = f
    norm = f + 2.0 * (rot * acc[1] - acc[2] - rot * acc[3] + acc[0])
    if np.any(~np.isfinite(norm)) or np.any(norm == 0):
        raise ConvergenceError("backward recurrence overflowed")
    cancel = (np.abs(f) + 2.0 * mag) / np.abs(norm)
    if np.any(cancel * _EPS > 1.0e-12):
        raise ConvergenceError("normalization sum lost too many digits")
    scale = np.exp(-1j * s * z) / norm
    jt *= scale
    if not want_y:
        return jt, None
    neu0 *= scale
    neu1 *= scale
    j0 = jt[0]
    j1 = f_next * scale
    logterm = np.log(0.5 * z) + EULER_GAMMA
    yt = np.empty_like(jt)
    yt[0] = (2.0 / np.pi) * logterm * j0 - (4.0 / np.pi) * neu0
    y1 = (2.0 / np.pi) * (-j0 / z + (logterm - 1.0) * j1 - neu1)
    _forward(yt, z, y1)
    return jt, yt


def _asymptotic_right(nmax: int, w: np.ndarray):
    """H^(1), H^(2) of orders 0..nmax for Re w >= 0, |w| large."""
    rows = max(nmax, 1) + 1
    h1 = np.empty((rows, w.size), complex)
    h2 = np.empty((rows, w.size), complex)
    inv = 1.0 / w
    pref = np.sqrt(2.0 / (np.pi * w))
    for n in (0, 1):
        mu = 4.0 * n * n
        t1 = np.ones(w.size, complex)
        t2 = np.ones(w.size, complex)
        s1 = t1.copy()
        s2 = t2.copy()
        prev = np.inf
        for k in range(1, 80):
            c = (mu - (2 * k - 1) ** 2) / (8.0 * k)
            t1 = t1 * c * 1j * inv
            t2 = t2 * c * -1j * inv
            s1 += t1
            s2 += t2
            size = float(np.abs(t1).max())
            if size <= 0.1 * _EPS:
                break
            if size > prev:
                raise ConvergenceError("asymptotic expansion diverged before converging")
            prev = size
        else:
            raise ConvergenceError("asymptotic expansion did not converge")
        chi = w - (0.5 * n + 0.25) * np.pi
        h1[n] = pref * np.exp(1j * chi) * s1
        h2[n] = pref * np.exp(-1j * chi) * s2
    _forward(h1, w, h1[1])
    _forward(h2, w, h2[1])
    return h1[: nmax + 1], h2[: nmax + 1]


def _asymptotic(nmax: int, z: np.ndarray):
    """H^(1), H^(2) for |z| large anywhere off the cut."""
    left = z.real < 0
    w = np.where(left, -z, z)
    a1, a2 = _asymptotic_right(nmax, w)
    if not left.any():
        return a1, a2
    h1 = a1.copy()
    h2 = a2.copy()
    sign = np.array([(-1.0) ** k for k in range(nmax + 1)])[:, None]
    up = left & (z.imag >= 0)
    down = left & (z.imag < 0)
    h1[:, up] = -sign * a2[:, up]
    h2[:, up] = sign * (a1[:, up] + 2.0 * a2[:, up])
    h1[:, down] = sign * (2.0 * a1[:, down] + a2[:, down])
    h2[:, down] = -sign * a1[:, down]
    return h1, h2


def bessel_k_scaled(nmax: int, x) -> np.ndarray:
    """exp(x) K_n(x) for n = 0..nmax and real x > 0.

    Trapezoidal rule on the integral of exp(-x (cosh t - 1)) cosh(n t),
    which converges geometrically because the integrand is analytic in a
    strip, followed by the stable upward recurrence in n.  Private helper
    for the Hankel functions on the imaginary axis and for bound states.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(~(x > 0)):
        raise DomainError("modified Bessel K needs a positive argument")
    # per-element truncation point where the integrand has dropped by e^-60
    big = np.full(x.shape, 1.0)
    for _ in range(6):
        big = np.arccosh(1.0 + (60.0 + big) / x)
    step = min(0.1, 0.5 / math.sqrt(float(x.max())))
    t = np.arange(0.0, float(big.max()) + step, step)
    with np.errstate(under="ignore"):
        weight = np.exp(-np.outer(x, np.cosh(t) - 1.0))
    weight[:, 0] *= 0.5
    out = np.empty((max(nmax, 1) + 1, x.size))
    out[0] = step * weight.sum(axis=1)
    out[1] = step * (weight * np.cosh(t)).sum(axis=1)
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, nmax):
            out[k + 1] = out[k - 1] + (2.0 * k / x) * out[k]
    out = out[: nmax + 1]
    if not np.all(np.isfinite(out)):
        raise SingularArgument("K_n overflows this close to the origin")
    return out


def _hankel_imaginary_axis(nmax: int, z: np.ndarray, kind: FunctionKind):
    x = np.abs(z.imag)
    k = bessel_k_scaled(nmax, x) * np.exp(-x)
    n = np.arange(nmax + 1)[:, None]
    phase = (1j) ** (-(n + 1)) if kind is FunctionKind.H1 else (1j) ** (n + 1)
    return (2.0 / np.pi) * phase * k


# ---------------------------------------------------------------------------
# dispatch


def _table(kind: FunctionKind, nmax: int, z: np.ndarray) -> np.ndarray:
    out = np.empty((nmax + 1, z.size), complex)
    az = np.abs(z)
    large = az > ASYMPTOTIC_RADIUS
    axis = np.zeros(z.size, bool)
    if kind is FunctionKind.H1:
        axis = (z.real == 0) & (z.imag > 0) & ~large
    elif kind is FunctionKind.H2:
        axis = (z.real == 0) & (z.imag < 0) & ~large
    # the series does not cancel near the imaginary axis, so it is used
    # there out to the asymptotic radius
    small = ((az <= SERIES_RADIUS) | (az - np.abs(z.imag) <= SERIES_SECTOR)) & ~axis & ~large
    mid = ~(small | large | axis)
    want_y = kind is not FunctionKind.J
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for mask, method in ((small, _series), (mid, _miller)):
            if mask.any():
                jt, yt = method(nmax, z[mask], want_y)
                if kind is FunctionKind.J:
                    out[:, mask] = jt
                elif kind is FunctionKind.Y:
                    out[:, mask] = yt
                elif kind is FunctionKind.H1:
                    out[:, mask] = jt + 1j * yt
                else:
                    out[:, mask] = jt - 1j * yt
        if large.any():
            h1, h2 = _asymptotic(nmax, z[large])
            if kind is FunctionKind.J:
                out[:, large] = 0.5 * (h1 + h2)
            elif kind is FunctionKind.Y:
                out[:, large] = -0.5j * (h1 - h2)
            elif kind is FunctionKind.H1:
                out[:, large] = h1
            else:
                out[:, large] = h2
        if axis.any():
            out[:, axis] = _hankel_imaginary_axis(nmax, z[axis], kind)
    if not np.all(np.isfinite(out)):
        bad = z[~np.all(np.isfinite(out), axis=0)]
        if np.abs(bad).min() < 1.0:
            raise SingularArgument(f"{kind.value} overflows near the origin at z = {bad[0]}")
        raise ConvergenceError(f"{kind.value} evaluation produced a non-finite value at z = {bad[0]}")
    return out


def _reflect(row: np.ndarray, n: int) -> np.ndarray:
    return -row if (n < 0 and n % 2) else row


def _finish(values: np.ndarray, shape, scalar: bool):
    if scalar:
        return complex(values[0])
    return values.reshape(shape)


def evaluate(kind, order, z):
    """Evaluate J, Y, H1 or H2 of integer order at z.

    Parameters
    ----------
    kind : FunctionKind or str
        One of ``"J"``, ``"Y"``, ``"H1"``, ``"H2"``.
    order : int
        Order with ``|order| <= 12``; negative orders use the reflection
        ``f_{-n} = (-1)^n f_n``.
    z : complex or array_like
        Argument, ``|z| <= 1e4``.  Y and H take the principal branch with
        the cut along the negative real axis.

    Returns
    -------
    complex or ndarray
    """
    kind = FunctionKind(kind)
    n = _order(order)
    flat, shape, scalar = _prepare(z, kind)
    if flat.size == 0:
        return np.empty(shape, complex)
    table = _table(kind, abs(n), flat)
    return _finish(_reflect(table[abs(n)], n), shape, scalar)


def bessel_j(order, z):
    """Bessel function of the first kind J_n(z)."""
    return evaluate(FunctionKind.J, order, z)


def bessel_y(order, z):
    """Bessel function of the second kind Y_n(z), principal branch."""
    return evaluate(FunctionKind.Y, order, z)


def hankel(kind, order, z):
    """Hankel function H^(1)_n(z) (kind ``"H1"``) or H^(2)_n(z) (``"H2"``)."""
    kind = FunctionKind(kind)
    if kind not in (FunctionKind.H1, FunctionKind.H2):
        raise DomainError(f"hankel kind must be H1 or H2, got {kind.value}")
    return evaluate(kind, order, z)


def bessel_pair(kind, order, z):
    """Return ``(f_n(z), f_{n+1}(z))`` from a single table evaluation.

    Both orders must lie within the supported range.
    """
    kind = FunctionKind(kind)
    n = _order(order)
    _order(n + 1)
    flat, shape, scalar = _prepare(z, kind)
    top = max(abs(n), abs(n + 1))
    table = _table(kind, top, flat)
    first = _reflect(table[abs(n)], n)
    second = _reflect(table[abs(n + 1)], n + 1)
    return _finish(first, shape, scalar), _finish(second, shape, scalar)
