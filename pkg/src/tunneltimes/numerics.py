"""Shared numerical machinery.

Stable special-function kernels, an adaptive Gauss-Kronrod (7/15) integrator
that respects breakpoints, a bracketed root finder and ordinary least-squares
line fitting.  Everything here works on plain floats and numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.optimize import brentq


class NumericalFailure(RuntimeError):
    """A numerical procedure did not reach its requested accuracy."""

    def __init__(self, message: str, error_estimate: float = float("nan")):
        super().__init__(message)
        self.error_estimate = error_estimate


class BracketError(ValueError):
    """The supplied interval does not bracket a sign change."""


# ---------------------------------------------------------------------------
# stable kernels
# ---------------------------------------------------------------------------

# Below this |x| the ratio kernels sinh(x)/x, sin(x)/x switch to Taylor series.
SERIES_CUTOFF = 1e-3
# The "minus" kernels (sinh x - x, x - sin x) use their series up to |x| = 1:
# naive subtraction loses ~log10(6/x^2) digits, which is 1e-10 at x = 1e-3.
MINUS_SERIES_CUTOFF = 1.0

# Odd Taylor coefficients 1/(2n+1)! for n = 1.., enough for |x| <= 1 at 1e-17.
_ODD_FACT = np.array([1.0 / np.prod(np.arange(1.0, 2 * n + 2)) for n in range(1, 12)])


def _asarray(x):
    return np.asarray(x, dtype=float)


def _scalar_or_array(x, out):
    return float(out) if np.ndim(x) == 0 else out


def sinhc(x):
    """sinh(x)/x, equal to 1 at the origin."""
    x = _asarray(x)
    x2 = x * x
    small = np.abs(x) < SERIES_CUTOFF
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(small, 1.0 + x2 / 6.0 * (1.0 + x2 / 20.0 * (1.0 + x2 / 42.0)), np.sinh(x) / x)
    return _scalar_or_array(x, out)


def sinc(x):
    """sin(x)/x (unnormalised), equal to 1 at the origin."""
    x = _asarray(x)
    x2 = x * x
    small = np.abs(x) < SERIES_CUTOFF
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(small, 1.0 - x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0)), np.sin(x) / x)
    return _scalar_or_array(x, out)


def _odd_tail_over_cube(x2, sign):
    # sum_{n>=1} sign^(n-1) x^(2n-2) / (2n+1)!   (i.e. (sinh x - x)/x^3 for sign=+1)
    acc = np.zeros_like(x2)
    for c in _ODD_FACT[::-1]:
        acc = acc * (sign * x2) + c
    return acc


def sinh_minus(x):
    """sinh(x) - x without cancellation near the origin."""
    x = _asarray(x)
    small = np.abs(x) < MINUS_SERIES_CUTOFF
    out = np.where(small, x**3 * _odd_tail_over_cube(x * x, 1.0), np.sinh(x) - x)
    return _scalar_or_array(x, out)


def x_minus_sin(x):
    """x - sin(x) without cancellation near the origin."""
    x = _asarray(x)
    small = np.abs(x) < MINUS_SERIES_CUTOFF
    out = np.where(small, x**3 * _odd_tail_over_cube(x * x, -1.0), x - np.sin(x))
    return _scalar_or_array(x, out)


def sinh_minus_over_cube(x):
    """(sinh x - x)/x^3, equal to 1/6 at the origin."""
    x = _asarray(x)
    small = np.abs(x) < MINUS_SERIES_CUTOFF
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(small, _odd_tail_over_cube(x * x, 1.0), (np.sinh(x) - x) / x**3)
    return _scalar_or_array(x, out)


def x_minus_sin_over_cube(x):
    """(x - sin x)/x^3, equal to 1/6 at the origin."""
    x = _asarray(x)
    small = np.abs(x) < MINUS_SERIES_CUTOFF
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(small, _odd_tail_over_cube(x * x, -1.0), (x - np.sin(x)) / x**3)
    return _scalar_or_array(x, out)


# Kernels parametrised by a signed squared wavenumber q2.  For q2 >= 0 they are
# the hyperbolic functions of sqrt(q2)*s, for q2 < 0 the trigonometric ones of
# sqrt(-q2)*s.  All are even in sqrt(q2), so no branch of the root is needed.


def even_cosh(q2, s):
    """cosh(q s) for q = sqrt(q2), real-valued for any sign of q2."""
    q2, s = np.broadcast_arrays(_asarray(q2), _asarray(s))
    r = np.sqrt(np.abs(q2)) * s
    return np.where(q2 >= 0, np.cosh(r), np.cos(r))


def even_sinhc(q2, s):
    """sinh(q s)/q for q = sqrt(q2); tends to s as q2 -> 0."""
    q2, s = np.broadcast_arrays(_asarray(q2), _asarray(s))
    r = np.sqrt(np.abs(q2)) * s
    return s * np.where(q2 >= 0, sinhc(r), sinc(r))


def even_shc(q2, s):
    """sinh(q s)/(q s), the ratio kernel for either sign of q2."""
    q2, s = np.broadcast_arrays(_asarray(q2), _asarray(s))
    r = np.sqrt(np.abs(q2)) * s
    return np.where(q2 >= 0, sinhc(r), sinc(r))


def even_shm3(q2, s):
    """(sinh u - u)/u^3 with u = q s; for q2 < 0 this is (w - sin w)/w^3."""
    q2, s = np.broadcast_arrays(_asarray(q2), _asarray(s))
    r = np.sqrt(np.abs(q2)) * s
    return np.where(q2 >= 0, sinh_minus_over_cube(r), x_minus_sin_over_cube(r))


# ---------------------------------------------------------------------------
# adaptive Gauss-Kronrod quadrature
# ---------------------------------------------------------------------------

_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])           # 15 nodes, ascending
_W15 = np.concatenate([_WGK[:-1], _WGK[::-1]])
_W7 = np.zeros(15)
_W7[1:14:2] = np.concatenate([_WG[:-1], _WG[::-1]])


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error_estimate: float
    evaluations: int
    intervals: int = 0


def _gk15(f, lo, hi):
    """Vectorised G7/K15 over arrays of intervals."""
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    x = mid[:, None] + half[:, None] * _NODES[None, :]
    fx = np.asarray(f(x.ravel()), dtype=float).reshape(x.shape)
    k15 = fx @ _W15 * half
    g7 = fx @ _W7 * half
    # QUADPACK-style error estimate with a round-off floor
    mean = 0.5 * k15 / np.where(half == 0, 1.0, half)
    resasc = np.abs(fx - mean[:, None]) @ _W15 * np.abs(half)
    resabs = np.abs(fx) @ _W15 * np.abs(half)
    err = np.abs(k15 - g7)
    with np.errstate(invalid="ignore", divide="ignore"):
        scaled = np.where(resasc > 0, resasc * np.minimum(1.0, (200.0 * err / resasc) ** 1.5), err)
    floor = 50.0 * np.finfo(float).eps * resabs
    return k15, np.maximum(scaled, floor)


def integrate_adaptive(
    f: Callable[[np.ndarray], np.ndarray],
    lo: float,
    hi: float,
    tol: float = 1e-12,
    breakpoints: Iterable[float] = (),
    max_depth: int = 60,
    max_intervals: int = 20000,
) -> QuadratureResult:
    """Integrate ``f`` over [lo, hi] to ``tol * max(1, |value|)``.

    ``f`` must accept a 1-d array of abscissae.  The initial partition is cut
    at every breakpoint, so no panel ever straddles one; afterwards every panel
    whose share of the error budget is exceeded is bisected, all of them in a
    single vectorised call per round.  A panel bisected ``max_depth`` times
    without converging raises :class:`NumericalFailure`.
    """
    if not hi > lo:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    if not tol > 0:
        raise ValueError("tol must be positive")
    cuts = sorted({float(lo), float(hi), *(float(p) for p in breakpoints if lo < p < hi)})
    for p in breakpoints:
        if not lo <= p <= hi:
            raise ValueError(f"breakpoint {p} outside [{lo}, {hi}]")

    edges = np.array(cuts)
    a, b = edges[:-1], edges[1:]
    depth = np.zeros(a.size, dtype=int)
    vals, errs = _gk15(f, a, b)
    nevals = 15 * a.size
    while True:
        total = float(np.sum(vals))
        err_total = float(np.sum(errs))
        budget = tol * max(1.0, abs(total))
        if err_total <= budget:
            return QuadratureResult(total, err_total, nevals, a.size)
        # bisect every panel above its share of the budget, and always the worst one
        share = budget / a.size
        split = errs > share
        split[np.argmax(errs)] = True
        if np.any(depth[split] >= max_depth) or a.size + split.sum() > max_intervals:
            raise NumericalFailure(
                f"quadrature did not converge on [{lo}, {hi}]: estimate {err_total:.3e} > {budget:.3e}",
                err_total,
            )
        sa, sb, sd = a[split], b[split], depth[split] + 1
        m = 0.5 * (sa + sb)
        na = np.concatenate([sa, m])
        nb = np.concatenate([m, sb])
        nv, ne = _gk15(f, na, nb)
        nevals += 15 * na.size
        keep = ~split
        a = np.concatenate([a[keep], na])
        b = np.concatenate([b[keep], nb])
        depth = np.concatenate([depth[keep], sd, sd])
        vals = np.concatenate([vals[keep], nv])
        errs = np.concatenate([errs[keep], ne])


# ---------------------------------------------------------------------------
# root finding and line fitting
# ---------------------------------------------------------------------------


def find_root_bracketed(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-12) -> float:
    """Root of ``f`` in [lo, hi] by Brent's bracketing method."""
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return float(lo)
    if fhi == 0.0:
        return float(hi)
    if np.sign(flo) == np.sign(fhi):
        raise BracketError(f"f({lo})={flo:.3g} and f({hi})={fhi:.3g} have the same sign")
    return float(brentq(f, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=200))


@dataclass(frozen=True)
class LineFit:
    slope: float
    intercept: float
    residual_rms: float

    def __call__(self, t):
        return self.slope * np.asarray(t) + self.intercept

    def solve(self, x: float) -> float:
        """Abscissa at which the line reaches ``x``."""
        return (x - self.intercept) / self.slope


def fit_line(samples: Sequence[tuple[float, float]] | np.ndarray) -> LineFit:
    """Ordinary least-squares line through (t, x) samples."""
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 2:
        raise ValueError("fit_line needs an (n, 2) array with n >= 2")
    t, x = arr[:, 0], arr[:, 1]
    if np.ptp(t) == 0:
        raise ValueError("fit_line needs at least two distinct t values")
    # centre t for conditioning
    tm = t.mean()
    A = np.column_stack([t - tm, np.ones_like(t)])
    (slope, c), *_ = np.linalg.lstsq(A, x, rcond=None)
    resid = x - (slope * (t - tm) + c)
    return LineFit(float(slope), float(c - slope * tm), float(np.sqrt(np.mean(resid**2))))
