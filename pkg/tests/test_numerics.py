import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from tunneltimes.numerics import (
    BracketError,
    NumericalFailure,
    even_cosh,
    even_shc,
    even_shm3,
    even_sinhc,
    find_root_bracketed,
    fit_line,
    integrate_adaptive,
    sinc,
    sinh_minus,
    sinh_minus_over_cube,
    sinhc,
    x_minus_sin,
    x_minus_sin_over_cube,
)

mp.mp.dps = 40


def rel(a, b):
    return abs(a - b) / abs(b)


# --- kernels -----------------------------------------------------------------


def test_sinhc_at_zero_is_one():
    assert sinhc(0.0) == 1.0
    assert sinc(0.0) == 1.0


def test_sinhc_one():
    # 50-digit sinh(1)
    assert sinhc(1.0) == pytest.approx(1.1752011936438014, rel=1e-15)


def test_sinh_minus_tiny_argument_is_cubic_term():
    x = 1e-5
    assert rel(sinh_minus(x), x**3 / 6 * (1 + x**2 / 20)) < 1e-14


# |x| >= 1e-30 keeps x^3 well inside the double range
finite_x = st.floats(min_value=-30.0, max_value=30.0, allow_nan=False).filter(lambda v: abs(v) >= 1e-30)


@given(finite_x)
def test_ratio_kernels_match_mpmath(x):
    X = mp.mpf(x)
    assert rel(sinhc(x), float(mp.sinh(X) / X)) < 1e-14
    assert rel(sinc(x), float(mp.sin(X) / X)) < 1e-14 or abs(sinc(x) - float(mp.sin(X) / X)) < 1e-16


@given(finite_x)
@mp.workdps(150)
def test_minus_kernels_match_mpmath(x):
    # enough digits for the cancellation down to |x| ~ 1e-40
    X = mp.mpf(x)
    assert rel(sinh_minus(x), float(mp.sinh(X) - X)) < 1e-14
    assert rel(sinh_minus_over_cube(x), float((mp.sinh(X) - X) / X**3)) < 1e-14
    ref = float(X - mp.sin(X))
    assert rel(x_minus_sin(x), ref) < 1e-14
    assert rel(x_minus_sin_over_cube(x), float((X - mp.sin(X)) / X**3)) < 1e-14


@pytest.mark.parametrize("x", [1e-8, 1e-4, 9.99e-4, 1e-3, 1.01e-3, 0.3, 0.999, 1.0, 1.001])
def test_kernels_across_series_cutoffs(x):
    X = mp.mpf(x)
    assert rel(sinh_minus(x), float(mp.sinh(X) - X)) < 1e-14
    assert rel(x_minus_sin(x), float(X - mp.sin(X))) < 1e-14
    assert rel(sinhc(x), float(mp.sinh(X) / X)) < 1e-15
    assert rel(sinc(x), float(mp.sin(X) / X)) < 1e-15


@given(st.floats(-2.0, 2.0), st.floats(0.0, 20.0))
def test_even_kernels_continue_through_zero(q2, s):
    # hypergeometric series in w = q2 s^2 are exact on both sides of w = 0
    w = mp.mpf(q2) * mp.mpf(s) ** 2 / 4
    ch = float(mp.hyp0f1(mp.mpf(1) / 2, w))
    f1 = float(mp.hyp0f1(mp.mpf(3) / 2, w))
    f3 = float(mp.hyper([1], [2, mp.mpf(5) / 2], w) / 6)
    assert abs(even_cosh(q2, s) - ch) <= 1e-13 * max(1.0, abs(ch))
    assert abs(even_sinhc(q2, s) - s * f1) <= 1e-13 * max(1.0, abs(s * f1))
    if s > 0:
        assert abs(even_shc(q2, s) - f1) <= 1e-13 * max(1.0, abs(f1))
        assert abs(even_shm3(q2, s) - f3) <= 1e-13 * max(1.0, abs(f3))


# --- quadrature --------------------------------------------------------------


def test_integrate_polynomial():
    r = integrate_adaptive(lambda x: x**2, 0.0, 1.0, 1e-12)
    assert abs(r.value - 1 / 3) < 1e-12
    assert r.error_estimate >= 0
    assert r.evaluations > 0


def test_integrate_sine():
    assert abs(integrate_adaptive(np.sin, 0.0, math.pi).value - 2.0) < 1e-12


def test_integrate_kink_with_breakpoint():
    r = integrate_adaptive(lambda x: np.abs(x - 0.3), 0.0, 1.0, 1e-13, breakpoints=(0.3,))
    assert abs(r.value - (0.3**2 + 0.7**2) / 2) < 1e-13


def test_breakpoints_never_straddled():
    seen = []

    def f(x):
        seen.append(np.asarray(x).copy())
        return np.where(x < 0.5, 1.0, 2.0)

    r = integrate_adaptive(f, 0.0, 1.0, 1e-12, breakpoints=(0.5,))
    assert abs(r.value - 1.5) < 1e-12
    # panels are 15-node blocks; none may contain points on both sides of 0.5
    blocks = np.concatenate(seen).reshape(-1, 15)
    assert not np.any((blocks.min(axis=1) < 0.5) & (blocks.max(axis=1) > 0.5))


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_integrate_nonconvergence_raises_with_estimate():
    with pytest.raises(NumericalFailure) as err:
        integrate_adaptive(lambda x: 1 / np.sqrt(np.abs(x - 0.5)), 0.0, 1.0, 1e-14, max_depth=8)
    assert err.value.error_estimate > 0


@pytest.mark.parametrize("args", [(1.0, 0.0), (0.0, 1.0, -1.0)])
def test_integrate_rejects_bad_input(args):
    with pytest.raises(ValueError):
        integrate_adaptive(np.sin, *args)


def test_integrate_rejects_breakpoint_outside():
    with pytest.raises(ValueError):
        integrate_adaptive(np.sin, 0.0, 1.0, breakpoints=(2.0,))


# --- roots and fits ------------------------------------------------------------


def test_root_linear():
    assert find_root_bracketed(lambda x: x - 2, 0.0, 5.0) == pytest.approx(2.0, abs=1e-12)


def test_root_cos():
    assert abs(find_root_bracketed(math.cos, 1.0, 2.0, 1e-12) - math.pi / 2) < 1e-10


def test_root_needs_sign_change():
    with pytest.raises(BracketError):
        find_root_bracketed(lambda x: x * x + 1, -1.0, 1.0)


@given(st.floats(-10, 10), st.floats(0.01, 10), st.floats(0.0, 1.0))
def test_root_stays_in_bracket(c, w, frac):
    lo, hi = c - frac * w, c + (1 - frac) * w + 1e-9
    r = find_root_bracketed(lambda x: x - c, lo, hi)
    assert lo <= r <= hi
    assert abs(r - c) < 1e-9


def test_fit_two_points():
    f = fit_line([(0, 0), (1, 2)])
    assert (f.slope, f.intercept) == pytest.approx((2.0, 0.0), abs=1e-15)
    assert f.residual_rms == pytest.approx(0.0, abs=1e-15)


def test_fit_collinear_hundred_points():
    t = np.linspace(-3, 50, 100)
    f = fit_line(np.column_stack([t, 0.625 * t - 7.5]))
    assert f.residual_rms <= 1e-12
    assert f.solve(f(12.0)) == pytest.approx(12.0)


def test_fit_degenerate_t():
    with pytest.raises(ValueError):
        fit_line([(1, 0), (1, 2)])
    with pytest.raises(ValueError):
        fit_line([(1, 0)])
