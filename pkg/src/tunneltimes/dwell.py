"""Dwell times for the transmission and reflection subensembles.

Closed forms are written in terms of the signed squared interior wavenumber,
so a single expression covers tunnelling, over-barrier passage, wells and the
point E = V0.  Each closed form has a quadrature counterpart that integrates
the stationary density produced by :mod:`tunneltimes.scattering`.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .constants import HBAR2_2ME, HBAR_OVER_ME
from .numerics import QuadratureResult, even_shc, even_shm3, integrate_adaptive, sinc, sinhc
from .scattering import BarrierSpec, InvalidInput, Regime, evaluate, solve, wavenumbers

# R at or below this counts as an empty reflection subensemble.
EMPTY_SUBENSEMBLE_R = 1e-20
QUADRATURE_TOL = 1e-12


def _m_over_hbar(mass):
    return mass / HBAR_OVER_ME  # fs / nm^2


def _unpack(energy, barrier):
    wn = wavenumbers(energy, barrier)
    return np.asarray(wn.k), np.asarray(wn.kappa2), barrier.d, barrier.kappa0_sq_signed


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def tau_free(mass, energy, d):
    """Time for a free particle of energy ``energy`` to cross a length ``d``: m d / (hbar k)."""
    if np.any(np.asarray(energy) <= 0) or mass <= 0:
        raise InvalidInput("energy and mass must be positive")
    if np.any(np.asarray(d) < 0):
        raise InvalidInput("d must be non-negative")
    k = np.sqrt(mass * np.asarray(energy, dtype=float) / HBAR2_2ME)
    return _out(_m_over_hbar(mass) * np.asarray(d) / k)


def tau_tr_dwell(energy, barrier: BarrierSpec):
    """Dwell time of the transmitted subensemble in [a, b] (fs).

    Under the barrier this is m/(2 hbar k kappa^3) [(kappa^2 - k^2) kappa d
    + kappa0^2 sinh(kappa d)], rearranged as
    tau_free/2 [1 + sinh(u)/u + (k d)^2 (sinh u - u)/u^3] with u = kappa d.
    """
    k, kappa2, d, _ = _unpack(energy, barrier)
    tf = _m_over_hbar(barrier.mass) * d / k
    return _out(0.5 * tf * (1.0 + even_shc(kappa2, d) + (k * d) ** 2 * even_shm3(kappa2, d)))


def tau_ref_dwell(energy, barrier: BarrierSpec):
    """Dwell time of the reflected subensemble in [a, x_c] (fs)."""
    k, kappa2, d, k0s = _unpack(energy, barrier)
    num = _m_over_hbar(barrier.mass) * k * d**3 * even_shm3(kappa2, d)
    den = 1.0 + 0.25 * k0s * d**2 * even_shc(kappa2, 0.5 * d) ** 2
    with np.errstate(divide="ignore"):
        return _out(num / den)


def tau_buttiker(energy, barrier: BarrierSpec):
    """Buttiker's dwell time of the whole stationary state in [a, b] (fs)."""
    k, kappa2, d, k0s = _unpack(energy, barrier)
    num = 2.0 * k * d * (1.0 + even_shc(kappa2, 2 * d) + 4.0 * (k * d) ** 2 * even_shm3(kappa2, 2 * d))
    den = 4.0 * k * k + k0s**2 * d**2 * even_shc(kappa2, d) ** 2
    return _out(_m_over_hbar(barrier.mass) * num / den)


def tau_ref_opaque_limit(energy, barrier: BarrierSpec):
    """Large-width limit 2 m k / (hbar kappa kappa0^2) of the reflection dwell time (E < V0)."""
    k, kappa2, _, k0s = _unpack(energy, barrier)
    if np.any(kappa2 <= 0):
        raise InvalidInput("opaque limit exists only below the barrier top")
    return _out(2 * _m_over_hbar(barrier.mass) * k / (np.sqrt(kappa2) * k0s))


def tau_buttiker_opaque_limit(energy, barrier: BarrierSpec):
    """Saturation value of Buttiker's dwell time for wide barriers: 2 m k / (hbar kappa kappa0^2)."""
    return tau_ref_opaque_limit(energy, barrier)


def tau_tr_ratio_zero_k(v0, d, mass):
    """Limit k -> 0 of tau_tr_dwell / tau_free at fixed barrier."""
    if d < 0 or mass <= 0:
        raise InvalidInput("need d >= 0 and mass > 0")
    if v0 == 0:
        return 1.0
    x = BarrierSpec(v0, 0.0, 1.0, mass).kappa0 * d
    return 0.5 * (1.0 + (sinhc(x) if v0 > 0 else sinc(x)))


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DwellReport:
    energy: float
    t_coef: float
    r_coef: float
    tau_free: float
    tau_tr: float
    tau_ref: float
    tau_buttiker: float
    regime: Regime
    empty_subensemble: bool

    def as_dict(self):
        out = asdict(self)
        out["regime"] = self.regime.value
        return out


def dwell_report(energy: float, barrier: BarrierSpec) -> DwellReport:
    wn, amps = solve(energy, barrier)
    return DwellReport(
        energy=float(energy),
        t_coef=float(amps.t_coef),
        r_coef=float(amps.r_coef),
        tau_free=tau_free(barrier.mass, energy, barrier.d),
        tau_tr=tau_tr_dwell(energy, barrier),
        tau_ref=tau_ref_dwell(energy, barrier),
        tau_buttiker=tau_buttiker(energy, barrier),
        regime=wn.regime,
        empty_subensemble=bool(amps.r_coef <= EMPTY_SUBENSEMBLE_R),
    )


# ---------------------------------------------------------------------------
# quadrature oracles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DwellQuadrature:
    value: float               # dwell time (fs); nan for an empty subensemble
    integral: float            # unnormalised integral of |psi|^2 (nm)
    error_estimate: float      # on the time, fs
    evaluations: int
    empty_subensemble: bool = False


def _integrate_density(component, energy, barrier, hi, scale, tol):
    _, amps = solve(energy, barrier)

    def density(x):
        return np.abs(evaluate(component, x, barrier, amps)[0]) ** 2 / scale(amps)

    return amps, integrate_adaptive(density, barrier.a, hi, tol, breakpoints=(barrier.xc,) if hi > barrier.xc else ())


def tau_tr_quadrature(energy, barrier: BarrierSpec, tol=QUADRATURE_TOL) -> DwellQuadrature:
    """(1/I_tr) * integral over [a, b] of |psi_tr|^2, with I_tr = hbar k T / m."""
    amps, res = _integrate_density("tr", energy, barrier, barrier.b, lambda am: am.t_coef, tol)
    f = _m_over_hbar(barrier.mass) / amps.k
    return DwellQuadrature(f * res.value, res.value * amps.t_coef, f * res.error_estimate, res.evaluations)


def tau_ref_quadrature(energy, barrier: BarrierSpec, tol=QUADRATURE_TOL) -> DwellQuadrature:
    """(1/I_ref) * integral over [a, x_c] of |psi_ref|^2, with I_ref = hbar k R / m."""
    _, amps = solve(energy, barrier)
    if amps.r_coef <= EMPTY_SUBENSEMBLE_R:
        # psi_ref is proportional to b_out; the integral is 0 and the ratio undefined
        return DwellQuadrature(float("nan"), 0.0, 0.0, 0, empty_subensemble=True)
    amps, res = _integrate_density("ref", energy, barrier, barrier.xc, lambda am: am.r_coef, tol)
    f = _m_over_hbar(barrier.mass) / amps.k
    return DwellQuadrature(f * res.value, res.value * amps.r_coef, f * res.error_estimate, res.evaluations)


def tau_buttiker_quadrature(energy, barrier: BarrierSpec, tol=QUADRATURE_TOL) -> DwellQuadrature:
    """(1/I_in) * integral over [a, b] of |psi_full|^2, with I_in = hbar k / m."""
    amps, res = _integrate_density("full", energy, barrier, barrier.b, lambda am: 1.0, tol)
    f = _m_over_hbar(barrier.mass) / amps.k
    return DwellQuadrature(f * res.value, res.value, f * res.error_estimate, res.evaluations)


def transmitted_density_integral(energy, barrier: BarrierSpec) -> float:
    """Closed-form integral of |psi_tr|^2 over [a, b] from the midpoint coefficients.

    Valid under the barrier (real kappa).  Returns the value built from
    |b_tr|^2, |a^l_tr|^2, |a^r_tr|^2 and Re[(a^r_tr - a^l_tr) b_tr*].
    """
    wn, amps = solve(energy, barrier)
    if wn.kappa2 <= 0:
        raise InvalidInput("midpoint-coefficient integral is written for real kappa")
    kappa = np.sqrt(wn.kappa2)
    phi = 0.5 * kappa * barrier.d
    al, ar, bt = amps.a_l_tr, amps.a_r_tr, amps.b_tr
    s_minus = 2 * abs(bt) ** 2 - abs(ar) ** 2 - abs(al) ** 2
    s_plus = 2 * abs(bt) ** 2 + abs(ar) ** 2 + abs(al) ** 2
    cross = np.real((ar - al) * np.conj(bt))
    return float(
        barrier.d / 4 * s_minus + np.sinh(2 * phi) / (4 * kappa) * s_plus + np.sinh(phi) ** 2 / kappa * cross
    )


def transmitted_coefficient_identities(energy, barrier: BarrierSpec):
    """The three coefficient combinations and their closed-form values.

    Returns ``{name: (from_coefficients, closed_form)}`` for
    2|b|^2 - |a^r|^2 - |a^l|^2, 2|b|^2 + |a^r|^2 + |a^l|^2 and
    Re[(a^r - a^l) b*].
    """
    wn, amps = solve(energy, barrier)
    if wn.kappa2 <= 0:
        raise InvalidInput("identities are written for real kappa")
    k, kap2, t = wn.k, wn.kappa2, amps.t_coef
    kappa = np.sqrt(kap2)
    two_phi = kappa * barrier.d
    al, ar, bt = amps.a_l_tr, amps.a_r_tr, amps.b_tr
    return {
        "difference": (
            2 * abs(bt) ** 2 - abs(ar) ** 2 - abs(al) ** 2,
            2 / kap2 * (kap2 - k * k) * t,
        ),
        "sum": (
            2 * abs(bt) ** 2 + abs(ar) ** 2 + abs(al) ** 2,
            2 / kap2 * (kap2 + k * k) * t * np.cosh(two_phi),
        ),
        "cross": (
            float(np.real((ar - al) * np.conj(bt))),
            -1 / kap2 * (kap2 + k * k) * t * np.sinh(two_phi),
        ),
    }
