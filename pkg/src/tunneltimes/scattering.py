"""Stationary scattering on a rectangular barrier or well, split into the
transmission and reflection subensembles.

For a unit incident wave e^{ikx} the full stationary state is written as
``psi_full = psi_tr + psi_ref`` where ``psi_tr`` carries the whole transmitted
flux and ``psi_ref`` vanishes identically to the right of the barrier midpoint
``x_c``.  Every regime (under-barrier, over-barrier, well, E = V0) is handled by
one set of formulas written in terms of the signed squared interior wavenumber
``kappa2 = 2m(V0 - E)/hbar^2``; the interior functions only ever appear as
cosh(kappa s) and sinh(kappa s)/kappa, both real and even in kappa, so the
continuation kappa -> i kappa' needs no separate branch.

Inside the barrier the transmitted state is propagated from the nearer edge
(Cauchy data at ``a`` on the left half, at ``b`` on the right half).  That is
the same function as the midpoint expansion a sinh(beta) + b cosh(beta), but it
never subtracts two exponentially large terms, so it keeps full relative
accuracy for opaque barriers.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .constants import DEGENERACY_THRESHOLD, HBAR2_2ME, HBAR_OVER_ME
from .numerics import even_cosh, even_sinhc


class InvalidInput(ValueError):
    """Physical input outside the domain of the model."""


class Regime(str, Enum):
    UNDER_BARRIER = "under_barrier"
    OVER_BARRIER = "over_barrier"
    WELL = "well"
    DEGENERATE = "degenerate"


@dataclass(frozen=True)
class BarrierSpec:
    """Rectangular potential of height ``v0`` (eV, negative for a well) on [a, b] (nm).

    ``mass`` is the particle mass in electron masses.
    """

    v0: float
    a: float
    b: float
    mass: float = 0.067

    def __post_init__(self):
        for name in ("v0", "a", "b", "mass"):
            if not np.isfinite(getattr(self, name)):
                raise InvalidInput(f"{name} must be finite")
        if not self.b > self.a:
            raise InvalidInput(f"need b > a, got a={self.a}, b={self.b}")
        if not self.mass > 0:
            raise InvalidInput(f"mass must be positive, got {self.mass}")

    @property
    def d(self) -> float:
        return self.b - self.a

    @property
    def xc(self) -> float:
        return 0.5 * (self.a + self.b)

    @property
    def theta(self) -> int:
        return 1 if self.v0 > 0 else -1

    @property
    def kappa0_sq_signed(self) -> float:
        """2 m V0 / hbar^2 with the sign of V0 (nm^-2)."""
        return self.mass * self.v0 / HBAR2_2ME

    @property
    def kappa0(self) -> float:
        return float(np.sqrt(abs(self.kappa0_sq_signed)))

    def velocity_scale(self) -> float:
        """hbar/m in nm^2/fs."""
        return HBAR_OVER_ME / self.mass


def classify(energy, v0):
    """Spectral regime of a single energy."""
    if abs(energy - v0) < DEGENERACY_THRESHOLD:
        return Regime.DEGENERATE
    if v0 < 0:
        return Regime.WELL
    return Regime.UNDER_BARRIER if energy < v0 else Regime.OVER_BARRIER


@dataclass(frozen=True)
class WaveNumbers:
    k: np.ndarray | float
    kappa2: np.ndarray | float  # signed: > 0 under the barrier, < 0 above it or in a well
    kappa0: float
    regime: Regime | np.ndarray

    @property
    def kappa(self):
        """Interior wavenumber, real under the barrier and i*kappa' otherwise."""
        return np.sqrt(np.asarray(self.kappa2, dtype=complex))

    @property
    def kappa_prime(self):
        """sqrt(|kappa2|), the real magnitude used by the over-barrier formulas."""
        return np.sqrt(np.abs(self.kappa2))


def _check_positive(name, value):
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise InvalidInput(f"{name} must be positive and finite")


def wavenumbers(energy, barrier: BarrierSpec) -> WaveNumbers:
    """Wavenumbers of a particle of energy ``energy`` (eV, scalar or array)."""
    _check_positive("energy", energy)
    _check_positive("mass", barrier.mass)
    e = np.asarray(energy, dtype=float)
    k = np.sqrt(barrier.mass * e / HBAR2_2ME)
    kappa2 = barrier.mass * (barrier.v0 - e) / HBAR2_2ME
    if e.ndim == 0:
        return WaveNumbers(float(k), float(kappa2), barrier.kappa0, classify(float(e), barrier.v0))
    regime = np.array([classify(float(x), barrier.v0) for x in e.ravel()], dtype=object).reshape(e.shape)
    return WaveNumbers(k, kappa2, barrier.kappa0, regime)


def wavenumbers_from_k(k, barrier: BarrierSpec) -> WaveNumbers:
    """Same as :func:`wavenumbers` but parametrised by k (nm^-1)."""
    k = np.asarray(k, dtype=float)
    return wavenumbers(HBAR2_2ME * k**2 / barrier.mass, barrier) if k.ndim else wavenumbers(
        float(HBAR2_2ME * k**2 / barrier.mass), barrier
    )


@dataclass(frozen=True)
class AmplitudeSet:
    """Coefficients of psi_tr and psi_ref for one (or an array of) energies.

    ``p`` and ``q`` are the complex amplitudes P and Q; ``q_over_kappa`` is Q/kappa,
    which stays finite at E = V0.  The interior coefficients ``a_l_tr``,
    ``a_r_tr`` and ``a_l_ref`` carry a 1/kappa factor and are infinite at exactly
    E = V0; the ``*_k`` variants (kappa times the coefficient) never are.
    """

    k: np.ndarray | float
    kappa2: np.ndarray | float
    cosh_half: np.ndarray | float      # cosh(kappa d/2)
    sinhc_half: np.ndarray | float     # sinh(kappa d/2)/kappa
    p: complex | np.ndarray
    q_over_kappa: complex | np.ndarray
    a_out: complex | np.ndarray
    b_out: complex | np.ndarray
    a_in_tr: complex | np.ndarray
    a_in_ref: complex | np.ndarray
    a_l_tr_k: complex | np.ndarray
    b_tr: complex | np.ndarray
    a_r_tr_k: complex | np.ndarray
    a_l_ref_k: complex | np.ndarray
    t_coef: float | np.ndarray
    r_coef: float | np.ndarray

    @property
    def kappa(self):
        return np.sqrt(np.asarray(self.kappa2, dtype=complex))

    @property
    def q(self):
        return self.kappa * self.q_over_kappa

    def _div_kappa(self, v):
        with np.errstate(divide="ignore", invalid="ignore"):
            return v / self.kappa

    @property
    def a_l_tr(self):
        return self._div_kappa(self.a_l_tr_k)

    @property
    def a_r_tr(self):
        return self._div_kappa(self.a_r_tr_k)

    @property
    def a_l_ref(self):
        return self._div_kappa(self.a_l_ref_k)

    @property
    def empty_reflection(self):
        return np.asarray(self.r_coef) == 0.0


def amplitudes(wn: WaveNumbers, barrier: BarrierSpec) -> AmplitudeSet:
    """All subensemble coefficients for the given wavenumbers."""
    k = np.asarray(wn.k, dtype=float)
    kappa2 = np.asarray(wn.kappa2, dtype=float)
    half = 0.5 * barrier.d
    c = even_cosh(kappa2, half)
    s = even_sinhc(kappa2, half)
    p = k * c - 1j * kappa2 * s
    qk = c + 1j * k * s
    # denominator P*Q*/kappa, regular at kappa = 0
    den = k * (c * c + kappa2 * s * s) + 1j * (kappa2 - k * k) * s * c
    a_out = k / den
    b_out = -1j * barrier.kappa0_sq_signed * s * c / den
    phase = np.conj(qk) / qk  # Q*/Q
    a_in_tr = a_out * phase
    a_in_ref = -b_out * phase
    ea = np.exp(1j * k * barrier.a)
    out = dict(
        k=k,
        kappa2=kappa2,
        cosh_half=c,
        sinhc_half=s,
        p=p,
        q_over_kappa=qk,
        a_out=a_out,
        b_out=b_out,
        a_in_tr=a_in_tr,
        a_in_ref=a_in_ref,
        a_l_tr_k=1j * p * a_in_tr * ea,
        b_tr=qk * a_in_tr * ea,
        a_r_tr_k=1j * np.conj(p) * a_out * ea,
        # equals i(P A_in^ref - P* b_out) e^{ika}, written without the cancelling difference
        a_l_ref_k=-2j * k * b_out * ea / qk,
        t_coef=np.abs(a_out) ** 2,
        r_coef=np.abs(b_out) ** 2,
    )
    if k.ndim == 0:
        out = {key: (val.item() if isinstance(val, np.ndarray) else val) for key, val in out.items()}
    return AmplitudeSet(**out)


def solve(energy, barrier: BarrierSpec) -> tuple[WaveNumbers, AmplitudeSet]:
    wn = wavenumbers(energy, barrier)
    return wn, amplitudes(wn, barrier)


# ---------------------------------------------------------------------------
# wave functions
# ---------------------------------------------------------------------------

COMPONENTS = ("tr", "ref", "full")


def _regions(x, barrier, side):
    """Boolean masks (left, inner-left, inner-right, right); ``side`` breaks ties at a, x_c, b."""
    a, xc, b = barrier.a, barrier.xc, barrier.b
    if side == "left":
        left, in1, in2 = x <= a, (x > a) & (x <= xc), (x > xc) & (x <= b)
        right = x > b
    elif side == "right":
        left, in1, in2 = x < a, (x >= a) & (x < xc), (x >= xc) & (x < b)
        right = x >= b
    else:
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    return left, in1, in2, right


def evaluate(component: str, x, barrier: BarrierSpec, amps: AmplitudeSet, side: str = "left"):
    """Value and x-derivative of a subensemble wave function.

    ``x`` broadcasts against the amplitude arrays, so an ``(nx, 1)`` position
    column with amplitudes for ``nk`` energies yields ``(nx, nk)`` mode tables.
    ``side`` selects the one-sided limit at the matching points, which matters
    only for derivatives at x_c (where psi_tr and psi_ref have kinks).
    """
    if component not in COMPONENTS:
        raise ValueError(f"component must be one of {COMPONENTS}, got {component!r}")
    x = np.asarray(x, dtype=float)
    k, kappa2 = np.asarray(amps.k), np.asarray(amps.kappa2)
    a, xc, b, d = barrier.a, barrier.xc, barrier.b, barrier.d
    shape = np.broadcast_shapes(x.shape, k.shape)
    psi = np.zeros(shape, dtype=complex)
    dpsi = np.zeros(shape, dtype=complex)
    want_tr, want_ref = component in ("tr", "full"), component in ("ref", "full")
    # an (nx, 1) column against 1-d amplitudes: regions are whole rows
    by_rows = x.ndim == 2 and x.shape[1] == 1 and k.ndim == 1 and len(shape) == 2
    if by_rows:
        left, in1, in2, right = (m[:, 0] for m in _regions(x, barrier, side))
    else:
        left, in1, in2, right = _regions(np.broadcast_to(x, shape), barrier, side)

    # each region is evaluated on its own subset of points only
    def take(mask, *arrays):
        if by_rows:
            return [arr[mask] if arr is x else arr for arr in arrays]
        return [np.broadcast_to(arr, shape)[mask] for arr in arrays]

    if left.any():
        xs, ks, ain_tr, ain_ref, bo = take(left, x, k, amps.a_in_tr, amps.a_in_ref, amps.b_out)
        e = np.exp(1j * ks * xs)
        inc = np.zeros_like(e)
        if want_tr:
            inc += ain_tr * e
        back = 0.0
        if want_ref:
            inc += ain_ref * e
            back = bo * np.exp(2j * ks * a) * np.conj(e)
        psi[left] = inc + back
        dpsi[left] = 1j * ks * (inc - back)
    for mask, s0 in ((in1, a), (in2, b)):
        if not mask.any():
            continue
        xs, ks, k2s = take(mask, x, k, kappa2)
        s = xs - s0
        ch, sh = even_cosh(k2s, s), even_sinhc(k2s, s)
        if want_tr:
            amp = take(mask, amps.a_in_tr if s0 == a else amps.a_out)[0] * np.exp(1j * ks * a)
            psi[mask] = amp * (ch + 1j * ks * sh)
            dpsi[mask] = amp * (k2s * sh + 1j * ks * ch)
        if want_ref and s0 == a:
            sm = xs - xc
            alr = take(mask, amps.a_l_ref_k)[0]
            psi[mask] += alr * even_sinhc(k2s, sm)
            dpsi[mask] += alr * even_cosh(k2s, sm)
    if want_tr and right.any():
        xs, ks, ao = take(right, x, k, amps.a_out)
        w = ao * np.exp(1j * ks * (xs - d))
        psi[right] = w
        dpsi[right] = 1j * ks * w
    return psi, dpsi


def psi_tr(x, barrier, amps, side="left"):
    return evaluate("tr", x, barrier, amps, side)[0]


def psi_ref(x, barrier, amps, side="left"):
    return evaluate("ref", x, barrier, amps, side)[0]


def psi_full(x, barrier, amps, side="left"):
    return evaluate("full", x, barrier, amps, side)[0]


def psi_tr_midpoint_form(x, barrier, amps):
    """psi_tr inside [a, b] from the midpoint expansion a sinh(beta) + b cosh(beta).

    Mathematically identical to :func:`psi_tr` there; kept as an independent
    evaluation path for cross-checks on moderately thick barriers.
    """
    x = np.asarray(x, dtype=float)
    kappa2 = amps.kappa2
    beta_s = even_sinhc(kappa2, x - barrier.xc)  # sinh(beta)/kappa
    beta_c = even_cosh(kappa2, x - barrier.xc)
    a_coef = np.where(x <= barrier.xc, amps.a_l_tr_k, amps.a_r_tr_k)
    return a_coef * beta_s + amps.b_tr * beta_c


def _cauchy_data(component, amps, barrier, region):
    """(psi, psi') at the reference point of a region: a for the left two, b for the right two."""
    k = np.asarray(amps.k)
    ea = np.exp(1j * k * barrier.a)
    c1 = np.zeros(np.shape(k), dtype=complex)
    c2 = np.zeros(np.shape(k), dtype=complex)
    if region in ("left", "in1"):
        if component in ("tr", "full"):
            c1 = c1 + amps.a_in_tr * ea
            c2 = c2 + 1j * k * amps.a_in_tr * ea
        if component in ("ref", "full"):
            if region == "in1" and component == "ref":
                # psi_ref(x_c) = 0 exactly; use the midpoint as reference point
                return np.zeros_like(c1), amps.a_l_ref_k + 0j
            c1 = c1 + (amps.a_in_ref + amps.b_out) * ea
            c2 = c2 + 1j * k * (amps.a_in_ref - amps.b_out) * ea
    else:
        if component in ("tr", "full"):
            c1 = c1 + amps.a_out * ea
            c2 = c2 + 1j * k * amps.a_out * ea
    return c1, c2


def probability_flux(component: str, x, barrier: BarrierSpec, amps: AmplitudeSet):
    """Probability current (hbar/m) Im(psi* psi') in nm/fs.

    In each region psi = c1 u1 + c2 u2 with a real fundamental pair of unit
    Wronskian (cos/sin outside, cosh/sinh inside), so the current reduces to
    (hbar/m) Im(conj(c1) c2) for the region's Cauchy data.  Evaluating it that
    way avoids forming psi* psi' inside an opaque barrier, where the real part
    exceeds the current by a factor ~exp(kappa d).
    """
    if component not in COMPONENTS:
        raise ValueError(f"component must be one of {COMPONENTS}, got {component!r}")
    x = np.asarray(x, dtype=float)
    hm = barrier.velocity_scale()
    k = np.asarray(amps.k)
    x_b, _ = np.broadcast_arrays(x, k)
    masks = dict(zip(("left", "in1", "in2", "right"), _regions(x_b, barrier, "left")))
    out = np.zeros(x_b.shape)
    for region, mask in masks.items():
        c1, c2 = _cauchy_data(component, amps, barrier, region)
        j = hm * np.imag(np.conj(c1) * c2)
        out = np.where(mask, np.broadcast_to(j, x_b.shape), out)
    return float(out) if out.ndim == 0 else out


def flux_pointwise(component, x, barrier, amps, side="left"):
    """(hbar/m) Im(psi* psi') formed directly from sampled values (loses accuracy in opaque barriers)."""
    psi, dpsi = evaluate(component, x, barrier, amps, side)
    return barrier.velocity_scale() * np.imag(np.conj(psi) * dpsi)


def transmission_standard(energy, barrier: BarrierSpec):
    """Textbook transmission coefficient, written independently of the amplitude algebra."""
    wn = wavenumbers(energy, barrier)
    k2 = np.asarray(wn.k) ** 2
    kp = np.sqrt(np.abs(wn.kappa2)) * barrier.d
    k04 = barrier.kappa0_sq_signed**2
    kap2 = np.abs(wn.kappa2)
    with np.errstate(invalid="ignore", divide="ignore"):
        under = 4 * k2 * kap2 / (4 * k2 * kap2 + k04 * np.sinh(kp) ** 2)
        over = 4 * k2 * kap2 / (4 * k2 * kap2 + k04 * np.sin(kp) ** 2)
    degenerate = 1.0 / (1.0 + k04 * barrier.d**2 / (4 * k2))
    out = np.where(np.asarray(wn.kappa2) > 0, under, over)
    out = np.where(np.asarray(wn.kappa2) == 0, degenerate, out)
    return float(out) if out.ndim == 0 else out
