"""Time-dependent scattering of a Gaussian packet, synthesised from stationary modes.

Each subensemble field is the superposition

    psi_c(x, t) = (2 pi)^(-1/2) sum_j w_j c(k_j) psi_c(x; k_j) exp(-i E_j t / hbar)

over a uniform, trapezoid-weighted k grid, where ``psi_c(x; k)`` is the unit
incident stationary mode of :mod:`tunneltimes.scattering`.  Position moments
come from Gauss-Legendre panels aligned with a, x_c and b; momentum moments use
the analytic x-derivative of the modes.

The transmitted field is not a solution of the Schrodinger equation at x_c
(its modes have a derivative kink there), so its norm and mean energy change
while the packet is inside the barrier.  Both are reported as computed; the
spectral values sum |c|^2 T and sum |c|^2 T E / sum |c|^2 T are what the trace
relaxes to before arrival and after departure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import erfc

from .constants import HBAR, HBAR2_2ME, HBAR_OVER_ME
from .numerics import LineFit, find_root_bracketed, fit_line
from .scattering import BarrierSpec, COMPONENTS, InvalidInput, amplitudes, evaluate, wavenumbers_from_k

TRUNCATION_WARNING = 1e-3
WINDOW_LEAK_TOL = 1e-6


class WindowOverflow(RuntimeError):
    """Too much of the packet lies outside the integration window."""

    def __init__(self, leaked_fraction: float, time: float):
        super().__init__(f"{leaked_fraction:.3e} of the component norm leaks out of the window at t={time} fs")
        self.leaked_fraction = leaked_fraction
        self.time = time


class InsufficientSpan(RuntimeError):
    """The simulated time span does not contain the required crossings or fit windows."""


@dataclass(frozen=True)
class PacketSpec:
    """Initial Gaussian: amplitude envelope exp(-(x-x0)^2 / (4 l^2)), mean kinetic energy ``e0``.

    ``halfwidth`` is l, the standard deviation of the probability density.
    """

    x0: float
    halfwidth: float
    e0: float
    mass: float = 0.067

    def __post_init__(self):
        if not self.halfwidth > 0:
            raise InvalidInput("halfwidth must be positive")
        if not self.e0 > 0:
            raise InvalidInput("e0 must be positive")
        if not self.mass > 0:
            raise InvalidInput("mass must be positive")

    @property
    def k0(self) -> float:
        return float(np.sqrt(self.mass * self.e0 / HBAR2_2ME))

    @property
    def sigma_k(self) -> float:
        return 1.0 / (2.0 * self.halfwidth)


@dataclass(frozen=True)
class SpectralPacket:
    spec: PacketSpec
    k_grid: np.ndarray
    weights: np.ndarray          # c(k), normalised so that sum(dk_weights |c|^2) = 1
    dk_weights: np.ndarray       # trapezoid weights
    norm: float                  # sum before renormalisation
    truncated_weight: float      # Gaussian weight outside the k grid
    truncation_warning: bool

    @property
    def mass(self):
        return self.spec.mass

    @property
    def energies(self):
        return HBAR2_2ME * self.k_grid**2 / self.mass

    def amplitudes(self, barrier: BarrierSpec):
        return amplitudes(wavenumbers_from_k(self.k_grid, barrier), barrier)

    def spectral_norm(self, barrier: BarrierSpec | None = None, component="full"):
        """Asymptotic component norm: sum |c|^2 (full) or sum |c|^2 T (tr) or sum |c|^2 R (ref)."""
        return float(np.sum(self.dk_weights * np.abs(self.weights) ** 2 * self._prob(barrier, component)))

    def spectral_mean(self, values, barrier: BarrierSpec | None = None, component="full"):
        p = self.dk_weights * np.abs(self.weights) ** 2 * self._prob(barrier, component)
        return float(np.sum(p * values) / np.sum(p))

    def _prob(self, barrier, component):
        if component == "full" or barrier is None:
            return 1.0
        amps = self.amplitudes(barrier)
        return amps.t_coef if component == "tr" else amps.r_coef


def gaussian_spectrum(spec: PacketSpec, n_modes: int = 4096, span: float = 8.0, k_floor: float = 1e-6) -> SpectralPacket:
    """Momentum amplitudes of the initial Gaussian on [max(k_floor, k0 - span s), k0 + span s].

    c(k) = (2 l^2/pi)^(1/4) exp(-(k - k0)^2 l^2) exp(-i k x0), renormalised on
    the grid.  Left-moving components (k <= k_floor) are dropped and their
    weight reported.
    """
    if n_modes < 2:
        raise InvalidInput("n_modes must be >= 2")
    k0, s = spec.k0, spec.sigma_k
    lo, hi = max(k_floor, k0 - span * s), k0 + span * s
    k = np.linspace(lo, hi, n_modes)
    dk = k[1] - k[0]
    w = np.full(n_modes, dk)
    w[0] = w[-1] = 0.5 * dk
    l = spec.halfwidth
    c = (2 * l * l / np.pi) ** 0.25 * np.exp(-((k - k0) ** 2) * l * l) * np.exp(-1j * k * spec.x0)
    norm = float(np.sum(w * np.abs(c) ** 2))
    # |c|^2 is a normal density with standard deviation s
    truncated = 0.5 * erfc((k0 - lo) / (np.sqrt(2) * s)) + 0.5 * erfc((hi - k0) / (np.sqrt(2) * s))
    return SpectralPacket(spec, k, c / np.sqrt(norm), w, norm, float(truncated), bool(truncated > TRUNCATION_WARNING))


def initial_gaussian(spec: PacketSpec, x):
    """The t = 0 packet in position space, with the same phase convention as the spectrum."""
    x = np.asarray(x, dtype=float)
    l = spec.halfwidth
    return (2 * np.pi * l * l) ** -0.25 * np.exp(-((x - spec.x0) ** 2) / (4 * l * l) + 1j * spec.k0 * (x - spec.x0))


def free_gaussian(spec: PacketSpec, x, t):
    """Exact free evolution of :func:`initial_gaussian`."""
    x = np.asarray(x, dtype=float)
    l, k0 = spec.halfwidth, spec.k0
    hm = HBAR_OVER_ME / spec.mass
    z = 1 + 1j * hm * t / (2 * l * l)
    y = x - spec.x0
    arg = (-((y - hm * k0 * t) ** 2) / (4 * l * l * z)) + 1j * k0 * y - 1j * hm * k0**2 * t / 2
    return (2 * np.pi * l * l) ** -0.25 / np.sqrt(z) * np.exp(arg)


# ---------------------------------------------------------------------------
# synthesis
# ---------------------------------------------------------------------------


def time_factors(packet: SpectralPacket, t):
    """(nk, nt) matrix of w_j c_j exp(-i E_j t / hbar) / sqrt(2 pi)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    base = packet.dk_weights * packet.weights / np.sqrt(2 * np.pi)
    return base[:, None] * np.exp(-1j * packet.energies[:, None] * t[None, :] / HBAR)


def mode_table(component, packet: SpectralPacket, barrier: BarrierSpec, x, amps=None):
    """Stationary modes and their derivatives on ``x``: two (nx, nk) arrays."""
    if barrier.mass != packet.mass:
        raise InvalidInput("packet and barrier masses differ")
    amps = packet.amplitudes(barrier) if amps is None else amps
    x = np.asarray(x, dtype=float)
    return evaluate(component, x[:, None], barrier, amps)


def synthesize(component, packet: SpectralPacket, barrier: BarrierSpec, x, t, derivative=False, chunk=1024):
    """Field samples psi_c(x, t); shape (nx,) for scalar t, else (nx, nt)."""
    x = np.asarray(x, dtype=float)
    phases = time_factors(packet, t)
    amps = packet.amplitudes(barrier)
    out = np.empty((x.size, phases.shape[1]), dtype=complex)
    dout = np.empty_like(out) if derivative else None
    for i in range(0, x.size, chunk):
        psi, dpsi = mode_table(component, packet, barrier, x[i : i + chunk], amps)
        out[i : i + chunk] = psi @ phases
        if derivative:
            dout[i : i + chunk] = dpsi @ phases
    if np.ndim(t) == 0:
        out = out[:, 0]
        dout = dout[:, 0] if derivative else None
    return (out, dout) if derivative else out


# ---------------------------------------------------------------------------
# quadrature grid
# ---------------------------------------------------------------------------


def panel_grid(lo, hi, breakpoints=(), panel=2.0, inner_panel=None, inner=None, order=8):
    """Gauss-Legendre nodes and weights on panels aligned with ``breakpoints``.

    Panels inside the interval ``inner`` use length ``inner_panel``.
    """
    xs, ws = np.polynomial.legendre.leggauss(order)
    cuts = sorted({float(lo), float(hi), *(float(p) for p in breakpoints if lo < p < hi)})
    nodes, weights = [], []
    for p, q in zip(cuts[:-1], cuts[1:]):
        h = panel
        if inner is not None and inner_panel is not None and p >= inner[0] and q <= inner[1]:
            h = inner_panel
        edges = np.linspace(p, q, max(1, int(np.ceil((q - p) / h))) + 1)
        mid, half = 0.5 * (edges[1:] + edges[:-1]), 0.5 * np.diff(edges)
        nodes.append((mid[:, None] + half[:, None] * xs[None, :]).ravel())
        weights.append((half[:, None] * ws[None, :]).ravel())
    return np.concatenate(nodes), np.concatenate(weights)


def auto_window(component, packet: SpectralPacket, barrier: BarrierSpec, t_max: float,
                tail: float = 1e-9, samples: int = 7, step: float = 1.0, max_doublings: int = 6):
    """Position window holding all but ``tail`` of the component over [0, t_max].

    An interval around the packet's classical reach is scanned on a coarse
    grid at a few times and cut where the cumulative density on either side
    stays below ``tail``.  The padding doubles on a side whose cut lands in
    the outer half of the padding (slow exponential tails of the transmitted
    component need this).  The final trace re-checks the choice with guard
    strips.
    """
    spec = packet.spec
    hm = HBAR_OVER_ME / spec.mass
    reach = hm * packet.k_grid[-1] * t_max
    core_lo = min(barrier.a, spec.x0)
    if component != "tr":
        core_lo = min(core_lo, 2 * barrier.a - spec.x0 - reach)
    core_hi = max(barrier.b, spec.x0 + reach)
    pad_lo = pad_hi = 20 * spec.halfwidth + hm * spec.sigma_k * t_max
    times = np.linspace(0.0, t_max, samples)
    for _ in range(max_doublings + 1):
        x = np.arange(np.floor(core_lo - pad_lo), np.ceil(core_hi + pad_hi) + step, step)
        rho = np.abs(synthesize(component, packet, barrier, x, times)) ** 2
        cum = np.cumsum(rho, axis=0)
        total = cum[-1]
        i_lo = np.nonzero(np.all(cum <= tail * total, axis=1))[0]
        i_hi = np.nonzero(np.all(total - cum <= tail * total, axis=1))[0]
        lo = x[i_lo[-1]] if i_lo.size else x[0]
        hi = x[i_hi[0]] if i_hi.size else x[-1]
        grow_lo = lo < core_lo - 0.5 * pad_lo
        grow_hi = hi > core_hi + 0.5 * pad_hi
        if not (grow_lo or grow_hi):
            break
        pad_lo *= 2 if grow_lo else 1
        pad_hi *= 2 if grow_hi else 1
    lo = min(lo, barrier.a - 10 * step)
    hi = max(hi, barrier.b + 10 * step)
    return float(np.floor(lo)), float(np.ceil(hi))


# ---------------------------------------------------------------------------
# expectation trace
# ---------------------------------------------------------------------------


@dataclass
class PacketTrace:
    component: str
    times: np.ndarray
    norm: np.ndarray
    x_mean: np.ndarray            # nm
    p_mean: np.ndarray            # mean momentum / hbar, nm^-1
    p_var: np.ndarray             # momentum variance / hbar^2, nm^-2
    k_mean_energy: np.ndarray     # eV
    v_mean_energy: np.ndarray     # eV
    h_mean_energy: np.ndarray     # eV
    frac_left: np.ndarray         # fraction of the component norm at x < a
    frac_right: np.ndarray        # fraction at x > b
    leaked_fraction: float
    window: tuple[float, float]
    spectral_norm: float
    spectral_energy: float
    mass: float
    meta: dict = field(default_factory=dict)

    @property
    def frac_barrier(self):
        return 1.0 - self.frac_left - self.frac_right

    @property
    def max_h_drift(self):
        h = self.h_mean_energy
        return float(np.max(np.abs(h - h[0])) / abs(h[0]))

    def rows(self):
        return zip(
            self.times, self.x_mean, self.norm, self.p_mean, self.p_var,
            self.k_mean_energy, self.v_mean_energy, self.h_mean_energy,
        )


def _moment_chunk(component, packet, barrier, amps, x, w, phases):
    """Partial position-space sums for one block of quadrature nodes.

    Returns an (8, nt) array: norm, x-moment, current, |psi'|^2, barrier mass,
    left mass, right mass, and (unused slot kept zero).
    """
    psi, dpsi = mode_table(component, packet, barrier, x, amps)
    f = psi @ phases
    df = dpsi @ phases
    rho = np.abs(f) ** 2
    out = np.zeros((8, phases.shape[1]))
    out[0] = w @ rho
    out[1] = (w * x) @ rho
    out[2] = w @ np.imag(np.conj(f) * df)
    out[3] = w @ (np.abs(df) ** 2)
    inside = (x > barrier.a) & (x < barrier.b)
    out[4] = w[inside] @ rho[inside]
    out[5] = w[x < barrier.a] @ rho[x < barrier.a]
    out[6] = w[x > barrier.b] @ rho[x > barrier.b]
    return out


def expectation_trace(
    component: str,
    packet: SpectralPacket,
    barrier: BarrierSpec,
    times,
    window: tuple[float, float] | None = None,
    panel: float = 2.0,
    inner_panel: float = 0.5,
    guard: float = 100.0,
    chunk: int = 512,
    leak_tol: float = WINDOW_LEAK_TOL,
    map_fn: Callable = map,
) -> PacketTrace:
    """Position, momentum and energy moments of one component over ``times`` (fs).

    The work is split into independent blocks of quadrature nodes (``map_fn``
    may be a parallel map); the per-block sums are reduced in block order, so
    the result does not depend on the execution order.  Guard strips of width
    ``guard`` on both sides of the window measure the norm that escapes it;
    above ``leak_tol`` a :class:`WindowOverflow` is raised.
    """
    if component not in COMPONENTS:
        raise ValueError(f"component must be one of {COMPONENTS}")
    times = np.asarray(times, dtype=float)
    if window is None:
        window = auto_window(component, packet, barrier, float(times.max()))
    lo, hi = window
    if not (lo < barrier.a and hi > barrier.b):
        raise InvalidInput("window must contain the barrier")
    brk = (barrier.a, barrier.xc, barrier.b)
    xw, ww = panel_grid(lo, hi, brk, panel, inner_panel, (barrier.a, barrier.b))
    xg_l, wg_l = panel_grid(lo - guard, lo, (), panel)
    xg_r, wg_r = panel_grid(hi, hi + guard, (), panel)
    amps = packet.amplitudes(barrier)
    phases = time_factors(packet, times)

    blocks = [(xw[i : i + chunk], ww[i : i + chunk]) for i in range(0, xw.size, chunk)]
    guards = [(xg_l, wg_l), (xg_r, wg_r)]
    work = lambda xb: _moment_chunk(component, packet, barrier, amps, xb[0], xb[1], phases)
    partial = list(map_fn(work, blocks))
    gpartial = list(map_fn(work, guards))
    sums = np.zeros_like(partial[0])
    for p in partial:
        sums += p
    leak = (gpartial[0][0] + gpartial[1][0]) / (sums[0] + gpartial[0][0] + gpartial[1][0])
    worst = int(np.argmax(leak))
    if leak[worst] > leak_tol:
        raise WindowOverflow(float(leak[worst]), float(times[worst]))

    n = sums[0]
    x_mean = sums[1] / n
    p_mean = sums[2] / n
    p2 = sums[3] / n
    p_var = p2 - p_mean**2
    kin = HBAR2_2ME / packet.mass * p2
    pot = barrier.v0 * sums[4] / n
    k_spec = packet.energies
    return PacketTrace(
        component=component,
        times=times,
        norm=n,
        x_mean=x_mean,
        p_mean=p_mean,
        p_var=p_var,
        k_mean_energy=kin,
        v_mean_energy=pot,
        h_mean_energy=kin + pot,
        frac_left=sums[5] / n,
        frac_right=sums[6] / n,
        leaked_fraction=float(leak.max()),
        window=(float(lo), float(hi)),
        spectral_norm=packet.spectral_norm(barrier, component),
        spectral_energy=packet.spectral_mean(k_spec, barrier, component),
        mass=packet.mass,
    )


# ---------------------------------------------------------------------------
# transmission times
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TransmissionTimes:
    t_enter: float
    t_exit: float
    exact_time: float
    asymptotic_time: float
    tau_free_ref: float
    early_fit: LineFit | None = None
    late_fit: LineFit | None = None

    @property
    def asymptotic_velocity(self):
        return self.late_fit.slope if self.late_fit else float("nan")


def _crossing(spline, times, values, level, start):
    """First upward crossing of ``level`` at or after sample index ``start``."""
    above = values >= level
    for i in range(max(start, 1), len(times)):
        if above[i] and not above[i - 1]:
            return find_root_bracketed(lambda t: float(spline(t)) - level, times[i - 1], times[i], tol=1e-10), i
    return None, None


def exact_transmission_time(trace: PacketTrace, barrier: BarrierSpec) -> tuple[float, float]:
    """(t_enter, t_exit): ``x_mean`` first reaching a, then b, on a cubic interpolant of the trace."""
    t, x = trace.times, trace.x_mean
    spline = CubicSpline(t, x)
    t_in, i_in = _crossing(spline, t, x, barrier.a, 1)
    if t_in is None:
        raise InsufficientSpan("mean position never crosses the left barrier edge")
    t_out, _ = _crossing(spline, t, x, barrier.b, i_in)
    if t_out is None:
        raise InsufficientSpan("mean position never crosses the right barrier edge")
    return t_in, t_out


def asymptote_windows(trace: PacketTrace, early_tol: float = 1e-6, late_tol: float = 1e-3, min_samples: int = 5):
    """Sample masks for the incident (left of a) and outgoing (right of b) stages.

    Early: the fraction of the component at x > a is below ``early_tol``, up to
    the first sample that violates it.  Late: the fraction at x < b is below
    ``late_tol`` from some sample to the end of the trace.  The looser late
    tolerance reflects the slow release of the part stored in the barrier.
    """
    outside_left = 1.0 - trace.frac_left
    early = np.zeros(trace.times.size, bool)
    bad = np.nonzero(outside_left > early_tol)[0]
    early[: bad[0] if bad.size else trace.times.size] = True
    behind = 1.0 - trace.frac_right
    late = np.zeros(trace.times.size, bool)
    bad = np.nonzero(behind > late_tol)[0]
    late[(bad[-1] + 1) if bad.size else 0 :] = True
    if early.sum() < min_samples or late.sum() < min_samples:
        raise InsufficientSpan(
            f"asymptotic fit windows too short (early {early.sum()}, late {late.sum()} samples)"
        )
    return early, late


def asymptotic_transmission_time(trace: PacketTrace, barrier: BarrierSpec, **window_kw):
    """Late-asymptote arrival at b minus early-asymptote arrival at a, plus both fits."""
    early, late = asymptote_windows(trace, **window_kw)
    fe = fit_line(np.column_stack([trace.times[early], trace.x_mean[early]]))
    fl = fit_line(np.column_stack([trace.times[late], trace.x_mean[late]]))
    return fl.solve(barrier.b) - fe.solve(barrier.a), fe, fl


def transmission_times(trace: PacketTrace, barrier: BarrierSpec, **window_kw) -> TransmissionTimes:
    t_in, t_out = exact_transmission_time(trace, barrier)
    asym, fe, fl = asymptotic_transmission_time(trace, barrier, **window_kw)
    return TransmissionTimes(
        t_enter=t_in,
        t_exit=t_out,
        exact_time=t_out - t_in,
        asymptotic_time=asym,
        tau_free_ref=barrier.d / fl.slope,
        early_fit=fe,
        late_fit=fl,
    )


def velocity_ceiling(barrier: BarrierSpec) -> float:
    """sqrt(2 m V0)/m in nm/fs; reported, never enforced."""
    return HBAR_OVER_ME / barrier.mass * barrier.kappa0
