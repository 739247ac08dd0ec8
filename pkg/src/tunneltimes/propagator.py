"""Grid propagation of the Schrodinger equation, used to cross-check spectral synthesis.

Crank-Nicolson (Cayley) stepping with a fourth-order five-point Laplacian and
hard walls at the grid ends.  The Hamiltonian matrix is real symmetric, so the
step operator is unitary up to round-off.  A constant energy shift ``e_ref``
slows the phase rotation (smaller time-discretisation error) and is removed
exactly at output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from .constants import HBAR, HBAR2_2ME, HBAR_OVER_ME
from .scattering import BarrierSpec, InvalidInput
from .wavepacket import PacketSpec, gaussian_spectrum, initial_gaussian, synthesize

NORM_DRIFT_TOL = 1e-8


class SchemeInstability(RuntimeError):
    def __init__(self, drift: float):
        super().__init__(f"grid norm drifted by {drift:.3e} (limit {NORM_DRIFT_TOL:g})")
        self.drift = drift


def barrier_potential(x, barrier: BarrierSpec):
    """V0 inside (a, b), V0/2 on a node that sits exactly on an edge, else 0."""
    x = np.asarray(x, dtype=float)
    v = np.where((x > barrier.a) & (x < barrier.b), barrier.v0, 0.0)
    return np.where((x == barrier.a) | (x == barrier.b), 0.5 * barrier.v0, v)


def hamiltonian(n, dx, potential, mass, order=4):
    """Sparse real symmetric H = -hbar^2/(2m) D2 + V on a uniform grid with zero boundary values."""
    if order == 2:
        stencil = {0: -2.0, 1: 1.0}
    elif order == 4:
        stencil = {0: -30 / 12, 1: 16 / 12, 2: -1 / 12}
    else:
        raise InvalidInput("order must be 2 or 4")
    c = -HBAR2_2ME / mass / dx**2
    diags, offs = [], []
    for off, w in stencil.items():
        band = np.full(n - off, c * w)
        diags.append(band)
        offs.append(off)
        if off:
            diags.append(band)
            offs.append(-off)
    h = sparse.diags(diags, offs, shape=(n, n), format="csc")
    return h + sparse.diags(np.asarray(potential, dtype=float), 0, format="csc")


@dataclass
class Propagation:
    x: np.ndarray
    times: np.ndarray
    frames: np.ndarray          # (len(times), nx)
    norm_drift: float           # max |N(t) - N(0)| / N(0)


def crank_nicolson(psi0, x, potential, mass, dt, n_steps, save_every=None, e_ref=0.0, order=4,
                   drift_tol=NORM_DRIFT_TOL) -> Propagation:
    """Propagate ``psi0`` for ``n_steps`` steps of ``dt`` fs on the uniform grid ``x``."""
    x = np.asarray(x, dtype=float)
    dx = x[1] - x[0]
    if not np.allclose(np.diff(x), dx, rtol=1e-9, atol=0):
        raise InvalidInput("grid must be uniform")
    n = x.size
    h = hamiltonian(n, dx, potential, mass, order) - e_ref * sparse.identity(n, format="csc")
    tau = 0.5j * dt / HBAR
    eye = sparse.identity(n, format="csc", dtype=complex)
    lhs = splu((eye + tau * h).tocsc())
    rhs = (eye - tau * h).tocsr()

    save_every = n_steps if save_every is None else save_every
    psi = np.array(psi0, dtype=complex)
    n0 = np.sum(np.abs(psi) ** 2)
    frames, times = [psi.copy()], [0.0]
    drift = 0.0
    for step in range(1, n_steps + 1):
        psi = lhs.solve(rhs @ psi)
        if step % save_every == 0 or step == n_steps:
            drift = max(drift, abs(np.sum(np.abs(psi) ** 2) - n0) / n0)
            t = step * dt
            frames.append(psi * np.exp(-1j * e_ref * t / HBAR))
            times.append(t)
    if drift > drift_tol:
        raise SchemeInstability(drift)
    return Propagation(x, np.array(times), np.array(frames), drift)


def l2_distance(f, g, dx):
    return float(np.sqrt(np.sum(np.abs(f - g) ** 2) * dx))


@dataclass
class CrosscheckResult:
    t: float
    l2_distance: float
    norm_drift: float
    grid_norm: float
    x: np.ndarray
    grid_field: np.ndarray
    spectral_field: np.ndarray


def transit_time(spec: PacketSpec, barrier: BarrierSpec) -> float:
    """Free flight time of the packet centre from x0 to the far barrier edge b."""
    return (barrier.b - spec.x0) / (HBAR_OVER_ME / spec.mass * spec.k0)


def grid_propagator_crosscheck(spec: PacketSpec, barrier: BarrierSpec, t_max: float | None = None,
                               dx: float = 0.1, dt: float = 0.05, window: tuple[float, float] | None = None,
                               n_modes: int = 4096, order: int = 4) -> CrosscheckResult:
    """Propagate the initial Gaussian on a grid and compare with the spectral full field at ``t_max``.

    ``t_max`` defaults to 1.5 transit times.  The default window keeps 12
    spread-widths between the packet's outgoing parts and the walls.
    """
    if t_max is None:
        t_max = 1.5 * transit_time(spec, barrier)
    hm = HBAR_OVER_ME / spec.mass
    k_max = spec.k0 + 8 * spec.sigma_k
    if np.pi / k_max / dx < 8:
        # 16 points per shortest wavelength 2 pi / k_max
        raise InvalidInput("dx does not resolve the largest wavenumber")
    if window is None:
        spread = spec.halfwidth * np.sqrt(1 + (hm * t_max / (2 * spec.halfwidth**2)) ** 2)
        reach = hm * (spec.k0 + 4 * spec.sigma_k) * t_max
        lo = min(spec.x0, 2 * barrier.a - spec.x0 - reach) - 12 * spread
        hi = max(barrier.b, spec.x0 + reach) + 12 * spread
        window = (lo, hi)
    # grid aligned so that a and b fall on nodes
    lo = barrier.a - np.ceil((barrier.a - window[0]) / dx) * dx
    n = int(np.ceil((window[1] - lo) / dx)) + 1
    x = lo + dx * np.arange(n)
    n_steps = int(round(t_max / dt))
    t_max = n_steps * dt
    psi0 = initial_gaussian(spec, x)
    prop = crank_nicolson(psi0, x, barrier_potential(x, barrier), spec.mass, dt, n_steps, e_ref=spec.e0, order=order)
    grid = prop.frames[-1]
    packet = gaussian_spectrum(spec, n_modes=n_modes)
    spectral = synthesize("full", packet, barrier, x, t_max)
    return CrosscheckResult(
        t=t_max,
        l2_distance=l2_distance(grid, spectral, dx),
        norm_drift=prop.norm_drift,
        grid_norm=float(np.sum(np.abs(grid) ** 2) * dx),
        x=x,
        grid_field=grid,
        spectral_field=spectral,
    )
