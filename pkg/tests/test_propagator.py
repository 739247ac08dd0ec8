import numpy as np
import pytest

from tunneltimes.scattering import BarrierSpec, InvalidInput
from tunneltimes.propagator import (
    SchemeInstability,
    barrier_potential,
    crank_nicolson,
    grid_propagator_crosscheck,
    hamiltonian,
    l2_distance,
    transit_time,
)
from tunneltimes.wavepacket import PacketSpec, free_gaussian, initial_gaussian

M = 0.067


def test_hamiltonian_is_symmetric():
    h = hamiltonian(50, 0.1, np.linspace(0, 1, 50), M)
    assert abs(h - h.T).max() == 0


def test_fourth_order_laplacian_on_plane_wave():
    x = np.arange(400) * 0.1
    k = 0.3
    f = np.exp(1j * k * x)
    h = hamiltonian(x.size, 0.1, np.zeros_like(x), M)
    from tunneltimes.constants import HBAR2_2ME

    inner = slice(10, -10)
    assert np.allclose((h @ f)[inner], HBAR2_2ME * k * k / M * f[inner], rtol=1e-6)


def test_edge_nodes_get_half_potential():
    b = BarrierSpec(0.2, 1.0, 2.0, M)
    v = barrier_potential(np.array([0.5, 1.0, 1.5, 2.0, 2.5]), b)
    assert v.tolist() == [0.0, 0.1, 0.2, 0.1, 0.0]


def test_free_packet_matches_analytic():
    spec = PacketSpec(0.0, 10.0, 0.05, M)
    dx, dt = 0.1, 0.025
    x = -300.0 + dx * np.arange(9001)
    prop = crank_nicolson(initial_gaussian(spec, x), x, np.zeros_like(x), M, dt, 4000, e_ref=spec.e0)
    assert prop.times[-1] == pytest.approx(100.0)
    assert l2_distance(prop.frames[-1], free_gaussian(spec, x, 100.0), dx) <= 1e-6
    assert prop.norm_drift <= 1e-8


def test_single_step_preserves_norm():
    spec = PacketSpec(0.0, 10.0, 0.05, M)
    x = np.linspace(-100.0, 100.0, 2001)
    psi0 = initial_gaussian(spec, x)
    prop = crank_nicolson(psi0, x, np.zeros_like(x), M, 0.05, 1)
    n0, n1 = (np.sum(np.abs(f) ** 2) for f in prop.frames)
    assert abs(n1 - n0) <= 1e-12 * n0


def test_drift_limit_raises():
    spec = PacketSpec(0.0, 10.0, 0.05, M)
    x = np.linspace(-100.0, 100.0, 2001)
    with pytest.raises(SchemeInstability):
        crank_nicolson(initial_gaussian(spec, x), x, np.zeros_like(x), M, 0.05, 20, drift_tol=-1.0)


def test_nonuniform_grid_rejected():
    x = np.array([0.0, 0.1, 0.3, 0.4])
    with pytest.raises(InvalidInput):
        crank_nicolson(np.zeros(4, complex), x, np.zeros(4), M, 0.1, 1)


def test_transit_time():
    spec = PacketSpec(0.0, 10.0, 0.06, M)
    b = BarrierSpec(0.05, 100.0, 110.0, M)
    v = 2 * 0.0380998 / 0.6582119569 / M * spec.k0
    assert transit_time(spec, b) == pytest.approx(110.0 / v, rel=1e-12)


def test_moderate_barrier_crosscheck():
    res = grid_propagator_crosscheck(PacketSpec(0.0, 10.0, 0.06, M), BarrierSpec(0.05, 100.0, 110.0, M))
    assert res.l2_distance <= 1e-3
    assert res.norm_drift <= 1e-8
    assert res.grid_norm == pytest.approx(1.0, abs=1e-6)


def test_unresolved_grid_rejected():
    with pytest.raises(InvalidInput):
        grid_propagator_crosscheck(PacketSpec(0.0, 10.0, 0.06, M), BarrierSpec(0.05, 100.0, 110.0, M), dx=1.0)
