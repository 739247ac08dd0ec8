"""Dwell and transmission times for a particle scattered by a rectangular barrier or well.

Units throughout: eV, nm, fs, and masses in units of the free electron mass.
"""

from .dwell import (
    DwellReport,
    dwell_report,
    tau_buttiker,
    tau_free,
    tau_ref_dwell,
    tau_tr_dwell,
)
from .scattering import BarrierSpec, InvalidInput, Regime, evaluate, solve, wavenumbers
from .wavepacket import (
    PacketSpec,
    expectation_trace,
    gaussian_spectrum,
    synthesize,
    transmission_times,
)

__version__ = "0.1.0"

__all__ = [
    "BarrierSpec",
    "DwellReport",
    "InvalidInput",
    "PacketSpec",
    "Regime",
    "dwell_report",
    "evaluate",
    "expectation_trace",
    "gaussian_spectrum",
    "solve",
    "synthesize",
    "tau_buttiker",
    "tau_free",
    "tau_ref_dwell",
    "tau_tr_dwell",
    "transmission_times",
    "wavenumbers",
]
