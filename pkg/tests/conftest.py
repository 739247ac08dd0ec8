import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

FIG5 = dict(v0=0.2, a=200.0, b=215.0, mass=0.067, x0=0.0, halfwidth=10.0, e0=0.05)


@pytest.fixture(scope="session")
def fig5_barrier():
    from tunneltimes.scattering import BarrierSpec

    return BarrierSpec(FIG5["v0"], FIG5["a"], FIG5["b"], FIG5["mass"])


@pytest.fixture(scope="session")
def fig5_packet():
    from tunneltimes.wavepacket import PacketSpec, gaussian_spectrum

    return gaussian_spectrum(PacketSpec(FIG5["x0"], FIG5["halfwidth"], FIG5["e0"], FIG5["mass"]))


@pytest.fixture(scope="session")
def fig5_trace(fig5_packet, fig5_barrier):
    """Transmitted-component trace of the Fig. 5 packet run, 1 fs steps to 1200 fs."""
    from tunneltimes.wavepacket import expectation_trace

    return expectation_trace("tr", fig5_packet, fig5_barrier, np.arange(0.0, 1201.0, 1.0))


# criterion number -> (verdict, title, measured values); filled by test_acceptance
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        verdict, title, detail = ACCEPTANCE[n]
        info = ", ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}" for k, v in detail.items())
        terminalreporter.write_line(f"criterion {n}: {verdict}  {title}  [{info}]")
