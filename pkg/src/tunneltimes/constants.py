"""Unit system: energies in eV, lengths in nm, times in fs, masses in electron masses."""

HBAR = 0.6582119569  # eV fs
HBAR2_2ME = 0.0380998  # hbar^2 / (2 m_e), eV nm^2
HBAR_OVER_ME = 2.0 * HBAR2_2ME / HBAR  # nm^2 / fs

# |E - V0| below this (eV) is treated as the degenerate point E = V0.
DEGENERACY_THRESHOLD = 1e-9
