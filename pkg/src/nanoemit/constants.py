"""Unit system used across the package.

Energies are meV, times fs, lengths nm, dipole moments Debye.  With these
choices rates are obtained from energies by dividing by HBAR_MEV_FS, and
wavevectors from energies by dividing by HBAR_MEV_FS * C_NM_FS.
"""

import math

# hbar in meV*fs and the speed of light in nm/fs (CODATA)
HBAR_MEV_FS = 658.2119569
C_NM_FS = 299.792458

# e^2/epsilon_0 in meV*nm, i.e. 4*pi times the Coulomb constant e^2/(4 pi eps0)
E2_OVER_EPS0_MEV_NM = 18095.12

# 1 Debye expressed in e*nm
DEBYE_E_NM = 0.020819434


def wavevector_nm(energy_mev):
    """Free-space wavevector k = E / (hbar c) in 1/nm."""
    return energy_mev / (HBAR_MEV_FS * C_NM_FS)


def energy_from_wavelength(wavelength_nm):
    """Photon energy in meV for a vacuum wavelength in nm."""
    return 2.0 * math.pi * HBAR_MEV_FS * C_NM_FS / wavelength_nm


def vacuum_decay_rate_mev(dipole_debye, energy_mev):
    """Textbook free-space spontaneous-emission rate, as an energy in meV.

    Gamma_0 = omega^3 |d|^2 / (3 pi eps0 hbar c^3), expressed here as
    (e^2/eps0) k^3 |d|^2 / (3 pi) with |d| in e*nm.
    """
    k = wavevector_nm(energy_mev)
    d_enm = dipole_debye * DEBYE_E_NM
    return E2_OVER_EPS0_MEV_NM * k**3 * d_enm**2 / (3.0 * math.pi)
