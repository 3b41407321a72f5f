import numpy as np
import pytest

from nanoemit.greens import CouplingSet
from nanoemit.model import Drive, Emitter, Ensemble, Scenario


def line_ensemble(n, spacing=1.0, dipole=(0.0, 0.0, 4.0), energy=1878.7):
    ems = tuple(
        Emitter((i * spacing, 0.0, 0.0), dipole, energy) for i in range(n)
    )
    return Ensemble(ems)


def uniform_couplings(n, gamma0, omega0=0.0):
    return CouplingSet(
        omega=np.full((n, n), omega0),
        gamma=np.full((n, n), gamma0),
        k_factors=np.ones((n, n), dtype=complex),
    )


def dicke_scenario(n, gamma0=7.0, t_final=None, solver="exact"):
    """Fully inverted, uniform dissipative matrix, no coherent part, no drive."""
    from nanoemit.constants import HBAR_MEV_FS

    if t_final is None:
        t_final = 3.0 * HBAR_MEV_FS / gamma0
    ens = line_ensemble(n)
    return Scenario(
        ensemble=ens,
        couplings=uniform_couplings(n, gamma0),
        drive=Drive.off(n, 1878.7),
        t_final=t_final,
        solver=solver,
        initial_state="inverted",
    )


def total_intensity(traj):
    out = np.empty(traj.times.size)
    for j in range(traj.times.size):
        out[j] = np.real(traj.coherence_matrix(j).sum())
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(2024)
