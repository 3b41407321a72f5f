"""Collective-emission simulator for quantum emitters in nanophotonic environments.

Core pieces: geometry and drive definitions (model), coupling-matrix
construction from dyadic Green's tensors (greens), symbolic derivation of
cumulant-closed moment equations (algebra), a fast compiled integrator for
those equations (meanfield), a brute-force density-matrix solver used as an
oracle (exact), far-field and collective-spin observables (observables),
pulse metrics and scaling fits (pulses), and a config-driven runner exposed
through a FastAPI service plus a thin CLI client.
"""

__version__ = "0.1.0"

from .greens import (
    CouplingSet,
    TabulatedGreen,
    couplings_from_green,
    free_space_green,
    load_tabulated_green,
    propagation_factors,
    synthetic_plasmonic_profile,
)
from .meanfield import solve_scenario
from .model import (
    Drive,
    Emitter,
    Ensemble,
    Scenario,
    make_linear_array,
    make_square_array,
    make_square_prefix,
    validate_scenario,
)
from .observables import collective_spin, far_field_intensity
from .pulses import pulse_metrics, scaling_fit

__all__ = [
    "CouplingSet",
    "TabulatedGreen",
    "couplings_from_green",
    "free_space_green",
    "load_tabulated_green",
    "propagation_factors",
    "synthetic_plasmonic_profile",
    "solve_scenario",
    "Drive",
    "Emitter",
    "Ensemble",
    "Scenario",
    "make_linear_array",
    "make_square_array",
    "make_square_prefix",
    "validate_scenario",
    "collective_spin",
    "far_field_intensity",
    "pulse_metrics",
    "scaling_fit",
    "__version__",
]
