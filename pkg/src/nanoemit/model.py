"""Domain types: emitters, ensembles, drives and scenario definitions.

All values are plain immutable data in the package unit system (meV, fs,
nm, Debye).  Geometry generators place identical two-level emitters on
square or linear lattices in the z=0 plane; lattice axes are fixed to the
Cartesian x/y directions.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError

EXACT_N_LIMIT = 12

SOLVERS = ("exact", "mf1", "mf2")


def _vec3(v):
    a = np.asarray(v, dtype=float)
    if a.shape != (3,):
        raise GeometryError(f"expected a 3-vector, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class Emitter:
    """A two-level emitter: position (nm), transition dipole (Debye), energy (meV)."""

    position: tuple
    dipole: tuple
    transition_energy: float

    def __post_init__(self):
        pos = _vec3(self.position)
        dip = np.asarray(self.dipole)
        if dip.shape != (3,):
            raise GeometryError(f"dipole must be a 3-vector, got shape {dip.shape}")
        if np.linalg.norm(dip) <= 0.0:
            raise ValueError("emitter dipole must be non-zero")
        if self.transition_energy <= 0.0:
            raise ValueError("transition energy must be positive")
        object.__setattr__(self, "position", tuple(pos))
        object.__setattr__(self, "dipole", tuple(complex(x) for x in dip))

    @property
    def position_nm(self):
        return np.array(self.position, dtype=float)

    @property
    def dipole_debye(self):
        return np.array(self.dipole, dtype=complex)


@dataclass(frozen=True)
class Ensemble:
    """Ordered collection of emitters."""

    emitters: tuple
    label: str = ""

    def __post_init__(self):
        emitters = tuple(self.emitters)
        if len(emitters) < 1:
            raise ValueError("an ensemble needs at least one emitter")
        pos = np.array([e.position for e in emitters])
        for i in range(len(emitters)):
            for j in range(i + 1, len(emitters)):
                if np.allclose(pos[i], pos[j], rtol=0.0, atol=1e-12):
                    raise ValueError(f"emitters {i} and {j} share a position")
        object.__setattr__(self, "emitters", emitters)

    def __len__(self):
        return len(self.emitters)

    @property
    def n(self):
        return len(self.emitters)

    @property
    def positions(self):
        return np.array([e.position for e in self.emitters], dtype=float)

    @property
    def dipoles(self):
        return np.array([e.dipole for e in self.emitters], dtype=complex)

    @property
    def transition_energies(self):
        return np.array([e.transition_energy for e in self.emitters], dtype=float)

    def common_transition_energy(self, rtol=1e-9):
        e = self.transition_energies
        if np.ptp(e) > rtol * abs(e[0]):
            raise ValueError("ensemble emitters do not share a transition energy")
        return float(e[0])


# ---------------------------------------------------------------------------
# Drive envelopes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ContinuousEnvelope:
    kind: str = field(default="continuous", init=False)

    def __call__(self, t):
        return np.ones_like(np.asarray(t, dtype=float)) if np.ndim(t) else 1.0

    def breakpoints(self):
        return ()

    def turn_off_time(self, t_final):
        return None


@dataclass(frozen=True)
class RectangularEnvelope:
    t_on: float
    t_off: float
    kind: str = field(default="rectangular", init=False)

    def __post_init__(self):
        if not self.t_off > self.t_on:
            raise ValueError("rectangular envelope needs t_off > t_on")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        inside = (t >= self.t_on) & (t < self.t_off)
        out = inside.astype(float)
        return out if out.ndim else float(out)

    def breakpoints(self):
        return (self.t_on, self.t_off)

    def turn_off_time(self, t_final):
        return self.t_off


@dataclass(frozen=True)
class GaussianEnvelope:
    center: float
    fwhm: float
    kind: str = field(default="gaussian", init=False)

    def __post_init__(self):
        if not self.fwhm > 0.0:
            raise ValueError("gaussian envelope needs fwhm > 0")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        sigma = self.fwhm / (2.0 * math.sqrt(2.0 * math.log(2.0)))
        out = np.exp(-0.5 * ((t - self.center) / sigma) ** 2)
        return out if out.ndim else float(out)

    def breakpoints(self):
        return ()

    def turn_off_time(self, t_final):
        # effectively off two widths past the center
        return min(self.center + 2.0 * self.fwhm, t_final)


@dataclass(frozen=True)
class Drive:
    """Semi-classical optical drive in the frame rotating at the carrier.

    carrier_energy is hbar*omega_laser in meV; amplitudes holds the complex
    per-emitter excitation energies hbar*v_s in meV.
    """

    carrier_energy: float
    amplitudes: tuple
    envelope: object = field(default_factory=ContinuousEnvelope)

    def __post_init__(self):
        object.__setattr__(
            self, "amplitudes", tuple(complex(a) for a in self.amplitudes)
        )

    @property
    def amplitudes_mev(self):
        return np.array(self.amplitudes, dtype=complex)

    def detunings_mev(self, ensemble):
        """hbar*(omega_s - omega_laser) per emitter."""
        return ensemble.transition_energies - self.carrier_energy

    @staticmethod
    def off(ensemble_size, carrier_energy):
        return Drive(carrier_energy, (0.0,) * ensemble_size)


@dataclass(frozen=True)
class Scenario:
    """A complete simulation definition handed to the solvers."""

    ensemble: Ensemble
    couplings: object
    drive: Drive
    t_final: float
    solver: str = "mf2"
    initial_state: str = "ground"

    def __post_init__(self):
        if self.solver not in SOLVERS:
            raise ValueError(f"unknown solver {self.solver!r}; choose from {SOLVERS}")
        if self.initial_state not in ("ground", "inverted"):
            raise ValueError("initial_state must be 'ground' or 'inverted'")

    @property
    def n(self):
        return self.ensemble.n


# ---------------------------------------------------------------------------
# Geometry generators
# ---------------------------------------------------------------------------


def make_square_array(n_side, spacing, center, dipole, transition_energy, label=""):
    """n_side x n_side square lattice in the x-y plane centered at `center`.

    Emitters are ordered row-major (y outer, x inner).  All emitters share
    the given dipole and transition energy.
    """
    if n_side < 1:
        raise GeometryError("n_side must be >= 1")
    if not spacing > 0.0:
        raise GeometryError("spacing must be positive")
    center = _vec3(center)
    offsets = (np.arange(n_side) - (n_side - 1) / 2.0) * spacing
    emitters = []
    for y in offsets:
        for x in offsets:
            pos = center + np.array([x, y, 0.0])
            emitters.append(Emitter(tuple(pos), tuple(dipole), transition_energy))
    return Ensemble(tuple(emitters), label=label or f"square{n_side}x{n_side}")


def make_square_prefix(count, spacing, center, dipole, transition_energy, label=""):
    """First `count` sites (row-major) of the smallest enclosing square lattice.

    Used for emitter-number sweeps that grow a square array one molecule at
    a time.
    """
    if count < 1:
        raise GeometryError("count must be >= 1")
    n_side = math.ceil(math.sqrt(count))
    full = make_square_array(n_side, spacing, center, dipole, transition_energy)
    emitters = full.emitters[:count]
    return Ensemble(emitters, label=label or f"square_prefix{count}")


def make_linear_array(n, spacing, start, direction, dipole, transition_energy, label=""):
    """n collinear emitters: emitter k sits at start + k*spacing*direction."""
    if n < 1:
        raise GeometryError("n must be >= 1")
    if not spacing > 0.0:
        raise GeometryError("spacing must be positive")
    start = _vec3(start)
    direction = _vec3(direction)
    if abs(np.linalg.norm(direction) - 1.0) > 1e-12:
        raise GeometryError("direction must be a unit vector (|d| = 1 within 1e-12)")
    emitters = [
        Emitter(tuple(start + k * spacing * direction), tuple(dipole), transition_energy)
        for k in range(n)
    ]
    return Ensemble(tuple(emitters), label=label or f"linear{n}")


# ---------------------------------------------------------------------------
# Scenario validation
# ---------------------------------------------------------------------------


def validate_scenario(scenario):
    """Collect human-readable descriptions of every invariant violation.

    Diagnostic only: returns an empty list when the scenario is well formed
    and never raises.
    """
    problems = []
    ens = scenario.ensemble
    n = ens.n

    for i, e in enumerate(ens.emitters):
        if np.linalg.norm(np.asarray(e.dipole)) <= 0.0:
            problems.append(f"emitter {i}: zero dipole")
        if e.transition_energy <= 0.0:
            problems.append(f"emitter {i}: non-positive transition energy")

    pos = ens.positions
    for i in range(n):
        for j in range(i + 1, n):
            if np.allclose(pos[i], pos[j], rtol=0.0, atol=1e-12):
                problems.append(f"emitters {i} and {j} share a position")

    drive = scenario.drive
    if len(drive.amplitudes) != n:
        problems.append(
            f"drive amplitude count {len(drive.amplitudes)} does not match N={n}"
        )
    env = drive.envelope
    if getattr(env, "kind", "") == "rectangular" and not env.t_off > env.t_on:
        problems.append("rectangular envelope has t_off <= t_on")
    if getattr(env, "kind", "") == "gaussian" and not env.fwhm > 0.0:
        problems.append("gaussian envelope has non-positive fwhm")

    if not scenario.t_final > 0.0:
        problems.append("t_final must be positive")
    if scenario.solver == "exact" and n > EXACT_N_LIMIT:
        problems.append(
            f"exact solver limited to N <= {EXACT_N_LIMIT}, scenario has N={n}"
        )

    c = scenario.couplings
    if c is not None:
        omega = np.asarray(c.omega)
        gamma = np.asarray(c.gamma)
        if omega.shape != (n, n):
            problems.append(f"coherent matrix shape {omega.shape} does not match N={n}")
        if gamma.shape != (n, n):
            problems.append(
                f"dissipative matrix shape {gamma.shape} does not match N={n}"
            )
        if gamma.shape == (n, n):
            if not np.allclose(gamma, gamma.T, atol=1e-10 * max(1.0, np.abs(gamma).max())):
                problems.append("dissipative matrix not symmetric")
            else:
                evals = np.linalg.eigvalsh(gamma)
                tol = 1e-10 * max(1.0, np.abs(gamma).max())
                if evals.min() < -tol:
                    problems.append(
                        "dissipative matrix not PSD "
                        f"(most negative eigenvalue {evals.min():.3e} meV)"
                    )
        if omega.shape == (n, n) and not np.allclose(
            omega, omega.T, atol=1e-10 * max(1.0, np.abs(omega).max())
        ):
            problems.append("coherent matrix not symmetric")
        k = getattr(c, "k_factors", None)
        if k is not None:
            k = np.asarray(k)
            if k.shape != (n, n):
                problems.append(f"propagation matrix shape {k.shape} does not match N={n}")
            elif not np.allclose(k, k.conj().T, atol=1e-10 * max(1.0, np.abs(k).max())):
                problems.append("propagation matrix not Hermitian")
    return problems
