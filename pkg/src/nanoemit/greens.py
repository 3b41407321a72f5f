"""Coupling matrices from dyadic Green's tensors.

The coherent matrix omega (meV) and dissipative matrix gamma (meV) follow

    omega[s,s'] = (e^2/eps0) k^2  d_s* . Re G(r_s, r_s'; E) . d_s'
    gamma[s,s'] = 2 (e^2/eps0) k^2  d_s* . Im G(r_s, r_s'; E) . d_s'

with G in 1/nm, k = E/(hbar c) and dipoles in e*nm.  Evaluators are pure
functions (r1, r2, energy_mev) -> 3x3 complex tensor; three are provided:
the analytic free-space tensor, tabulated scatterer data (zz component on
a radial grid) and a synthetic exponential profile standing in for full
electromagnetic simulations of a nanocavity.
"""

import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .constants import C_NM_FS, DEBYE_E_NM, E2_OVER_EPS0_MEV_NM, wavevector_nm
from .errors import CouplingMatrixError, DistanceRangeError, UnsupportedGeometryError

GAMMA_PSD_RTOL = 1e-10


@dataclass(frozen=True)
class CouplingSet:
    """Coherent (omega), dissipative (gamma) and far-field (k_factors) matrices.

    omega and gamma are real symmetric N x N arrays in meV; gamma carries the
    full decay rate (the master-equation dissipator applies gamma/2 factors).
    k_factors is a Hermitian complex N x N array in arbitrary radiation units.
    """

    omega: np.ndarray
    gamma: np.ndarray
    k_factors: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "omega", _readonly(np.asarray(self.omega, dtype=float)))
        object.__setattr__(self, "gamma", _readonly(np.asarray(self.gamma, dtype=float)))
        object.__setattr__(
            self, "k_factors", _readonly(np.asarray(self.k_factors, dtype=complex))
        )

    @property
    def n(self):
        return self.omega.shape[0]

    def with_k_factors(self, k):
        return replace(self, k_factors=np.asarray(k, dtype=complex))


def _readonly(a):
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


# ---------------------------------------------------------------------------
# Free-space dyadic Green's tensor
# ---------------------------------------------------------------------------


def free_space_green(r1, r2, energy_mev):
    """Homogeneous-space dyadic Green's tensor (1/nm) between two points.

    For coincident points the real part is regularized to zero (any residual
    shift is absorbed into the emitter transition energy) and the imaginary
    part takes the finite limit (k/6pi) * identity.
    """
    if energy_mev <= 0.0:
        raise ValueError("energy must be positive")
    k = wavevector_nm(energy_mev)
    rvec = np.asarray(r1, dtype=float) - np.asarray(r2, dtype=float)
    dist = np.linalg.norm(rvec)
    if dist == 0.0:
        return 1j * (k / (6.0 * math.pi)) * np.eye(3)
    kr = k * dist
    rhat = rvec / dist
    outer = np.outer(rhat, rhat)
    pref = np.exp(1j * kr) / (4.0 * math.pi * dist)
    a = 1.0 + 1j / kr - 1.0 / kr**2
    b = -1.0 - 3j / kr + 3.0 / kr**2
    return pref * (a * np.eye(3) + b * outer)


# ---------------------------------------------------------------------------
# Coupling assembly from an arbitrary evaluator
# ---------------------------------------------------------------------------


def _check_gamma_psd(gamma):
    scale = max(1.0, np.abs(gamma).max())
    evals = np.linalg.eigvalsh(0.5 * (gamma + gamma.T))
    if evals.min() < -GAMMA_PSD_RTOL * scale:
        raise CouplingMatrixError(
            "dissipative coupling matrix is not positive semidefinite "
            f"(most negative eigenvalue {evals.min():.6e} meV); "
            "refusing to build an unphysical dissipator"
        )


def couplings_from_green(ensemble, green_evaluator, k_factors=None):
    """Assemble omega/gamma for an ensemble from a Green's-tensor evaluator.

    The evaluator is called as green_evaluator(r1, r2, energy_mev) and must
    return a 3x3 complex array in 1/nm.  All emitters must share one
    transition energy.  Raises CouplingMatrixError if the resulting gamma is
    not PSD within tolerance.
    """
    energy = ensemble.common_transition_energy()
    k = wavevector_nm(energy)
    pos = ensemble.positions
    dip = ensemble.dipoles * DEBYE_E_NM  # e*nm
    n = ensemble.n
    pref = E2_OVER_EPS0_MEV_NM * k**2

    omega = np.zeros((n, n))
    gamma = np.zeros((n, n))
    for s in range(n):
        for sp in range(s, n):
            g = np.asarray(green_evaluator(pos[s], pos[sp], energy), dtype=complex)
            val_re = dip[s].conj() @ g.real @ dip[sp]
            val_im = dip[s].conj() @ g.imag @ dip[sp]
            if abs(val_re.imag) > 1e-12 * max(1.0, abs(val_re)) or abs(
                val_im.imag
            ) > 1e-12 * max(1.0, abs(val_im)):
                raise UnsupportedGeometryError(
                    "complex dipoles produce non-real couplings; only real "
                    "dipole orientations are supported"
                )
            omega[s, sp] = omega[sp, s] = pref * val_re.real
            gamma[s, sp] = gamma[sp, s] = 2.0 * pref * val_im.real
    _check_gamma_psd(gamma)
    if k_factors is None:
        k_factors = np.ones((n, n), dtype=complex)
    return CouplingSet(omega=omega, gamma=gamma, k_factors=k_factors)


# ---------------------------------------------------------------------------
# Tabulated scattered Green's tensor (zz component, radial cut)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TabulatedGreen:
    """Scattered G_zz sampled along a radial cut in the gap plane.

    radial_samples (nm) must start at 0 and ascend strictly;
    g_zz_scattered holds the complex G^s_zz(0, r) values (1/nm) and
    reference_self_term the coincident-point value G^s_zz(0, 0).
    """

    wavelength: float
    radial_samples: tuple
    g_zz_scattered: tuple
    reference_self_term: complex

    def __post_init__(self):
        r = tuple(float(x) for x in self.radial_samples)
        g = tuple(complex(x) for x in self.g_zz_scattered)
        if len(r) < 2:
            raise ValueError("need at least two radial samples")
        if len(r) != len(g):
            raise ValueError("radial_samples and g_zz_scattered differ in length")
        if r[0] != 0.0:
            raise ValueError("radial samples must start at 0")
        if any(b <= a for a, b in zip(r, r[1:])):
            raise ValueError("radial samples must ascend strictly")
        object.__setattr__(self, "radial_samples", r)
        object.__setattr__(self, "g_zz_scattered", g)
        object.__setattr__(self, "reference_self_term", complex(self.reference_self_term))

    @staticmethod
    def from_json(path):
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        return TabulatedGreen.from_dict(raw)

    @staticmethod
    def from_dict(raw):
        try:
            radial = raw["radial_nm"]
            g_re = raw["g_zz_re"]
            g_im = raw["g_zz_im"]
            wavelength = raw["wavelength_nm"]
            self_term = complex(raw["self_re"], raw["self_im"])
        except KeyError as exc:
            raise ValueError(f"tabulated Green data misses field {exc}") from exc
        if len(g_re) != len(g_im):
            raise ValueError("g_zz_re and g_zz_im differ in length")
        g = [complex(a, b) for a, b in zip(g_re, g_im)]
        return TabulatedGreen(wavelength, tuple(radial), tuple(g), self_term)

    def to_dict(self):
        return {
            "wavelength_nm": self.wavelength,
            "radial_nm": list(self.radial_samples),
            "g_zz_re": [g.real for g in self.g_zz_scattered],
            "g_zz_im": [g.imag for g in self.g_zz_scattered],
            "self_re": self.reference_self_term.real,
            "self_im": self.reference_self_term.imag,
        }

    def interpolate(self, distance):
        r = np.asarray(self.radial_samples)
        if distance > r[-1]:
            raise DistanceRangeError(
                f"distance {distance:.3f} nm exceeds last radial sample {r[-1]:.3f} nm"
            )
        g = np.asarray(self.g_zz_scattered)
        re = np.interp(distance, r, g.real)
        im = np.interp(distance, r, g.imag)
        return complex(re, im)


def _require_vertical_dipoles(ensemble):
    dip = ensemble.dipoles
    planar = np.abs(dip[:, :2])
    if planar.max() > 1e-12 * np.abs(dip).max():
        raise UnsupportedGeometryError(
            "tabulated/synthetic gap data covers vertical (z) dipoles only"
        )
    if np.abs(dip[:, 2].imag).max() > 1e-12 * np.abs(dip).max():
        raise UnsupportedGeometryError("dipoles must be real along z")


def load_tabulated_green(data, ensemble, k_factors=None):
    """Couplings from tabulated radially-symmetric scattered G_zz data.

    Emitters must lie in the gap plane with vertical dipoles.  Off-diagonal
    entries add the free-space tensor to the interpolated scattered value;
    diagonal entries use the tabulated self term alone (the free-space Lamb
    shift is treated as part of the transition energy).
    """
    _require_vertical_dipoles(ensemble)
    energy = ensemble.common_transition_energy()
    k = wavevector_nm(energy)
    pos = ensemble.positions
    if np.ptp(pos[:, 2]) > 1e-9:
        raise UnsupportedGeometryError("emitters must be coplanar in the gap plane")
    dz = ensemble.dipoles[:, 2].real * DEBYE_E_NM
    n = ensemble.n
    pref = E2_OVER_EPS0_MEV_NM * k**2

    omega = np.zeros((n, n))
    gamma = np.zeros((n, n))
    for s in range(n):
        for sp in range(s, n):
            if s == sp:
                g = data.reference_self_term
            else:
                dist = float(np.linalg.norm(pos[s] - pos[sp]))
                try:
                    g = data.interpolate(dist)
                except DistanceRangeError as exc:
                    raise DistanceRangeError(str(exc) + f" (pair {s},{sp})", pair=(s, sp))
                g = g + free_space_green(pos[s], pos[sp], energy)[2, 2]
            omega[s, sp] = omega[sp, s] = pref * g.real * dz[s] * dz[sp]
            gamma[s, sp] = gamma[sp, s] = 2.0 * pref * g.imag * dz[s] * dz[sp]
    _check_gamma_psd(gamma)
    if k_factors is None:
        k_factors = np.ones((n, n), dtype=complex)
    return CouplingSet(omega=omega, gamma=gamma, k_factors=k_factors)


# ---------------------------------------------------------------------------
# Synthetic parametric gap profile
# ---------------------------------------------------------------------------


def synthetic_plasmonic_profile(
    gamma_self,
    omega_self,
    gamma_range=10.0,
    omega_range=1.0,
    omega_sign=1,
    dipole_debye=4.0,
):
    """Green-evaluator closure mimicking a nanocavity gap response.

    Produces, for vertical dipoles of magnitude `dipole_debye`,

        gamma[s,s'] = gamma_self * exp(-|dr| / gamma_range)          (meV)
        omega[s,s'] = omega_sign * omega_self * exp(-|dr| / omega_range)
                      + free-space coherent coupling for s != s'     (meV)

    The dissipative part is deliberately long-ranged (default 10 nm) and the
    scattered coherent part short-ranged (default 1 nm), so the latter works
    against the always-negative free-space dipole-dipole term at sub-nm to
    few-nm separations.
    """
    if gamma_range <= 0.0 or omega_range <= 0.0:
        raise ValueError("profile ranges must be positive")
    if omega_sign not in (1, -1, 1.0, -1.0):
        raise ValueError("omega_sign must be +1 or -1")
    d_enm = dipole_debye * DEBYE_E_NM
    zz = np.zeros((3, 3))
    zz[2, 2] = 1.0

    def evaluator(r1, r2, energy_mev):
        k = wavevector_nm(energy_mev)
        norm = E2_OVER_EPS0_MEV_NM * k**2 * d_enm**2
        dist = float(np.linalg.norm(np.asarray(r1, float) - np.asarray(r2, float)))
        om = omega_sign * omega_self * math.exp(-dist / omega_range)
        ga = gamma_self * math.exp(-dist / gamma_range)
        g = (om / norm + 0.5j * ga / norm) * zz
        if dist > 0.0:
            g = g + free_space_green(r1, r2, energy_mev).real
        return g

    return evaluator


# ---------------------------------------------------------------------------
# Far-field propagation factors
# ---------------------------------------------------------------------------


def propagation_factors(ensemble, mode="constant", detector=None):
    """Far-field propagation matrix K.

    mode="constant" returns the all-ones matrix (valid when the emitter
    cloud is deep sub-wavelength, so inter-emitter phase factors are ~1);
    it requires parallel dipoles.  mode="free_space" evaluates the full
    detector-position expression with the free-space tensor:

        K[s,s'] = (c r^2 / 4 pi^2) (e^2/eps0)
                  [k_s'^2 G*(r, r_s') d_s'] . [k_s^2 G(r, r_s) d_s*]
    """
    n = ensemble.n
    if mode == "constant":
        dip = ensemble.dipoles
        ref = dip[0] / np.linalg.norm(dip[0])
        for s in range(1, n):
            u = dip[s] / np.linalg.norm(dip[s])
            cross = np.linalg.norm(np.cross(u, ref))
            if cross > 1e-9:
                raise UnsupportedGeometryError(
                    "constant propagation factors require parallel dipoles"
                )
        return np.ones((n, n), dtype=complex)
    if mode != "free_space":
        raise ValueError(f"unknown propagation mode {mode!r}")
    if detector is None:
        raise ValueError("free_space propagation mode needs a detector position")
    det = np.asarray(detector, dtype=float)
    pos = ensemble.positions
    dip = ensemble.dipoles * DEBYE_E_NM
    energies = ensemble.transition_energies
    r_dist = np.linalg.norm(det - pos.mean(axis=0))
    amp = np.empty((n, 3), dtype=complex)
    for s in range(n):
        k_s = wavevector_nm(energies[s])
        g = free_space_green(det, pos[s], energies[s])
        amp[s] = k_s**2 * (g @ dip[s].conj())
    pref = C_NM_FS * r_dist**2 * E2_OVER_EPS0_MEV_NM / (4.0 * math.pi**2)
    k_factors = pref * (amp.conj() @ amp.T).T
    return k_factors
