"""Brute-force density-matrix solver on the full 2^N space.

Serves as the oracle the cumulant solver is validated against.  Basis
states are integers whose bit s is set when emitter s is excited.  The
right-hand side applies sparse operators to the dense density matrix
(the 4^N x 4^N superoperator is never materialized), so the same code path
covers every N up to the hard guard.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.integrate import RK45

from .constants import HBAR_MEV_FS
from .errors import IntegrationError, ResourceGuardError
from .model import EXACT_N_LIMIT
from . import algebra

DEFAULT_RTOL = 1e-7
DEFAULT_ATOL = 1e-9


# ---------------------------------------------------------------------------
# Sparse operator construction (bit-mask based)
# ---------------------------------------------------------------------------


def lowering_matrix(n_sites, s):
    """sigma^12_s = |ground_s><excited_s| on the 2^N basis."""
    dim = 1 << n_sites
    x = np.arange(dim)
    has = (x >> s) & 1 == 1
    cols = x[has]
    rows = cols & ~(1 << s)
    data = np.ones(rows.size)
    return sp.csr_matrix((data, (rows, cols)), shape=(dim, dim))


def projector_matrix(n_sites, s):
    dim = 1 << n_sites
    x = np.arange(dim)
    diag = ((x >> s) & 1).astype(float)
    return sp.diags(diag).tocsr()


def hop_matrix(n_sites, a, b):
    """sigma^21_a sigma^12_b."""
    if a == b:
        return projector_matrix(n_sites, a)
    dim = 1 << n_sites
    x = np.arange(dim)
    mask = (((x >> b) & 1) == 1) & (((x >> a) & 1) == 0)
    cols = x[mask]
    rows = (cols & ~(1 << b)) | (1 << a)
    data = np.ones(rows.size)
    return sp.csr_matrix((data, (rows, cols)), shape=(dim, dim))


@dataclass
class ExactGenerators:
    """Precomputed sparse pieces of the master equation (rate units, 1/fs)."""

    n_sites: int
    h_static: sp.csr_matrix
    h_drive: sp.csr_matrix
    b_ops: list         # B_s = sum_s' (Gamma[s,s']/hbar) sigma^12_s'
    lower_ops: list     # sigma^12_s (used for right-multiplication by sigma^21_s)
    m_half: sp.csr_matrix  # (1/2) sum_ss' (Gamma[s,s']/hbar) sigma^21_s sigma^12_s'
    envelope: object

    @property
    def dim(self):
        return 1 << self.n_sites


def build_generators(scenario):
    """Rotating-frame Hamiltonian pieces and dissipator structure.

    H = sum_s delta_s s22_s - sum_ss' omega_ss' s21_s s12_s'
        + envelope(t) * sum_s (v_s s21_s + v_s* s12_s)
    returned as static + envelope-scaled drive parts; the dissipator keeps
    the pairwise gamma form.
    """
    n = scenario.n
    if n > EXACT_N_LIMIT:
        raise ResourceGuardError(
            f"exact solver limited to N <= {EXACT_N_LIMIT} (got N={n}); "
            "use the cumulant solver for larger ensembles"
        )
    ens = scenario.ensemble
    drive = scenario.drive
    omega = np.asarray(scenario.couplings.omega) / HBAR_MEV_FS
    gamma = np.asarray(scenario.couplings.gamma) / HBAR_MEV_FS
    delta = drive.detunings_mev(ens) / HBAR_MEV_FS
    v = drive.amplitudes_mev / HBAR_MEV_FS

    dim = 1 << n
    h_static = sp.csr_matrix((dim, dim), dtype=complex)
    for s in range(n):
        h_static = h_static + delta[s] * projector_matrix(n, s)
    for a in range(n):
        for b in range(n):
            if omega[a, b] != 0.0:
                h_static = h_static - omega[a, b] * hop_matrix(n, a, b).astype(complex)

    h_drive = sp.csr_matrix((dim, dim), dtype=complex)
    for s in range(n):
        if v[s] != 0.0:
            low = lowering_matrix(n, s).astype(complex)
            h_drive = h_drive + v[s] * low.T + np.conj(v[s]) * low

    lower_ops = [lowering_matrix(n, s) for s in range(n)]
    b_ops = []
    for s in range(n):
        b = sp.csr_matrix((dim, dim))
        for sq in range(n):
            if gamma[s, sq] != 0.0:
                b = b + gamma[s, sq] * lower_ops[sq]
        b_ops.append(b.tocsr())

    m_half = sp.csr_matrix((dim, dim))
    for s in range(n):
        for sq in range(n):
            if gamma[s, sq] != 0.0:
                m_half = m_half + 0.5 * gamma[s, sq] * hop_matrix(n, s, sq)
    m_half = m_half.tocsr()

    return ExactGenerators(
        n_sites=n,
        h_static=h_static.tocsr(),
        h_drive=h_drive.tocsr(),
        b_ops=b_ops,
        lower_ops=lower_ops,
        m_half=m_half,
        envelope=drive.envelope,
    )


def master_rhs(gen, t, rho):
    """d(rho)/dt for the full master equation, rho as a dense matrix."""
    hs = gen.h_static
    out = -1j * (hs @ rho - (hs.T @ rho.T).T)
    if gen.h_drive.nnz:
        e = float(gen.envelope(t))
        if e != 0.0:
            hd = gen.h_drive
            out = out - 1j * e * (hd @ rho - (hd.T @ rho.T).T)
    for s in range(gen.n_sites):
        b = gen.b_ops[s]
        if b.nnz:
            # B_s rho sigma^21_s, via (sigma^12_s (B_s rho)^T)^T
            out = out + (gen.lower_ops[s] @ (b @ rho).T).T
    mh = gen.m_half
    out = out - (mh @ rho + (mh.T @ rho.T).T)
    return out


def collective_jump_rhs(scenario, gen=None):
    """Dissipator via eigen-decomposition of gamma into collective jumps.

    Returns a closure rhs(t, rho) equivalent to master_rhs; used to verify
    that the pairwise form matches the diagonalized form.
    """
    if gen is None:
        gen = build_generators(scenario)
    n = scenario.n
    gamma = np.asarray(scenario.couplings.gamma) / HBAR_MEV_FS
    rates, vecs = np.linalg.eigh(0.5 * (gamma + gamma.T))
    jumps = []
    for k in range(n):
        if abs(rates[k]) < 1e-18:
            continue
        l_k = sp.csr_matrix(gen.lower_ops[0].shape)
        for sq in range(n):
            l_k = l_k + vecs[sq, k] * gen.lower_ops[sq]
        jumps.append((rates[k], l_k.tocsr(), (l_k.conj().T @ l_k).tocsr()))

    def rhs(t, rho):
        hs = gen.h_static
        out = -1j * (hs @ rho - (hs.T @ rho.T).T)
        if gen.h_drive.nnz:
            e = float(gen.envelope(t))
            if e != 0.0:
                hd = gen.h_drive
                out = out - 1j * e * (hd @ rho - (hd.T @ rho.T).T)
        for rate, l_k, ldl in jumps:
            # L rho L^dagger, right multiplication via (conj(L) (L rho)^T)^T
            out = out + rate * (l_k.conj() @ (l_k @ rho).T).T
            out = out - 0.5 * rate * (ldl @ rho + (ldl.T @ rho.T).T)
        return out

    return rhs


# ---------------------------------------------------------------------------
# Initial states and expectation values
# ---------------------------------------------------------------------------


def initial_density_matrix(n_sites, which="ground"):
    dim = 1 << n_sites
    rho = np.zeros((dim, dim), dtype=complex)
    if which == "ground":
        rho[0, 0] = 1.0
    elif which == "inverted":
        rho[dim - 1, dim - 1] = 1.0
    else:
        raise ValueError(f"unknown initial state {which!r}")
    return rho


def exact_expectations(rho, products):
    """tr(rho P) for canonical operator products, via index gymnastics.

    Each product maps basis states one-to-one on its domain, so the trace
    reduces to a gather over matrix entries.
    """
    dim = rho.shape[0]
    x = np.arange(dim)
    out = np.empty(len(products), dtype=complex)
    for i, product in enumerate(products):
        mask = np.ones(dim, dtype=bool)
        y = x.copy()
        for site, kind in product.factors:
            bit = 1 << site
            if kind == algebra.LOWER:
                mask &= (x & bit) != 0
                y = y & ~bit
            elif kind == algebra.RAISE:
                mask &= (x & bit) == 0
                y = y | bit
            else:  # PROJECT
                mask &= (x & bit) != 0
        out[i] = rho[x[mask], y[mask]].sum()
    return out


def dicke_state(n_sites, n_excitations):
    """Symmetric Dicke state |J=N/2, M=-N/2+n_exc> as a density matrix."""
    dim = 1 << n_sites
    psi = np.zeros(dim, dtype=complex)
    x = np.arange(dim)
    weights = np.array([bin(i).count("1") for i in range(dim)])
    sel = x[weights == n_excitations]
    psi[sel] = 1.0 / math.sqrt(sel.size)
    return np.outer(psi, psi.conj())


# ---------------------------------------------------------------------------
# Propagation
# ---------------------------------------------------------------------------


@dataclass
class ExactRun:
    times: np.ndarray
    states: list  # dense density matrices at output times (None if streamed)


def propagate_exact(
    scenario,
    output_dt,
    rtol=DEFAULT_RTOL,
    atol=DEFAULT_ATOL,
    observer=None,
    store_states=True,
    rhs=None,
):
    """Adaptive RK45 propagation of the master equation.

    Samples the solution on the uniform grid 0, output_dt, ..., t_final via
    the integrator's dense output.  `observer(t, rho)` is called at every
    grid point; with store_states=False only the observer sees the states
    (memory stays bounded at one density matrix).
    Integration restarts at envelope discontinuities.
    """
    gen = build_generators(scenario)
    if rhs is None:
        def rhs(t, rho):
            return master_rhs(gen, t, rho)
    dim = gen.dim
    rho = initial_density_matrix(scenario.n, scenario.initial_state)
    t_final = float(scenario.t_final)
    grid = np.arange(0.0, t_final + 0.5 * output_dt, output_dt)
    grid = grid[grid <= t_final + 1e-12]

    def fun(t, y):
        return rhs(t, y.reshape(dim, dim)).reshape(-1)

    # integration segments split at envelope discontinuities
    breaks = [b for b in scenario.drive.envelope.breakpoints() if 0.0 < b < t_final]
    edges = [0.0] + sorted(breaks) + [t_final]

    times_out = []
    states_out = []

    def emit(t, y):
        rho_t = y.reshape(dim, dim)
        times_out.append(t)
        if observer is not None:
            observer(t, rho_t)
        if store_states:
            states_out.append(rho_t.copy())

    next_idx = 0
    if grid.size and grid[0] == 0.0:
        emit(0.0, rho.reshape(-1))
        next_idx = 1

    y = rho.reshape(-1)
    for seg_start, seg_end in zip(edges[:-1], edges[1:]):
        if seg_end - seg_start <= 0.0:
            continue
        solver = RK45(fun, seg_start, y, seg_end, rtol=rtol, atol=atol)
        while solver.status == "running":
            msg = solver.step()
            if solver.status == "failed":
                raise IntegrationError(
                    f"exact integration failed at t = {solver.t:.3f} fs: {msg}",
                    t_fs=solver.t,
                )
            interp = solver.dense_output()
            while next_idx < grid.size and grid[next_idx] <= solver.t + 1e-12:
                emit(grid[next_idx], interp(min(grid[next_idx], solver.t)))
                next_idx += 1
        y = solver.y

    return ExactRun(times=np.asarray(times_out), states=states_out if store_states else None)


def exact_moment_trajectory(scenario, output_dt, moments, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL):
    """Propagate and stream tracked-moment expectation values.

    Returns (times, values) with values[j, i] = <moments[i]>(t_j).
    """
    rows = []

    def observer(t, rho):
        rows.append(exact_expectations(rho, moments))

    run = propagate_exact(
        scenario, output_dt, rtol=rtol, atol=atol, observer=observer, store_states=False
    )
    return run.times, np.asarray(rows)
