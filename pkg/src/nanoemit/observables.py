"""Far-field radiation and collective-spin observables from a trajectory.

The far-field intensity is I(t) = Re sum_{s,s'} K[s,s'] <s21_s' s12_s>,
split into the individual part (diagonal, populations) and the
interference part (off-diagonal coherences).  Collective-spin quantities
use J_x = (1/2) sum (s12 + s21), J_y = (i/2) sum (s12 - s21),
J_z = (1/2) sum (2 s22 - 1); effective Dicke numbers come from
Jbar(Jbar+1) = <Jx^2 + Jy^2 + Jz^2> and Mbar = <Jz>.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from . import algebra


@dataclass
class RadiationSeries:
    """Far-field radiation split; total = individual + interference identically."""

    times: np.ndarray
    total: np.ndarray
    individual: np.ndarray
    interference: np.ndarray


@dataclass
class SpinSeries:
    times: np.ndarray
    spin_vector: np.ndarray  # (n_times, 3): <Jx>, <Jy>, <Jz>
    j_bar: np.ndarray
    m_bar: np.ndarray


class CompletedMoments:
    """All second-order moment matrices at one time, with on-site reductions.

    Off-diagonal entries come from the tracked representatives (or their
    conjugates); diagonal entries apply the same-site operator table:
    s21 s12 = s22, s12 s21 = 1 - s22, s22 s12 = 0, s12 s22 = s12,
    s12 s12 = 0.
    """

    def __init__(self, n_sites, first_project, first_lower, pair_lookup):
        n = n_sites
        pops = np.asarray(first_project, dtype=complex)
        cohs = np.asarray(first_lower, dtype=complex)
        self.n = n
        self.pop = pops
        self.coh = cohs

        rl = np.empty((n, n), dtype=complex)  # <s21_a s12_b>
        pp = np.empty((n, n), dtype=complex)  # <s22_a s22_b>
        pl = np.empty((n, n), dtype=complex)  # <s22_a s12_b>
        ll = np.empty((n, n), dtype=complex)  # <s12_a s12_b>
        lr = np.empty((n, n), dtype=complex)  # <s12_a s21_b>
        for a in range(n):
            rl[a, a] = pops[a]
            pp[a, a] = pops[a]
            pl[a, a] = 0.0
            ll[a, a] = 0.0
            lr[a, a] = 1.0 - pops[a]
            for b in range(n):
                if a == b:
                    continue
                rl[a, b] = pair_lookup(a, algebra.RAISE, b, algebra.LOWER)
                pp[a, b] = pair_lookup(a, algebra.PROJECT, b, algebra.PROJECT)
                pl[a, b] = pair_lookup(a, algebra.PROJECT, b, algebra.LOWER)
                ll[a, b] = pair_lookup(a, algebra.LOWER, b, algebra.LOWER)
        # different sites commute: <s12_a s21_b> = <s21_b s12_a> = conj(<s21_a s12_b>)
        for a in range(n):
            for b in range(n):
                if a != b:
                    lr[a, b] = np.conj(rl[a, b])
        self.rl, self.pp, self.pl, self.ll, self.lr = rl, pp, pl, ll, lr

    @staticmethod
    def from_trajectory(traj, j):
        vals = traj.values[j]
        index = traj.moment_index

        def pair_lookup(a, ka, b, kb):
            if a < b:
                product = algebra.OpProduct(((a, ka), (b, kb)))
            else:
                product = algebra.OpProduct(((b, kb), (a, ka)))
            rep, conj = algebra.resolve_moment(product)
            v = vals[index[rep]]
            return np.conj(v) if conj else v

        n = traj.n_sites
        pops = [vals[index[algebra.project(s)]] for s in range(n)]
        cohs = [vals[index[algebra.lower(s)]] for s in range(n)]
        return CompletedMoments(n, pops, cohs, pair_lookup)

    def j_squared_sum(self):
        """<Jx^2> + <Jy^2> + <Jz^2> from the completed tables."""
        ll_sum = self.ll.sum()
        lr_sum = self.lr.sum()
        rl_sum = self.rl.sum()
        jx2 = 0.25 * (ll_sum + lr_sum + rl_sum + np.conj(ll_sum))
        jy2 = -0.25 * (ll_sum - lr_sum - rl_sum + np.conj(ll_sum))
        n = self.n
        pops_sum = self.pop.sum().real
        jz2 = 0.25 * (4.0 * self.pp.sum() - 4.0 * n * pops_sum + n * n)
        return float((jx2 + jy2 + jz2).real)


def far_field_intensity(traj, k_factors):
    """Radiation series from the coherence Gram matrix and propagation factors.

    Works on any solver's trajectory; for order-1 data the off-diagonal
    coherences are the factorized products <s21_a><s12_b>, which is exactly
    what the first-order theory predicts (and is how its lack of a
    superradiant burst shows up).
    """
    k = np.asarray(k_factors, dtype=complex)
    n = traj.n_sites
    if k.shape != (n, n):
        raise ValueError(f"k_factors shape {k.shape} does not match N={n}")
    m = traj.times.size
    total = np.empty(m)
    individual = np.empty(m)
    for j in range(m):
        g = traj.coherence_matrix(j)
        individual[j] = np.real(np.sum(np.diag(k) * np.diag(g)))
        total[j] = np.real(np.sum(k * g.T))
    interference = total - individual
    return RadiationSeries(
        times=traj.times.copy(),
        total=total,
        individual=individual,
        interference=interference,
    )


def collective_spin(traj):
    """Collective spin vector and effective Dicke quantum numbers."""
    m = traj.times.size
    n = traj.n_sites
    spin = np.empty((m, 3))
    j_bar = np.empty(m)
    m_bar = np.empty(m)
    warned = False
    for j in range(m):
        cm = CompletedMoments.from_trajectory(traj, j)
        c_sum = cm.coh.sum()
        spin[j, 0] = c_sum.real
        spin[j, 1] = -c_sum.imag
        spin[j, 2] = cm.pop.sum().real - 0.5 * n
        total_j2 = cm.j_squared_sum()
        if total_j2 < 0.0:
            if total_j2 < -1e-8 and not warned:
                warnings.warn(
                    f"sum <J_i^2> = {total_j2:.3e} fell below zero; clamping",
                    stacklevel=2,
                )
                warned = True
            total_j2 = 0.0
        j_bar[j] = 0.5 * (-1.0 + np.sqrt(1.0 + 4.0 * total_j2))
        m_bar[j] = spin[j, 2]
    return SpinSeries(times=traj.times.copy(), spin_vector=spin, j_bar=j_bar, m_bar=m_bar)
