"""Compile the symbolic moment equations and integrate them in time.

The symbolic ODESystem is flattened once per scenario into index/coefficient
arrays (an EvaluationPlan); the right-hand side is then a handful of
vectorized gather-multiply-scatter passes with no symbolic work inside the
time loop.  Moment values form one flat complex vector; conjugated
references read from the conjugate of that vector.  A sentinel entry fixed
at 1.0 pads factor slots so every term evaluates as coef * f1 * f2 * f3.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import RK45

from .constants import HBAR_MEV_FS
from .errors import IntegrationError
from . import algebra
from .algebra import generate_ode_system, tracked_moments

DEFAULT_RTOL = 1e-8
DEFAULT_ATOL = 1e-10

_SYSTEM_CACHE = {}


def cached_system(n_sites, order):
    key = (n_sites, order)
    if key not in _SYSTEM_CACHE:
        _SYSTEM_CACHE[key] = generate_ode_system(n_sites, order)
    return _SYSTEM_CACHE[key]


# ---------------------------------------------------------------------------
# Plan compilation
# ---------------------------------------------------------------------------


@dataclass
class _TermGroup:
    env: bool
    targets: np.ndarray
    coefs: np.ndarray
    f_idx: np.ndarray   # (n_terms, 3) indices into padded state vector
    f_conj: np.ndarray  # (n_terms, 3) bools


@dataclass
class EvaluationPlan:
    """Numeric evaluation plan for one (system, couplings, drive) triple."""

    n_sites: int
    order: int
    moments: tuple
    moment_index: dict
    n_state: int
    groups: list
    envelope: object
    n_terms: int

    def rhs(self, t, y):
        n = self.n_state
        padded = np.empty(n + 1, dtype=complex)
        padded[:n] = y
        padded[n] = 1.0
        padded_c = padded.conj()
        out = np.zeros(n, dtype=complex)
        env_val = None
        for g in self.groups:
            contrib = g.coefs.copy()
            if g.env:
                if env_val is None:
                    env_val = float(self.envelope(t))
                if env_val == 0.0:
                    continue
                contrib *= env_val
            for slot in range(3):
                idx = g.f_idx[:, slot]
                vals = np.where(g.f_conj[:, slot], padded_c[idx], padded[idx])
                contrib = contrib * vals
            out += np.bincount(g.targets, weights=contrib.real, minlength=n) + 1j * (
                np.bincount(g.targets, weights=contrib.imag, minlength=n)
            )
        return out


def _parameter_value(key, delta, v, omega, gamma):
    name = key[0]
    if name == "delta":
        return complex(delta[key[1]])
    if name == "v":
        return complex(v[key[1]])
    if name == "vc":
        return complex(np.conj(v[key[1]]))
    if name == "omega":
        return complex(omega[key[1], key[2]])
    if name == "gamma":
        return complex(gamma[key[1], key[2]])
    raise KeyError(f"unbound parameter symbol {key!r}")


def compile_plan(system, scenario):
    """Substitute numeric couplings/drive into a symbolic system.

    All parameters are converted from meV to 1/fs; terms whose numeric
    coefficient vanishes are pruned, and terms sharing (target, factors,
    envelope flag) are merged.
    """
    ens = scenario.ensemble
    drive = scenario.drive
    if system.n_sites != ens.n:
        raise ValueError("system size does not match ensemble")
    delta = drive.detunings_mev(ens) / HBAR_MEV_FS
    v = drive.amplitudes_mev / HBAR_MEV_FS
    omega = np.asarray(scenario.couplings.omega) / HBAR_MEV_FS
    gamma = np.asarray(scenario.couplings.gamma) / HBAR_MEV_FS

    n_state = len(system.moments)
    sentinel = n_state  # padded slot holding 1.0

    merged = {}
    for target, eq in enumerate(system.equations):
        for coeff, refs in eq:
            if len(refs) > 3:
                raise AssertionError("more than three factors in a closed term")
            for key, cval in coeff.items():
                numeric = cval * _parameter_value(key, delta, v, omega, gamma)
                if numeric == 0.0:
                    continue
                env = key[0] in ("v", "vc")
                sig = (target, refs, env)
                merged[sig] = merged.get(sig, 0.0) + numeric

    by_env = {False: [], True: []}
    for (target, refs, env), coef in merged.items():
        if coef == 0.0:
            continue
        idx = [sentinel] * 3
        conj = [False] * 3
        for slot, (mi, cflag) in enumerate(refs):
            idx[slot] = mi
            conj[slot] = cflag
        by_env[env].append((target, coef, idx, conj))

    groups = []
    n_terms = 0
    for env, rows in by_env.items():
        if not rows:
            continue
        rows.sort(key=lambda r: (r[0], r[2]))
        groups.append(
            _TermGroup(
                env=env,
                targets=np.array([r[0] for r in rows], dtype=np.intp),
                coefs=np.array([r[1] for r in rows], dtype=complex),
                f_idx=np.array([r[2] for r in rows], dtype=np.intp),
                f_conj=np.array([r[3] for r in rows], dtype=bool),
            )
        )
        n_terms += len(rows)

    return EvaluationPlan(
        n_sites=system.n_sites,
        order=system.order,
        moments=system.moments,
        moment_index=dict(system.moment_index()),
        n_state=n_state,
        groups=groups,
        envelope=drive.envelope,
        n_terms=n_terms,
    )


# ---------------------------------------------------------------------------
# Moment state and trajectories
# ---------------------------------------------------------------------------


def initial_moments(n_sites, order, which="ground"):
    """Flat moment vector for a product initial state."""
    moments = tracked_moments(n_sites, order)
    y = np.zeros(len(moments), dtype=complex)
    if which == "ground":
        return y
    if which != "inverted":
        raise ValueError(f"unknown initial state {which!r}")
    for i, m in enumerate(moments):
        kinds = tuple(k for _, k in m.factors)
        if kinds == (algebra.PROJECT,) or kinds == (algebra.PROJECT, algebra.PROJECT):
            y[i] = 1.0
    return y


@dataclass
class Trajectory:
    """Uniform time series of tracked moments, identical across solvers.

    values[j, i] holds <moment_i>(times[j]) in the order-2 layout; order-1
    and first-order-only data are expanded with factorized pair moments so
    observables can consume any trajectory the same way.
    """

    times: np.ndarray
    values: np.ndarray
    n_sites: int
    order: int
    solver: str
    moments: tuple
    moment_index: dict = field(repr=False)
    warnings: list = field(default_factory=list)

    def population(self, s):
        return self.values[:, self.moment_index[algebra.project(s)]].real

    def populations(self):
        return np.stack([self.population(s) for s in range(self.n_sites)], axis=1)

    def coherence(self, s):
        return self.values[:, self.moment_index[algebra.lower(s)]]

    def expectation(self, product):
        """<product>(t) for any 1- or 2-site canonical product."""
        if product.is_identity():
            return np.ones(self.times.size, dtype=complex)
        rep, conj = algebra.resolve_moment(product)
        vals = self.values[:, self.moment_index[rep]]
        return vals.conj() if conj else vals

    def coherence_matrix(self, j):
        """<s21_a s12_b> Gram matrix at time index j (Hermitian, PSD up to closure error)."""
        n = self.n_sites
        g = np.empty((n, n), dtype=complex)
        for a in range(n):
            g[a, a] = self.values[j, self.moment_index[algebra.project(a)]]
            for b in range(a + 1, n):
                val = self.values[
                    j, self.moment_index[algebra.OpProduct(((a, "r"), (b, "l")))]
                ]
                g[a, b] = val
                g[b, a] = np.conj(val)
        return g


def expand_first_order(times, first_values, n_sites):
    """Lift an order-1 trajectory into the order-2 layout with factorized pairs."""
    moments = tracked_moments(n_sites, 2)
    index = {m: i for i, m in enumerate(moments)}
    out = np.zeros((times.size, len(moments)), dtype=complex)
    n_first = 2 * n_sites
    out[:, :n_first] = first_values[:, :n_first]

    def val(product):
        rep, conj = algebra.resolve_moment(product)
        v = out[:, index[rep]] if index[rep] < n_first else None
        return v.conj() if conj else v

    for i, m in enumerate(moments[n_first:], start=n_first):
        (a, ka), (b, kb) = m.factors
        out[:, i] = val(algebra.op(a, ka)) * val(algebra.op(b, kb))
    return out, moments, index


# ---------------------------------------------------------------------------
# Integration
# ---------------------------------------------------------------------------


def integrate(
    plan,
    y0,
    t_final,
    output_dt,
    rtol=DEFAULT_RTOL,
    atol=DEFAULT_ATOL,
    solver_label="mf",
):
    """Adaptive RK45 over [0, t_final], sampled on the uniform output grid."""
    if t_final <= 0.0 or output_dt <= 0.0:
        raise ValueError("t_final and output_dt must be positive")
    grid = np.arange(0.0, t_final + 0.5 * output_dt, output_dt)
    grid = grid[grid <= t_final + 1e-12]

    breaks = [b for b in plan.envelope.breakpoints() if 0.0 < b < t_final]
    edges = [0.0] + sorted(breaks) + [t_final]

    times_out = []
    values_out = []
    next_idx = 0
    if grid.size and grid[0] == 0.0:
        times_out.append(0.0)
        values_out.append(np.array(y0, dtype=complex))
        next_idx = 1

    y = np.array(y0, dtype=complex)
    for seg_start, seg_end in zip(edges[:-1], edges[1:]):
        if seg_end - seg_start <= 0.0:
            continue
        stepper = RK45(plan.rhs, seg_start, y, seg_end, rtol=rtol, atol=atol)
        while stepper.status == "running":
            msg = stepper.step()
            if stepper.status == "failed":
                raise IntegrationError(
                    f"moment integration failed at t = {stepper.t:.3f} fs: {msg}",
                    t_fs=stepper.t,
                )
            interp = stepper.dense_output()
            while next_idx < grid.size and grid[next_idx] <= stepper.t + 1e-12:
                times_out.append(grid[next_idx])
                values_out.append(interp(min(grid[next_idx], stepper.t)))
                next_idx += 1
        y = stepper.y

    times = np.asarray(times_out)
    values = np.asarray(values_out)

    if plan.order == 1:
        values, moments, index = expand_first_order(times, values, plan.n_sites)
        order = 1
    else:
        moments, index, order = plan.moments, plan.moment_index, plan.order

    traj = Trajectory(
        times=times,
        values=values,
        n_sites=plan.n_sites,
        order=order,
        solver=solver_label,
        moments=tuple(moments),
        moment_index=dict(index),
    )
    traj.warnings.extend(physicality_check(traj))
    return traj


def physicality_check(traj, pop_slack=0.02, gram_tol=1e-6):
    """Soft monitors: populations near [0, 1], coherence Gram matrix near PSD.

    Cumulant closures may leave the physical set transiently; violations are
    reported as warnings, never as errors.
    """
    notes = []
    pops = traj.populations()
    if pops.min() < -pop_slack or pops.max() > 1.0 + pop_slack:
        notes.append(
            "population left [0,1] beyond slack "
            f"(min {pops.min():.4f}, max {pops.max():.4f})"
        )
    if traj.n_sites > 1:
        worst = 0.0
        for j in range(traj.times.size):
            g = traj.coherence_matrix(j)
            evals = np.linalg.eigvalsh(0.5 * (g + g.conj().T))
            worst = min(worst, evals.min())
        scale = max(1.0, np.abs(pops).max())
        if worst < -gram_tol * scale:
            notes.append(
                f"coherence Gram matrix dipped below PSD by {-worst:.3e}"
            )
    for note in notes:
        warnings.warn(note, stacklevel=2)
    return notes


# ---------------------------------------------------------------------------
# Unified scenario solving
# ---------------------------------------------------------------------------


def solve_scenario(scenario, output_dt=None, rtol=None, atol=None):
    """Run the configured solver and return a uniform order-2-layout Trajectory."""
    if output_dt is None:
        output_dt = scenario.t_final / 1000.0
    n = scenario.n

    if scenario.solver == "exact":
        from . import exact as exact_mod

        moments = tracked_moments(n, 2)
        times, values = exact_mod.exact_moment_trajectory(
            scenario,
            output_dt,
            moments,
            rtol=rtol if rtol is not None else exact_mod.DEFAULT_RTOL,
            atol=atol if atol is not None else exact_mod.DEFAULT_ATOL,
        )
        index = {m: i for i, m in enumerate(moments)}
        traj = Trajectory(
            times=times,
            values=values,
            n_sites=n,
            order=2,
            solver="exact",
            moments=tuple(moments),
            moment_index=index,
        )
        return traj

    order = 1 if scenario.solver == "mf1" else 2
    system = cached_system(n, order)
    plan = compile_plan(system, scenario)
    y0 = initial_moments(n, order, scenario.initial_state)
    return integrate(
        plan,
        y0,
        scenario.t_final,
        output_dt,
        rtol=rtol if rtol is not None else DEFAULT_RTOL,
        atol=atol if atol is not None else DEFAULT_ATOL,
        solver_label=scenario.solver,
    )
