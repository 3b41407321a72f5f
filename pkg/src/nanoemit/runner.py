"""End-to-end orchestration: run one scenario, sweep N, or compare solvers."""

import time

import numpy as np

from .config import build_scenario, output_grid_dt, parse_config, pulse_window
from .errors import ConfigError, ResourceGuardError
from .meanfield import solve_scenario
from .model import EXACT_N_LIMIT, validate_scenario
from .observables import collective_spin, far_field_intensity
from .pulses import pulse_metrics, scaling_fit
from .reports import (
    RunOutcome,
    SCHEMA_VERSION,
    sanitize_json,
    sweep_summary_table,
    trajectory_table,
    validate_report,
)

COMPARE_N_LIMIT = 10


def _base_report(command, cfg):
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "label": cfg.label,
        "config": sanitize_json(cfg.as_dict()),
        "solvers": [],
        "outputs": [],
        "warnings": [],
        "timings_s": {},
        "seed": cfg.output.get("seed"),
    }


def _check_scenario(scenario):
    if scenario.solver == "exact" and scenario.n > EXACT_N_LIMIT:
        raise ResourceGuardError(
            f"exact solver limited to N <= {EXACT_N_LIMIT}, scenario has N={scenario.n}"
        )
    problems = validate_scenario(scenario)
    if problems:
        raise ConfigError("scenario validation failed: " + "; ".join(problems))


def _solve_with_observables(cfg, scenario, solver=None, rtol=None, atol=None):
    t0 = time.perf_counter()
    if solver is not None and solver != scenario.solver:
        scenario = type(scenario)(
            ensemble=scenario.ensemble,
            couplings=scenario.couplings,
            drive=scenario.drive,
            t_final=scenario.t_final,
            solver=solver,
            initial_state=scenario.initial_state,
        )
    traj = solve_scenario(scenario, output_dt=output_grid_dt(cfg), rtol=rtol, atol=atol)
    radiation = far_field_intensity(traj, scenario.couplings.k_factors)
    spin = collective_spin(traj)
    elapsed = time.perf_counter() - t0
    return traj, radiation, spin, elapsed


def _metrics_for(cfg, scenario, radiation):
    window = pulse_window(cfg, scenario)
    if window is None:
        return None
    component = cfg.analysis.get("pulse_component", "interference")
    return pulse_metrics(radiation, window, component=component)


def run(cfg, rtol=None, atol=None):
    """Execute one scenario end to end; returns a RunOutcome."""
    if isinstance(cfg, dict):
        cfg = parse_config(cfg)
    scenario = build_scenario(cfg)
    _check_scenario(scenario)
    report = _base_report("run", cfg)
    report["n_emitters"] = scenario.n
    report["solvers"] = [scenario.solver]

    traj, radiation, spin, elapsed = _solve_with_observables(cfg, scenario, rtol=rtol, atol=atol)
    report["timings_s"]["solve"] = elapsed
    report["warnings"].extend(traj.warnings)

    metrics = _metrics_for(cfg, scenario, radiation)
    if metrics is not None:
        report["pulse_metrics"] = {scenario.solver: metrics.as_dict()}

    name = "trajectory"
    table = trajectory_table(traj, radiation, spin)
    report["outputs"] = [
        {"name": name, "kind": "trajectory", "filename": f"{cfg.label}_trajectory.csv"},
        {"name": "report", "kind": "report", "filename": f"{cfg.label}_report.json"},
    ]
    report = sanitize_json(report)
    validate_report(report)
    return RunOutcome(report=report, tables={name: table})


def sweep(cfg, n_values, rtol=None, atol=None):
    """Run the configured pulsed scenario for each N and fit the scaling laws."""
    if isinstance(cfg, dict):
        cfg = parse_config(cfg)
    if not n_values:
        raise ConfigError("sweep needs a non-empty N list")
    if cfg.drive.get("envelope", "continuous") == "continuous":
        raise ConfigError("sweep requires a pulsed drive envelope")
    report = _base_report("sweep", cfg)
    report["n_values"] = [int(n) for n in n_values]
    report["solvers"] = [cfg.run["solver"]]

    tables = {}
    all_metrics = []
    outputs = []
    for n in n_values:
        scenario = build_scenario(cfg, n_override=int(n))
        _check_scenario(scenario)
        traj, radiation, spin, elapsed = _solve_with_observables(cfg, scenario, rtol=rtol, atol=atol)
        report["timings_s"][f"solve_N{n}"] = elapsed
        report["warnings"].extend(f"N={n}: {w}" for w in traj.warnings)
        metrics = _metrics_for(cfg, scenario, radiation)
        if metrics is None:
            raise ConfigError("sweep scenario has no pulse window (continuous drive?)")
        all_metrics.append(metrics)
        name = f"trajectory_N{n}"
        tables[name] = trajectory_table(traj, radiation, spin)
        outputs.append(
            {"name": name, "kind": "trajectory", "filename": f"{cfg.label}_N{n}_trajectory.csv"}
        )

    report["pulse_metrics"] = {
        f"N{n}": m.as_dict() for n, m in zip(n_values, all_metrics)
    }
    try:
        fit = scaling_fit(list(zip(n_values, all_metrics)))
        report["scaling_fit"] = fit.as_dict()
        report["fit_refusal"] = None
    except ValueError as exc:
        report["scaling_fit"] = None
        report["fit_refusal"] = str(exc)

    summary = sweep_summary_table(n_values, all_metrics)
    tables["summary"] = summary
    outputs.append({"name": "summary", "kind": "summary", "filename": f"{cfg.label}_sweep.csv"})
    outputs.append({"name": "report", "kind": "report", "filename": f"{cfg.label}_report.json"})
    report["outputs"] = outputs
    report = sanitize_json(report)
    validate_report(report)
    return RunOutcome(report=report, tables=tables)


def compare(cfg, rtol=None, atol=None):
    """Run exact, mf2 and mf1 on one scenario and tabulate deviations."""
    if isinstance(cfg, dict):
        cfg = parse_config(cfg)
    scenario = build_scenario(cfg)
    if scenario.n > COMPARE_N_LIMIT:
        raise ResourceGuardError(
            f"compare is limited to N <= {COMPARE_N_LIMIT} (exact reference); got N={scenario.n}"
        )
    _check_scenario(scenario)
    report = _base_report("compare", cfg)
    report["n_emitters"] = scenario.n
    report["solvers"] = ["exact", "mf2", "mf1"]

    results = {}
    tables = {}
    outputs = []
    for solver in ("exact", "mf2", "mf1"):
        traj, radiation, spin, elapsed = _solve_with_observables(
            cfg, scenario, solver=solver, rtol=rtol, atol=atol
        )
        results[solver] = (traj, radiation, spin)
        report["timings_s"][f"solve_{solver}"] = elapsed
        report["warnings"].extend(f"{solver}: {w}" for w in traj.warnings)
        name = f"trajectory_{solver}"
        tables[name] = trajectory_table(traj, radiation, spin)
        outputs.append(
            {"name": name, "kind": "trajectory", "filename": f"{cfg.label}_{solver}_trajectory.csv"}
        )

    def max_abs(a, b):
        return float(np.max(np.abs(a - b)))

    deviations = {}
    exact_traj, exact_rad, exact_spin = results["exact"]
    for solver in ("mf2", "mf1"):
        traj, rad, spin = results[solver]
        deviations[f"exact_vs_{solver}"] = {
            "population": max_abs(exact_traj.populations(), traj.populations()),
            "intensity_total": max_abs(exact_rad.total, rad.total),
            "intensity_interference": max_abs(exact_rad.interference, rad.interference),
            "j_bar": max_abs(exact_spin.j_bar, spin.j_bar),
            "m_bar": max_abs(exact_spin.m_bar, spin.m_bar),
        }
    report["deviations"] = deviations

    metrics = {}
    for solver in ("exact", "mf2", "mf1"):
        m = _metrics_for(cfg, scenario, results[solver][1])
        if m is not None:
            metrics[solver] = m.as_dict()
    if metrics:
        report["pulse_metrics"] = metrics

    outputs.append({"name": "report", "kind": "report", "filename": f"{cfg.label}_report.json"})
    report["outputs"] = outputs
    report = sanitize_json(report)
    validate_report(report)
    return RunOutcome(report=report, tables=tables)
