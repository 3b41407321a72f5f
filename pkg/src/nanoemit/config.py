"""Run configuration: file parsing and scenario construction.

Human-authored scenarios are TOML files; machine-generated ones use JSON
with the same structure.  Both map onto RunConfig, from which ensembles,
couplings, drives and scenarios are built.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .greens import (
    TabulatedGreen,
    couplings_from_green,
    load_tabulated_green,
    propagation_factors,
    synthetic_plasmonic_profile,
)
from .model import (
    ContinuousEnvelope,
    Drive,
    GaussianEnvelope,
    RectangularEnvelope,
    Scenario,
    make_linear_array,
    make_square_array,
    make_square_prefix,
)

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

GEOMETRY_KINDS = ("square", "linear")
COUPLING_SOURCES = ("free_space", "synthetic", "tabulated")
ENVELOPES = ("continuous", "rectangular", "gaussian")
PULSE_COMPONENTS = ("total", "interference", "individual")


@dataclass
class RunConfig:
    label: str
    geometry: dict
    couplings: dict
    drive: dict
    run: dict
    analysis: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)

    def as_dict(self):
        return {
            "label": self.label,
            "geometry": dict(self.geometry),
            "couplings": dict(self.couplings),
            "drive": dict(self.drive),
            "run": dict(self.run),
            "analysis": dict(self.analysis),
            "output": dict(self.output),
        }


def load_config_file(path):
    """Parse a TOML or JSON config file into a raw dict."""
    text_path = str(path)
    try:
        if text_path.endswith(".json"):
            with open(text_path, "r", encoding="utf-8") as fh:
                return json.load(fh)
        with open(text_path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {text_path}") from exc
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"config file {text_path} failed to parse: {exc}") from exc


def _require(section, key, where, types=None):
    if key not in section:
        raise ConfigError(f"missing required field {where}.{key}")
    val = section[key]
    if types is not None and not isinstance(val, types):
        raise ConfigError(f"field {where}.{key} has wrong type {type(val).__name__}")
    return val


def _positive(value, where):
    if not value > 0:
        raise ConfigError(f"field {where} must be positive, got {value}")
    return value


def parse_config(raw):
    """Validate a raw config dict and return a RunConfig."""
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a table/object")
    label = raw.get("label", "run")

    geometry = dict(_require(raw, "geometry", "config", dict))
    kind = _require(geometry, "kind", "geometry", str)
    if kind not in GEOMETRY_KINDS:
        raise ConfigError(f"geometry.kind must be one of {GEOMETRY_KINDS}, got {kind!r}")
    _positive(_require(geometry, "spacing_nm", "geometry", (int, float)), "geometry.spacing_nm")
    dip = _require(geometry, "dipole_debye", "geometry", list)
    if len(dip) != 3:
        raise ConfigError("geometry.dipole_debye must be a 3-vector")
    _positive(
        _require(geometry, "transition_energy_mev", "geometry", (int, float)),
        "geometry.transition_energy_mev",
    )
    if kind == "square":
        n_side = _require(geometry, "n_side", "geometry", int)
        if n_side < 1:
            raise ConfigError("geometry.n_side must be >= 1")
    else:
        count = _require(geometry, "count", "geometry", int)
        if count < 1:
            raise ConfigError("geometry.count must be >= 1")

    couplings = dict(_require(raw, "couplings", "config", dict))
    source = _require(couplings, "source", "couplings", str)
    if source not in COUPLING_SOURCES:
        raise ConfigError(
            f"couplings.source must be one of {COUPLING_SOURCES}, got {source!r}"
        )
    if source == "synthetic":
        for key in ("gamma_self_mev", "omega_self_mev"):
            _require(couplings, key, "couplings", (int, float))
        for key in ("gamma_range_nm", "omega_range_nm"):
            if key in couplings:
                _positive(couplings[key], f"couplings.{key}")
        if couplings.get("omega_sign", 1) not in (1, -1):
            raise ConfigError("couplings.omega_sign must be +1 or -1")
    if source == "tabulated":
        _require(couplings, "path", "couplings", str)
    k_mode = couplings.get("k_mode", "constant")
    if k_mode not in ("constant", "free_space"):
        raise ConfigError("couplings.k_mode must be 'constant' or 'free_space'")
    if k_mode == "free_space" and "detector_nm" not in couplings:
        raise ConfigError("couplings.k_mode = 'free_space' needs couplings.detector_nm")

    drive = dict(_require(raw, "drive", "config", dict))
    _require(drive, "carrier_energy_mev", "drive", (int, float))
    if "amplitude_mev" not in drive and "amplitudes_mev" not in drive:
        raise ConfigError("drive needs amplitude_mev (uniform) or amplitudes_mev (list)")
    envelope = drive.get("envelope", "continuous")
    if envelope not in ENVELOPES:
        raise ConfigError(f"drive.envelope must be one of {ENVELOPES}, got {envelope!r}")
    if envelope == "rectangular":
        t_on = drive.get("t_on_fs", 0.0)
        t_off = _require(drive, "t_off_fs", "drive", (int, float))
        if not t_off > t_on:
            raise ConfigError("drive.t_off_fs must exceed drive.t_on_fs")
    if envelope == "gaussian":
        _require(drive, "center_fs", "drive", (int, float))
        _positive(_require(drive, "fwhm_fs", "drive", (int, float)), "drive.fwhm_fs")

    run = dict(_require(raw, "run", "config", dict))
    solver = run.get("solver", "mf2")
    if solver not in ("exact", "mf1", "mf2"):
        raise ConfigError(f"run.solver must be exact|mf1|mf2, got {solver!r}")
    run["solver"] = solver
    _positive(_require(run, "t_final_fs", "run", (int, float)), "run.t_final_fs")
    if "output_dt_fs" in run:
        _positive(run["output_dt_fs"], "run.output_dt_fs")
    if run.get("initial_state", "ground") not in ("ground", "inverted"):
        raise ConfigError("run.initial_state must be 'ground' or 'inverted'")

    analysis = dict(raw.get("analysis", {}))
    if "pulse_window_fs" in analysis:
        win = analysis["pulse_window_fs"]
        if not (isinstance(win, list) and len(win) == 2 and win[0] < win[1]):
            raise ConfigError("analysis.pulse_window_fs must be [t_start, t_end]")
    if analysis.get("pulse_component", "interference") not in PULSE_COMPONENTS:
        raise ConfigError(
            f"analysis.pulse_component must be one of {PULSE_COMPONENTS}"
        )

    output = dict(raw.get("output", {}))

    return RunConfig(
        label=label,
        geometry=geometry,
        couplings=couplings,
        drive=drive,
        run=run,
        analysis=analysis,
        output=output,
    )


# ---------------------------------------------------------------------------
# Object construction
# ---------------------------------------------------------------------------


def build_ensemble(cfg, n_override=None):
    g = cfg.geometry
    dipole = tuple(float(x) for x in g["dipole_debye"])
    energy = float(g["transition_energy_mev"])
    spacing = float(g["spacing_nm"])
    if g["kind"] == "square":
        center = tuple(g.get("center_nm", (0.0, 0.0, 0.0)))
        if n_override is None:
            return make_square_array(int(g["n_side"]), spacing, center, dipole, energy,
                                     label=cfg.label)
        return make_square_prefix(int(n_override), spacing, center, dipole, energy,
                                  label=f"{cfg.label}_N{n_override}")
    start = tuple(g.get("start_nm", (0.0, 0.0, 0.0)))
    direction = np.asarray(g.get("direction", (1.0, 0.0, 0.0)), dtype=float)
    norm = np.linalg.norm(direction)
    if norm == 0:
        raise ConfigError("geometry.direction must be non-zero")
    direction = tuple(direction / norm)
    count = int(g["count"]) if n_override is None else int(n_override)
    return make_linear_array(count, spacing, start, direction, dipole, energy,
                             label=cfg.label if n_override is None else f"{cfg.label}_N{n_override}")


def build_couplings(cfg, ensemble, base_dir=None):
    c = cfg.couplings
    source = c["source"]
    if source == "free_space":
        from .greens import free_space_green

        result = couplings_from_green(ensemble, free_space_green)
    elif source == "synthetic":
        evaluator = synthetic_plasmonic_profile(
            gamma_self=float(c["gamma_self_mev"]),
            omega_self=float(c["omega_self_mev"]),
            gamma_range=float(c.get("gamma_range_nm", 10.0)),
            omega_range=float(c.get("omega_range_nm", 1.0)),
            omega_sign=int(c.get("omega_sign", 1)),
            dipole_debye=float(np.linalg.norm(ensemble.dipoles[0].real)),
        )
        result = couplings_from_green(ensemble, evaluator)
    else:
        path = c["path"]
        if base_dir is not None and not path.startswith("/"):
            path = str(base_dir / path)
        try:
            data = TabulatedGreen.from_json(path)
        except FileNotFoundError as exc:
            raise ConfigError(f"tabulated Green data file not found: {path}") from exc
        except (ValueError, KeyError, json.JSONDecodeError) as exc:
            raise ConfigError(f"tabulated Green data invalid: {exc}") from exc
        result = load_tabulated_green(data, ensemble)

    if c.get("k_mode", "constant") == "free_space":
        k = propagation_factors(ensemble, mode="free_space", detector=c["detector_nm"])
        result = result.with_k_factors(k)
    else:
        result = result.with_k_factors(propagation_factors(ensemble, mode="constant"))
    return result


def build_drive(cfg, ensemble):
    d = cfg.drive
    n = ensemble.n
    if "amplitudes_mev" in d:
        amps = [complex(a) for a in d["amplitudes_mev"]]
        if len(amps) != n:
            raise ConfigError(
                f"drive.amplitudes_mev has {len(amps)} entries for N={n} emitters"
            )
    else:
        amp = float(d["amplitude_mev"])
        phase = math.radians(float(d.get("phase_deg", 0.0)))
        amps = [amp * complex(math.cos(phase), math.sin(phase))] * n
    envelope_kind = d.get("envelope", "continuous")
    if envelope_kind == "continuous":
        env = ContinuousEnvelope()
    elif envelope_kind == "rectangular":
        env = RectangularEnvelope(float(d.get("t_on_fs", 0.0)), float(d["t_off_fs"]))
    else:
        env = GaussianEnvelope(float(d["center_fs"]), float(d["fwhm_fs"]))
    return Drive(float(d["carrier_energy_mev"]), tuple(amps), env)


def build_scenario(cfg, n_override=None, solver_override=None, base_dir=None):
    ensemble = build_ensemble(cfg, n_override=n_override)
    couplings = build_couplings(cfg, ensemble, base_dir=base_dir)
    drive = build_drive(cfg, ensemble)
    solver = solver_override or cfg.run["solver"]
    return Scenario(
        ensemble=ensemble,
        couplings=couplings,
        drive=drive,
        t_final=float(cfg.run["t_final_fs"]),
        solver=solver,
        initial_state=cfg.run.get("initial_state", "ground"),
    )


def output_grid_dt(cfg):
    if "output_dt_fs" in cfg.run:
        return float(cfg.run["output_dt_fs"])
    return float(cfg.run["t_final_fs"]) / 1000.0


def pulse_window(cfg, scenario):
    """Analysis window for pulse metrics; defaults to after drive turn-off."""
    if "pulse_window_fs" in cfg.analysis:
        lo, hi = cfg.analysis["pulse_window_fs"]
        return float(lo), float(hi)
    t_final = float(cfg.run["t_final_fs"])
    off = scenario.drive.envelope.turn_off_time(t_final)
    if off is None:
        return None
    return float(off), t_final
