import json
from pathlib import Path

import numpy as np
import pytest

from nanoemit import runner
from nanoemit.config import load_config_file, parse_config
from nanoemit.errors import ConfigError, ResourceGuardError
from nanoemit.reports import validate_report, write_outputs

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def small_config(**overrides):
    raw = {
        "label": "small",
        "geometry": {
            "kind": "square",
            "n_side": 2,
            "spacing_nm": 1.0,
            "dipole_debye": [0.0, 0.0, 4.0],
            "transition_energy_mev": 1878.7,
        },
        "couplings": {
            "source": "synthetic",
            "gamma_self_mev": 7.0,
            "omega_self_mev": 15.0,
        },
        "drive": {
            "carrier_energy_mev": 1863.7,
            "amplitude_mev": 53.0,
            "envelope": "rectangular",
            "t_on_fs": 0.0,
            "t_off_fs": 22.0,
        },
        "run": {
            "solver": "mf2",
            "t_final_fs": 150.0,
            "output_dt_fs": 1.0,
        },
    }
    for key, val in overrides.items():
        if isinstance(val, dict):
            raw.setdefault(key, {}).update(val)
        else:
            raw[key] = val
    return raw


class TestConfigParsing:
    def test_reference_configs_parse(self):
        for path in sorted(CONFIG_DIR.glob("*.toml")):
            cfg = parse_config(load_config_file(path))
            assert cfg.label

    def test_missing_field_diagnostics(self):
        raw = small_config()
        del raw["geometry"]["spacing_nm"]
        with pytest.raises(ConfigError) as err:
            parse_config(raw)
        assert "geometry.spacing_nm" in str(err.value)

    def test_bad_solver(self):
        raw = small_config(run={"solver": "magic"})
        with pytest.raises(ConfigError):
            parse_config(raw)

    def test_unparseable_file(self, tmp_path):
        bad = tmp_path / "bad.toml"
        bad.write_text("this is = not [ toml")
        with pytest.raises(ConfigError):
            load_config_file(bad)


class TestRun:
    def test_run_writes_valid_report_and_tables(self, tmp_path):
        outcome = runner.run(small_config())
        validate_report(outcome.report)
        written = write_outputs(outcome, tmp_path)
        for path in written:
            assert path.exists() and path.stat().st_size > 0
        csv = (tmp_path / "small_trajectory.csv").read_text().splitlines()
        header = csv[0].split(",")
        assert header[:9] == [
            "t_fs", "total", "individual", "interference",
            "Ax", "Ay", "Az", "J_bar", "M_bar",
        ]
        assert header[9:] == ["pop_0", "pop_1", "pop_2", "pop_3"]

    def test_single_emitter_interference_zero(self, tmp_path):
        raw = small_config(geometry={"n_side": 1})
        raw["label"] = "single"
        outcome = runner.run(raw)
        table = outcome.tables["trajectory"]
        interference = table.data[:, table.columns.index("interference")]
        assert np.all(interference == 0.0)

    def test_exact_resource_guard(self):
        raw = small_config(geometry={"n_side": 4}, run={"solver": "exact"})
        with pytest.raises(ResourceGuardError):
            runner.run(raw)

    def test_determinism_byte_identical(self, tmp_path):
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        write_outputs(runner.run(small_config()), out_a)
        write_outputs(runner.run(small_config()), out_b)
        csv_a = (out_a / "small_trajectory.csv").read_bytes()
        csv_b = (out_b / "small_trajectory.csv").read_bytes()
        assert csv_a == csv_b


class TestSweep:
    def test_sweep_metrics_and_fit(self, tmp_path):
        raw = small_config()
        raw["run"]["t_final_fs"] = 250.0
        outcome = runner.sweep(raw, [4, 5, 6, 7])
        validate_report(outcome.report)
        fit = outcome.report["scaling_fit"]
        assert fit is not None
        assert fit["i_max_fit"]["b"] > 0.0
        assert fit["width_fit"]["d"] > 0.0
        written = write_outputs(outcome, tmp_path)
        names = {p.name for p in written}
        assert "small_sweep.csv" in names
        assert "small_N4_trajectory.csv" in names

    def test_single_point_fit_refused_metrics_reported(self):
        raw = small_config()
        outcome = runner.sweep(raw, [4])
        assert outcome.report["scaling_fit"] is None
        assert "N4" in outcome.report["pulse_metrics"]
        assert outcome.report["fit_refusal"]

    def test_sweep_requires_pulsed_drive(self):
        raw = small_config(drive={"envelope": "continuous"})
        raw["drive"].pop("t_off_fs", None)
        with pytest.raises(ConfigError):
            runner.sweep(raw, [4, 5])


class TestCompare:
    def test_compare_table(self):
        outcome = runner.compare(small_config())
        validate_report(outcome.report)
        dev = outcome.report["deviations"]
        # N=4: order-2 close to exact, order-1 visibly off once the burst builds
        assert dev["exact_vs_mf2"]["population"] <= 0.05
        assert dev["exact_vs_mf1"]["intensity_interference"] > dev["exact_vs_mf2"][
            "intensity_interference"
        ]
        assert set(outcome.tables) == {
            "trajectory_exact", "trajectory_mf2", "trajectory_mf1"
        }

    def test_compare_guard(self):
        raw = small_config(geometry={"n_side": 4})
        with pytest.raises(ResourceGuardError):
            runner.compare(raw)


class TestReferenceConfigs:
    def test_square9_cw_interference_dominates(self):
        # continuous drive on the 3x3 array: once the collective regime is
        # established the interference term carries about twice the
        # individual contribution
        raw = load_config_file(CONFIG_DIR / "square9_bqp.toml")
        raw["run"]["t_final_fs"] = 400.0
        outcome = runner.run(raw)
        table = outcome.tables["trajectory"]
        t = table.data[:, table.columns.index("t_fs")]
        ind = table.data[:, table.columns.index("individual")]
        inter = table.data[:, table.columns.index("interference")]
        window = (t >= 100.0) & (t <= 400.0)
        ratio = (inter[window] / ind[window]).mean()
        assert 1.5 <= ratio <= 3.0

    def test_order_one_misses_nine_molecule_burst(self):
        raw = load_config_file(CONFIG_DIR / "square9_bqp_pulsed.toml")
        metrics = {}
        for solver in ("mf2", "mf1"):
            raw["run"]["solver"] = solver
            outcome = runner.run(raw)
            metrics[solver] = outcome.report["pulse_metrics"][solver]
        assert metrics["mf2"]["valid"]
        assert (
            not metrics["mf1"]["valid"]
            or metrics["mf1"]["i_max"] < 0.5 * metrics["mf2"]["i_max"]
        )

    def test_compare_single_emitter_all_solvers_agree(self):
        raw = small_config(geometry={"n_side": 1})
        outcome = runner.compare(raw)
        for pair in ("exact_vs_mf2", "exact_vs_mf1"):
            for value in outcome.report["deviations"][pair].values():
                assert value <= 1e-7

    def test_dicke_ideal_runs(self, tmp_path):
        cfg = parse_config(load_config_file(CONFIG_DIR / "dicke_ideal.toml"))
        outcome = runner.run(cfg)
        table = outcome.tables["trajectory"]
        j_bar = table.data[:, table.columns.index("J_bar")]
        assert np.ptp(j_bar) < 2e-3  # collective decay preserves J
        total = table.data[:, table.columns.index("total")]
        assert total.max() > total[0]  # the burst

    def test_gaussian_envelope_run(self):
        raw = small_config(
            drive={
                "carrier_energy_mev": 1863.7,
                "amplitude_mev": 53.0,
                "envelope": "gaussian",
                "center_fs": 20.0,
                "fwhm_fs": 22.0,
            }
        )
        raw["drive"].pop("t_off_fs", None)
        raw["drive"].pop("t_on_fs", None)
        outcome = runner.run(raw)
        table = outcome.tables["trajectory"]
        pops = table.data[:, table.columns.index("pop_0")]
        assert pops.max() > 0.5  # the pulse actually excites the array

    def test_tabulated_example_loads(self):
        raw = small_config()
        raw["couplings"] = {
            "source": "tabulated",
            "path": str(CONFIG_DIR / "tabulated_gap_example.json"),
        }
        raw["geometry"]["transition_energy_mev"] = 1878.5484609638065
        raw["drive"]["carrier_energy_mev"] = 1863.5
        outcome = runner.run(raw)
        assert outcome.report["n_emitters"] == 4
