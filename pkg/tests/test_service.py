import warnings

import numpy as np
import pytest

with warnings.catch_warnings():
    warnings.simplefilter("ignore", DeprecationWarning)
    from fastapi.testclient import TestClient

from nanoemit.service.app import app
from test_runner import small_config


@pytest.fixture(scope="module")
def client():
    return TestClient(app)


class TestHealth:
    def test_health(self, client):
        resp = client.get("/health")
        assert resp.status_code == 200
        body = resp.json()
        assert body["status"] == "ok"


class TestConfigSchemaCoverage:
    def test_all_shipped_configs_fit_request_schema(self):
        from pathlib import Path

        from nanoemit.config import load_config_file
        from nanoemit.service.schemas import RunConfigModel

        config_dir = Path(__file__).resolve().parent.parent / "configs"
        tomls = sorted(config_dir.glob("*.toml"))
        assert len(tomls) >= 5
        for path in tomls:
            RunConfigModel(**load_config_file(path))


class TestRunEndpoint:
    def test_run_returns_report_and_tables(self, client):
        resp = client.post("/run", json={"config": small_config()})
        assert resp.status_code == 200
        body = resp.json()
        assert body["report"]["command"] == "run"
        assert body["report"]["n_emitters"] == 4
        table = body["tables"]["trajectory"]
        assert table["columns"][0] == "t_fs"
        assert len(table["rows"]) == 151

    def test_solver_override(self, client):
        req = {"config": small_config(), "solver": "mf1"}
        resp = client.post("/run", json=req)
        assert resp.status_code == 200
        assert resp.json()["report"]["solvers"] == ["mf1"]

    def test_validation_error_422(self, client):
        raw = small_config()
        raw["geometry"]["kind"] = "hexagonal"
        resp = client.post("/run", json={"config": raw})
        assert resp.status_code == 422

    def test_semantic_config_error_400(self, client):
        raw = small_config()
        raw["drive"]["amplitudes_mev"] = [1.0, 2.0]  # wrong length for N=4
        resp = client.post("/run", json={"config": raw})
        assert resp.status_code == 400
        assert resp.json()["detail"]["category"] == "config"

    def test_resource_guard_409(self, client):
        raw = small_config()
        raw["geometry"]["n_side"] = 4
        raw["run"]["solver"] = "exact"
        resp = client.post("/run", json={"config": raw})
        assert resp.status_code == 409
        assert resp.json()["detail"]["category"] == "resource"


class TestSweepEndpoint:
    def test_sweep(self, client):
        raw = small_config()
        raw["run"]["t_final_fs"] = 250.0
        resp = client.post("/sweep", json={"config": raw, "n_values": [4, 5, 6]})
        assert resp.status_code == 200
        body = resp.json()
        assert body["report"]["scaling_fit"]["i_max_fit"]["b"] > 0
        assert "summary" in body["tables"]

    def test_sweep_needs_n_values(self, client):
        resp = client.post("/sweep", json={"config": small_config()})
        assert resp.status_code == 422


class TestCompareEndpoint:
    def test_compare(self, client):
        resp = client.post("/compare", json={"config": small_config()})
        assert resp.status_code == 200
        body = resp.json()
        assert set(body["report"]["deviations"]) == {"exact_vs_mf2", "exact_vs_mf1"}

    def test_round_trip_values_are_floats(self, client):
        resp = client.post("/run", json={"config": small_config()})
        rows = np.asarray(resp.json()["tables"]["trajectory"]["rows"])
        assert rows.dtype == np.float64
        assert rows.shape[1] == 13
