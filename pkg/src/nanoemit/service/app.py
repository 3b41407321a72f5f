"""FastAPI service wrapping the simulation runner.

Endpoints accept a run configuration (same structure as the TOML files)
and return the report plus all result tables inline, so clients decide
where files land.  Domain errors map to structured responses:
config problems -> 400, resource guards -> 409, solver failures -> 500.
"""

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..config import parse_config
from ..errors import (
    ConfigError,
    CouplingMatrixError,
    DistanceRangeError,
    GeometryError,
    IntegrationError,
    NanoemitError,
    ResourceGuardError,
    UnsupportedGeometryError,
)
from .. import runner
from .schemas import (
    HealthResponse,
    RunRequest,
    RunResponse,
    SweepRequest,
    TableModel,
)

app = FastAPI(
    title="nanoemit",
    version=__version__,
    description="Collective-emission simulations of coupled quantum emitters",
)

_CONFIG_ERRORS = (
    ConfigError,
    GeometryError,
    UnsupportedGeometryError,
    CouplingMatrixError,
    DistanceRangeError,
    ValueError,
)


def _to_response(outcome):
    tables = {
        name: TableModel(columns=t.columns, rows=t.data.tolist())
        for name, t in outcome.tables.items()
    }
    return RunResponse(report=outcome.report, tables=tables)


def _apply_overrides(req):
    raw = req.config.as_raw_dict()
    if req.solver is not None:
        raw.setdefault("run", {})["solver"] = req.solver
    return parse_config(raw)


def _execute(func, req, **kwargs):
    try:
        cfg = _apply_overrides(req)
        outcome = func(cfg, rtol=req.rtol, atol=req.atol, **kwargs)
    except ResourceGuardError as exc:
        raise HTTPException(
            status_code=409, detail={"category": "resource", "message": str(exc)}
        )
    except _CONFIG_ERRORS as exc:
        raise HTTPException(
            status_code=400, detail={"category": "config", "message": str(exc)}
        )
    except (IntegrationError, NanoemitError) as exc:
        raise HTTPException(
            status_code=500, detail={"category": "solver", "message": str(exc)}
        )
    return _to_response(outcome)


@app.get("/health", response_model=HealthResponse)
def health():
    return HealthResponse(status="ok", version=__version__)


@app.post("/run", response_model=RunResponse)
def run_endpoint(req: RunRequest):
    return _execute(runner.run, req)


@app.post("/sweep", response_model=RunResponse)
def sweep_endpoint(req: SweepRequest):
    return _execute(runner.sweep, req, n_values=req.n_values)


@app.post("/compare", response_model=RunResponse)
def compare_endpoint(req: RunRequest):
    return _execute(runner.compare, req)
