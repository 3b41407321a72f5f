"""Pydantic request/response models for the simulation service.

The request config mirrors the TOML/JSON run-configuration format; deeper
semantic validation (solver guards, matrix properties) happens in the core
package and surfaces as structured error responses.
"""

from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field


class GeometrySpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["square", "linear"]
    spacing_nm: float = Field(gt=0)
    dipole_debye: List[float] = Field(min_length=3, max_length=3)
    transition_energy_mev: float = Field(gt=0)
    n_side: Optional[int] = Field(default=None, ge=1)
    count: Optional[int] = Field(default=None, ge=1)
    center_nm: Optional[List[float]] = Field(default=None, min_length=3, max_length=3)
    start_nm: Optional[List[float]] = Field(default=None, min_length=3, max_length=3)
    direction: Optional[List[float]] = Field(default=None, min_length=3, max_length=3)


class CouplingSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    source: Literal["free_space", "synthetic", "tabulated"]
    gamma_self_mev: Optional[float] = None
    omega_self_mev: Optional[float] = None
    gamma_range_nm: Optional[float] = Field(default=None, gt=0)
    omega_range_nm: Optional[float] = Field(default=None, gt=0)
    omega_sign: Optional[int] = None
    path: Optional[str] = None
    k_mode: Literal["constant", "free_space"] = "constant"
    detector_nm: Optional[List[float]] = Field(default=None, min_length=3, max_length=3)


class DriveSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    carrier_energy_mev: float
    amplitude_mev: Optional[float] = None
    amplitudes_mev: Optional[List[float]] = None
    phase_deg: float = 0.0
    envelope: Literal["continuous", "rectangular", "gaussian"] = "continuous"
    t_on_fs: float = 0.0
    t_off_fs: Optional[float] = None
    center_fs: Optional[float] = None
    fwhm_fs: Optional[float] = Field(default=None, gt=0)


class RunSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    solver: Literal["exact", "mf1", "mf2"] = "mf2"
    t_final_fs: float = Field(gt=0)
    output_dt_fs: Optional[float] = Field(default=None, gt=0)
    initial_state: Literal["ground", "inverted"] = "ground"


class AnalysisSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    pulse_window_fs: Optional[List[float]] = Field(default=None, min_length=2, max_length=2)
    pulse_component: Literal["total", "interference", "individual"] = "interference"


class OutputSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    seed: Optional[int] = None


class RunConfigModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    label: str = "run"
    geometry: GeometrySpec
    couplings: CouplingSpec
    drive: DriveSpec
    run: RunSpec
    analysis: AnalysisSpec = AnalysisSpec()
    output: OutputSpec = OutputSpec()

    def as_raw_dict(self):
        return self.model_dump(exclude_none=True)


class RunRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: RunConfigModel
    solver: Optional[Literal["exact", "mf1", "mf2"]] = None
    rtol: Optional[float] = Field(default=None, gt=0)
    atol: Optional[float] = Field(default=None, gt=0)


class SweepRequest(RunRequest):
    n_values: List[int] = Field(min_length=1)


class TableModel(BaseModel):
    columns: List[str]
    rows: List[List[float]]


class RunResponse(BaseModel):
    report: dict
    tables: Dict[str, TableModel]


class HealthResponse(BaseModel):
    status: Literal["ok"]
    version: str


class ErrorDetail(BaseModel):
    category: Literal["config", "resource", "solver"]
    message: str
