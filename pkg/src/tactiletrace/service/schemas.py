"""Request and response models for the HTTP service."""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..hexgrid import GridSpec
from ..pipeline import PipelineParams
from ..simulator import Material, SensorModel
from ..tracer import ControllerConfig


class GridSpecModel(BaseModel):
    rows: int = 8
    cols: int = 4
    pitch_x_mm: float = 38.0 / 3.5
    pitch_y_mm: float = 30.0 / 7.0
    odd_row_offset: float = 0.5

    def to_spec(self) -> GridSpec:
        return GridSpec(
            rows=self.rows,
            cols=self.cols,
            pitch_x=self.pitch_x_mm,
            pitch_y=self.pitch_y_mm,
            odd_row_offset=self.odd_row_offset,
        )


class SensorModelModel(BaseModel):
    noise_sigma: float = 0.0
    samples_per_cell: int = 64
    seed: int = 0

    def to_model(self) -> SensorModel:
        return SensorModel(
            noise_sigma=self.noise_sigma,
            samples_per_cell=self.samples_per_cell,
            seed=self.seed,
        )


class PipelineParamsModel(BaseModel):
    min_gap: int = 8
    max_segments: int = 2
    corner_residual_ratio: float = 0.5
    min_corner_angle_deg: float = 20.0
    band_side_tol_mm: float = 1.0
    band_min_side_markers: int = 2

    def to_params(self) -> PipelineParams:
        return PipelineParams(
            min_gap=self.min_gap,
            max_segments=self.max_segments,
            corner_residual_ratio=self.corner_residual_ratio,
            min_corner_angle_deg=self.min_corner_angle_deg,
            band_side_tol_mm=self.band_side_tol_mm,
            band_min_side_markers=self.band_min_side_markers,
        )


class ControllerConfigModel(BaseModel):
    k_p: float = 0.5
    setpoint_y: float | None = None  # None: hold the start frame's centroid height
    step_mm: float = 5.0
    max_steps: int = 60
    k_heading: float = 0.5

    def to_config(self, setpoint_y: float) -> ControllerConfig:
        return ControllerConfig(
            k_p=self.k_p,
            setpoint_y=setpoint_y,
            step_mm=self.step_mm,
            max_steps=self.max_steps,
            k_heading=self.k_heading,
        )


class SceneRef(BaseModel):
    """A scene given either by builtin name or as inline scene text."""

    scene_name: str | None = None
    scene_text: str | None = None

    @model_validator(mode="after")
    def _one_of(self) -> "SceneRef":
        if (self.scene_name is None) == (self.scene_text is None):
            raise ValueError("provide exactly one of scene_name or scene_text")
        return self


class SimulateRequest(SceneRef):
    frames: int = Field(default=10, ge=1, le=100_000)
    grid: GridSpecModel = GridSpecModel()
    sensor: SensorModelModel = SensorModelModel()


class ProcessFrameRequest(BaseModel):
    values: list[int]
    grid: GridSpecModel = GridSpecModel()
    params: PipelineParamsModel = PipelineParamsModel()


class FitModel(BaseModel):
    segments: list[list[list[float]]]
    residual_mm: float
    vertex_mm: list[float] | None = None


class KindModel(BaseModel):
    type: str
    angle_deg: float | None = None
    vertex_mm: list[float] | None = None
    opening_deg: float | None = None
    width_mm: float | None = None


class FeaturesModel(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    threshold: float | None = Field(default=None, alias="lambda")
    dark: list[int]
    centroid_mm: list[float] | None
    markers_mm: list[list[float]]
    fit: FitModel | None
    kind: KindModel
    params: dict | None = None


class PoseModel(BaseModel):
    x_mm: float
    y_mm: float
    heading_deg: float


class TraceRequest(SceneRef):
    task: str
    grid: GridSpecModel = GridSpecModel()
    sensor: SensorModelModel = SensorModelModel()
    controller: ControllerConfigModel = ControllerConfigModel()
    params: PipelineParamsModel = PipelineParamsModel()
    include_svg: bool = True


class TraceStepModel(BaseModel):
    step: int
    pose: PoseModel
    centroid_error_mm: float | None
    features: FeaturesModel


class TraceEventModel(BaseModel):
    kind: str
    step: int
    vertex_mm: list[float] | None = None


class TraceResponse(BaseModel):
    steps: list[TraceStepModel]
    events: list[TraceEventModel]
    setpoint_y: float
    svg: str | None = None


class RenderRequest(BaseModel):
    """Render either explicit frame values or the first frame of a scene."""

    values: list[int] | None = None
    scene_name: str | None = None
    scene_text: str | None = None
    format: str = "ascii"
    grid: GridSpecModel = GridSpecModel()
    sensor: SensorModelModel = SensorModelModel()
    params: PipelineParamsModel = PipelineParamsModel()

    @model_validator(mode="after")
    def _source(self) -> "RenderRequest":
        given = sum(x is not None for x in (self.values, self.scene_name, self.scene_text))
        if given != 1:
            raise ValueError("provide exactly one of values, scene_name or scene_text")
        if self.format not in ("ascii", "svg"):
            raise ValueError(f"format must be 'ascii' or 'svg', got {self.format!r}")
        return self


class MaterialModel(BaseModel):
    name: str
    tau: float = Field(ge=0.0, le=1.0)

    def to_material(self) -> Material:
        return Material(name=self.name, tau=self.tau)


class SweepRequest(BaseModel):
    materials: list[MaterialModel] | None = None
    grid: GridSpecModel = GridSpecModel()
    sensor: SensorModelModel = SensorModelModel()


class SweepEntry(BaseModel):
    name: str
    mean_value: float


class SweepResponse(BaseModel):
    materials: list[SweepEntry]


class HealthResponse(BaseModel):
    status: str
    version: str
