"""Tactile fingertip toolkit: frame codec, feature pipeline, simulator, tracer."""

__version__ = "0.1.0"

from .frame_codec import Frame, RawFrame
from .hexgrid import CellId, GridSpec, SensorGrid, build_grid, default_grid
from .pipeline import EdgeFeatures, PipelineParams, process
from .simulator import Material, Pose2D, Scene, SensorModel, render
from .tracer import ControllerConfig, TraceResult, trace

__all__ = [
    "Frame",
    "RawFrame",
    "CellId",
    "GridSpec",
    "SensorGrid",
    "build_grid",
    "default_grid",
    "EdgeFeatures",
    "PipelineParams",
    "process",
    "Material",
    "Pose2D",
    "Scene",
    "SensorModel",
    "render",
    "ControllerConfig",
    "TraceResult",
    "trace",
]
