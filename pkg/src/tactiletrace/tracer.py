"""Closed-loop tracing: follow a cloth edge or cable with an ideal gripper.

Each iteration renders a frame at the current gripper pose, extracts
features, applies a proportional lateral correction that holds the dark
centroid at a target height in the grid, and advances along the heading.
Cable traces additionally steer the heading toward the sensed band angle.
The gripper is an idealized point; there are no arm kinematics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hexgrid import SensorGrid, default_grid
from .pipeline import Band, Corner, EdgeFeatures, NoContact, PipelineParams, process
from .simulator import Pose2D, Scene, SensorModel, render, scene_at_pose, READOUT_HZ

TASKS = ("cloth_edge", "cloth_corner", "cable")


class BadTemplate(ValueError):
    """The start pose sees nothing traceable."""


@dataclass(frozen=True)
class ControllerConfig:
    """Proportional tracing gains and loop limits.

    ``k_p`` converts centroid height error to lateral correction (mm per
    mm); ``k_heading`` steers toward the band angle on cable traces (deg
    per deg).  Defaults are hand-tuned for the builtin templates.
    """

    k_p: float = 0.5
    setpoint_y: float = 15.0
    step_mm: float = 5.0
    max_steps: int = 60
    k_heading: float = 0.5
    lost_contact_frames: int = 3  # debounce: a single empty frame must not abort

    def __post_init__(self) -> None:
        if self.k_p < 0:
            raise ValueError("k_p must be >= 0")
        if self.step_mm <= 0:
            raise ValueError("step_mm must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")


@dataclass(frozen=True)
class TraceEvent:
    kind: str  # corner_detected | lost_contact | completed
    step: int
    vertex_mm: tuple[float, float] | None = None  # world frame, corners only


@dataclass(frozen=True)
class TraceResult:
    """One pose, feature set and centroid error per executed step."""

    trajectory: tuple[Pose2D, ...]
    features: tuple[EdgeFeatures, ...]
    errors: tuple[float | None, ...]  # setpoint - centroid height, mm
    events: tuple[TraceEvent, ...]

    @property
    def terminal_event(self) -> TraceEvent:
        return self.events[-1]


def control_step(centroid_y: float, config: ControllerConfig) -> float:
    """Proportional correction: how far the centroid should move, in mm."""
    return config.k_p * (config.setpoint_y - centroid_y)


def trace(
    task: str,
    template: Scene,
    config: ControllerConfig | None = None,
    grid: SensorGrid | None = None,
    model: SensorModel | None = None,
    params: PipelineParams | None = None,
    start_pose: Pose2D | None = None,
) -> TraceResult:
    """Run a closed-loop trace of a world-frame scene template.

    Per step: render at the current pose, process, correct the lateral
    position by the proportional law, advance ``step_mm`` along the
    heading.  Terminates on a detected corner (cloth_corner task), on
    ``lost_contact_frames`` consecutive empty frames, or after
    ``max_steps`` (completed).  Raises BadTemplate when the very first
    frame sees nothing.
    """
    if task not in TASKS:
        raise ValueError(f"unknown task {task!r}, expected one of {TASKS}")
    if config is None:
        config = ControllerConfig()
    if grid is None:
        grid = default_grid()
    if model is None:
        model = SensorModel()
    if params is None:
        params = PipelineParams()
    pose = start_pose if start_pose is not None else Pose2D()
    rng = np.random.default_rng(model.seed)

    trajectory: list[Pose2D] = []
    features: list[EdgeFeatures] = []
    errors: list[float | None] = []
    events: list[TraceEvent] = []
    none_streak = 0
    corner_reported = False
    terminal: TraceEvent | None = None

    for step in range(config.max_steps):
        scene = scene_at_pose(template, pose)
        frame = render(
            scene,
            grid,
            model,
            seq=step & 0xFFFF,
            timestamp_ms=round(step * 1000.0 / READOUT_HZ),
            rng=rng,
        )
        feats = process(frame, grid, params)
        trajectory.append(pose)
        features.append(feats)

        if isinstance(feats.kind, NoContact):
            if step == 0:
                raise BadTemplate("start frame sees nothing traceable")
            errors.append(None)
            none_streak += 1
            if none_streak >= config.lost_contact_frames:
                terminal = TraceEvent(kind="lost_contact", step=step)
                break
        else:
            none_streak = 0
            centroid_y = feats.centroid[1]
            error = config.setpoint_y - centroid_y
            errors.append(error)

            if isinstance(feats.kind, Corner):
                if not corner_reported:
                    vx, vy = pose.apply(np.array(feats.kind.vertex_mm))[0]
                    event = TraceEvent(
                        kind="corner_detected", step=step, vertex_mm=(float(vx), float(vy))
                    )
                    corner_reported = True
                    if task == "cloth_corner":
                        terminal = event
                        break
                    events.append(event)
            else:
                corner_reported = False

            if task == "cable" and isinstance(feats.kind, Band):
                pose = Pose2D(
                    x=pose.x,
                    y=pose.y,
                    heading_deg=pose.heading_deg + config.k_heading * feats.kind.angle_deg,
                )

            # The correction is the desired centroid motion in the grid;
            # the gripper moves the opposite way along its lateral axis.
            correction = control_step(centroid_y, config)
            heading = math.radians(pose.heading_deg)
            lateral = (-math.sin(heading), math.cos(heading))
            pose = Pose2D(
                x=pose.x - correction * lateral[0],
                y=pose.y - correction * lateral[1],
                heading_deg=pose.heading_deg,
            )

        heading = math.radians(pose.heading_deg)
        pose = Pose2D(
            x=pose.x + config.step_mm * math.cos(heading),
            y=pose.y + config.step_mm * math.sin(heading),
            heading_deg=pose.heading_deg,
        )

    if terminal is None:
        terminal = TraceEvent(kind="completed", step=len(trajectory) - 1)
    events.append(terminal)
    return TraceResult(
        trajectory=tuple(trajectory),
        features=tuple(features),
        errors=tuple(errors),
        events=tuple(events),
    )


def result_to_dicts(result: TraceResult, params: PipelineParams | None = None) -> list[dict]:
    """One JSON object per step (the trace JSONL schema)."""
    from .pipeline import features_to_dict

    rows = []
    for step, (pose, feats, error) in enumerate(
        zip(result.trajectory, result.features, result.errors)
    ):
        rows.append(
            {
                "step": step,
                "pose": {"x_mm": pose.x, "y_mm": pose.y, "heading_deg": pose.heading_deg},
                "centroid_error_mm": error,
                "features": features_to_dict(feats, params),
            }
        )
    return rows


def events_to_dicts(result: TraceResult) -> list[dict]:
    out = []
    for event in result.events:
        row: dict = {"kind": event.kind, "step": event.step}
        if event.vertex_mm is not None:
            row["vertex_mm"] = list(event.vertex_mm)
        out.append(row)
    return out
