"""Synthetic frames from parametric occlusion scenes.

Grasped material sits between the emitter and receiver fingers and
attenuates the IR reaching each cell.  A scene is a stack of 2-D shapes
with per-material transmission coefficients; a cell's value is the mean
transmission over a supersampled cell footprint, scaled to 8 bits.
Stacked shapes attenuate multiplicatively.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .frame_codec import Frame
from .hexgrid import SensorGrid, default_grid


@dataclass(frozen=True)
class Pose2D:
    """Rigid 2-D transform: rotate by heading, then translate."""

    x: float = 0.0
    y: float = 0.0
    heading_deg: float = 0.0

    def matrix(self) -> np.ndarray:
        c = math.cos(math.radians(self.heading_deg))
        s = math.sin(math.radians(self.heading_deg))
        return np.array([[c, -s], [s, c]])

    def apply(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return pts @ self.matrix().T + np.array([self.x, self.y])

    def inverse(self) -> "Pose2D":
        rot = self.matrix()
        tx, ty = -(rot.T @ np.array([self.x, self.y]))
        return Pose2D(x=float(tx), y=float(ty), heading_deg=-self.heading_deg)

    def compose(self, other: "Pose2D") -> "Pose2D":
        """self applied after other."""
        rot = self.matrix()
        tx, ty = rot @ np.array([other.x, other.y]) + np.array([self.x, self.y])
        return Pose2D(x=float(tx), y=float(ty), heading_deg=self.heading_deg + other.heading_deg)


@dataclass(frozen=True)
class Material:
    """A grasped material, reduced to its IR transmission."""

    name: str
    tau: float  # 0 = opaque, 1 = fully transparent

    def __post_init__(self) -> None:
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError(f"tau must be in [0, 1], got {self.tau}")


# Ordered opaque to translucent; taus are defaults chosen to preserve the
# qualitative ordering, not measured values.
DEFAULT_MATERIALS = (
    Material("cardboard", 0.02),
    Material("towel", 0.15),
    Material("paper", 0.35),
    Material("napkin", 0.55),
    Material("ziplock", 0.85),
)


def _unit(dx: float, dy: float) -> tuple[float, float]:
    norm = math.hypot(dx, dy)
    if norm == 0:
        raise ValueError("direction must be non-zero")
    return dx / norm, dy / norm


@dataclass(frozen=True)
class HalfPlane:
    """Material on one side of a directed boundary line.

    ``side`` is relative to the direction: "left" occludes the counter-
    clockwise side.
    """

    point: tuple[float, float]
    direction: tuple[float, float]
    side: str = "left"

    def __post_init__(self) -> None:
        if self.side not in ("left", "right"):
            raise ValueError(f"side must be 'left' or 'right', got {self.side!r}")

    def contains(self, points: np.ndarray) -> np.ndarray:
        dx, dy = _unit(*self.direction)
        rel_x = points[:, 0] - self.point[0]
        rel_y = points[:, 1] - self.point[1]
        cross = dx * rel_y - dy * rel_x
        return cross > 0 if self.side == "left" else cross < 0


@dataclass(frozen=True)
class Strip:
    """Material band of finite width around a centerline (a cable)."""

    point: tuple[float, float]
    direction: tuple[float, float]
    width: float

    def __post_init__(self) -> None:
        if self.width <= 0:
            raise ValueError("strip width must be positive")

    def contains(self, points: np.ndarray) -> np.ndarray:
        dx, dy = _unit(*self.direction)
        rel_x = points[:, 0] - self.point[0]
        rel_y = points[:, 1] - self.point[1]
        cross = dx * rel_y - dy * rel_x
        return np.abs(cross) <= self.width / 2.0


@dataclass(frozen=True)
class Wedge:
    """Material filling the sector swept CCW from start_deg to end_deg."""

    vertex: tuple[float, float]
    start_deg: float
    end_deg: float

    def __post_init__(self) -> None:
        span = (self.end_deg - self.start_deg) % 360.0
        if span in (0.0, 180.0):
            raise ValueError("wedge boundary directions must not be parallel")

    @property
    def opening_deg(self) -> float:
        return (self.end_deg - self.start_deg) % 360.0

    def contains(self, points: np.ndarray) -> np.ndarray:
        rel_x = points[:, 0] - self.vertex[0]
        rel_y = points[:, 1] - self.vertex[1]
        ang = np.degrees(np.arctan2(rel_y, rel_x))
        rel = (ang - self.start_deg) % 360.0
        return rel <= self.opening_deg


@dataclass(frozen=True)
class SineEdge:
    """Half-plane whose boundary waves sinusoidally around a base line.

    In the base line's frame (u along the direction, w to its left) the
    boundary is w = amplitude * sin(2*pi*u/wavelength + phase).
    """

    point: tuple[float, float]
    direction: tuple[float, float]
    amplitude: float
    wavelength: float
    phase_deg: float = 0.0
    side: str = "left"

    def __post_init__(self) -> None:
        if self.wavelength <= 0:
            raise ValueError("wavelength must be positive")
        if self.side not in ("left", "right"):
            raise ValueError(f"side must be 'left' or 'right', got {self.side!r}")

    def contains(self, points: np.ndarray) -> np.ndarray:
        dx, dy = _unit(*self.direction)
        rel_x = points[:, 0] - self.point[0]
        rel_y = points[:, 1] - self.point[1]
        along = dx * rel_x + dy * rel_y
        across = dx * rel_y - dy * rel_x
        boundary = self.amplitude * np.sin(
            2.0 * math.pi * along / self.wavelength + math.radians(self.phase_deg)
        )
        return across > boundary if self.side == "left" else across < boundary


Shape = HalfPlane | Strip | Wedge | SineEdge


@dataclass(frozen=True)
class Scene:
    """Ordered (shape, material) layers plus their pose in grid coordinates.

    ``pose`` maps scene coordinates into grid coordinates.  Overlapping
    layers attenuate multiplicatively.
    """

    layers: tuple[tuple[Shape, Material], ...] = ()
    pose: Pose2D = field(default_factory=Pose2D)

    def transmission(self, points_grid: np.ndarray) -> np.ndarray:
        """Fraction of IR transmitted at each grid-frame point."""
        pts = np.atleast_2d(np.asarray(points_grid, dtype=float))
        local = self.pose.inverse().apply(pts)
        trans = np.ones(len(local))
        for shape, material in self.layers:
            mask = shape.contains(local)
            trans = np.where(mask, trans * material.tau, trans)
        return trans


@dataclass(frozen=True)
class SensorModel:
    """Readout model: quantization, additive noise, footprint supersampling."""

    full_scale: int = 255
    noise_sigma: float = 0.0
    samples_per_cell: int = 64
    seed: int = 0

    def __post_init__(self) -> None:
        if self.samples_per_cell < 1:
            raise ValueError("samples_per_cell must be >= 1")


def _sample_offsets(spec_pitch_x: float, spec_pitch_y: float, samples: int) -> np.ndarray:
    # Regular k x k lattice centred in the footprint; rounds the sample
    # count up to the next perfect square.  A regular lattice keeps the
    # noiseless render deterministic and unbiased for straight boundaries.
    k = math.ceil(math.sqrt(samples))
    frac = (np.arange(k) + 0.5) / k - 0.5
    xs = frac * spec_pitch_x
    ys = frac * spec_pitch_y
    gx, gy = np.meshgrid(xs, ys)
    return np.column_stack([gx.ravel(), gy.ravel()])


def render(
    scene: Scene,
    grid: SensorGrid | None = None,
    model: SensorModel | None = None,
    seq: int = 0,
    timestamp_ms: int = 0,
    rng: np.random.Generator | None = None,
) -> Frame:
    """Render one frame: per cell, mean transmission over its footprint.

    The footprint is a pitch_x x pitch_y rectangle centred on the cell.
    Deterministic given the model seed; pass ``rng`` to draw a sequence of
    differently-noised frames.
    """
    if grid is None:
        grid = default_grid()
    if model is None:
        model = SensorModel()
    offsets = _sample_offsets(grid.spec.pitch_x, grid.spec.pitch_y, model.samples_per_cell)
    points = (grid.centres[:, None, :] + offsets[None, :, :]).reshape(-1, 2)
    trans = scene.transmission(points).reshape(grid.n_cells, -1).mean(axis=1)
    values = model.full_scale * trans
    if model.noise_sigma > 0:
        if rng is None:
            rng = np.random.default_rng(model.seed)
        values = values + rng.normal(0.0, model.noise_sigma, size=values.shape)
    quantized = np.clip(np.rint(values), 0, model.full_scale).astype(int)
    return Frame(values=tuple(int(v) for v in quantized), seq=seq, timestamp_ms=timestamp_ms)


def scene_at_pose(template: Scene, gripper_pose: Pose2D) -> Scene:
    """Express a world-frame scene in the grid frame of a posed gripper.

    The gripper pose maps grid coordinates to world coordinates, so the
    scene's grid-frame pose is the inverse of the gripper pose composed
    with the template's own pose.
    """
    return Scene(layers=template.layers, pose=gripper_pose.inverse().compose(template.pose))


READOUT_HZ = 55.0


def simulate_stream(
    scene: Scene,
    grid: SensorGrid | None = None,
    model: SensorModel | None = None,
    n_frames: int = 1,
    fps: float = READOUT_HZ,
) -> list[Frame]:
    """Render a timed frame stream of a static scene at the readout rate."""
    if model is None:
        model = SensorModel()
    rng = np.random.default_rng(model.seed)
    frames = []
    for i in range(n_frames):
        frames.append(
            render(
                scene,
                grid,
                model,
                seq=i & 0xFFFF,
                timestamp_ms=round(i * 1000.0 / fps),
                rng=rng,
            )
        )
    return frames


def material_sweep(
    materials: Sequence[Material] | None = None,
    grid: SensorGrid | None = None,
    model: SensorModel | None = None,
) -> list[tuple[str, float]]:
    """Mean reported value per material when it covers the whole grid."""
    if materials is None:
        materials = DEFAULT_MATERIALS
    if grid is None:
        grid = default_grid()
    results = []
    xmin, ymin, _, _ = grid.footprint_bounds
    for material in materials:
        cover = HalfPlane(point=(xmin, ymin - 1e6), direction=(1.0, 0.0), side="left")
        frame = render(Scene(layers=((cover, material),)), grid, model)
        results.append((material.name, float(np.mean(frame.values))))
    return results
