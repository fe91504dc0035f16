"""Declarative scene files and the built-in task templates.

A scene file is flat text, one statement per line::

    # comment
    pose <x_mm> <y_mm> <heading_deg>
    material <name> <tau>
    halfplane <px> <py> <dx> <dy> <left|right> <material>
    strip <px> <py> <dx> <dy> <width_mm> <material>
    wedge <vx> <vy> <start_deg> <end_deg> <material>
    sine_edge <px> <py> <dx> <dy> <amplitude_mm> <wavelength_mm> <phase_deg> <left|right> <material>

Materials must be declared before the shapes that use them.  Templates for
the three demonstration tasks ship with the package and can be loaded by
name: cloth_edge, cloth_corner, cable_3mm, empty.
"""

from __future__ import annotations

import math
from importlib import resources
from pathlib import Path

from .simulator import HalfPlane, Material, Pose2D, Scene, SineEdge, Strip, Wedge

BUILTIN_SCENES = ("cloth_edge", "cloth_corner", "cable_3mm", "empty")

# World-frame layout shared by the builtin templates: the gripper starts at
# the origin with heading 0, so the grid initially covers x 0..38, y 0..30
# and traced features start at mid-height.
_EDGE_Y = 15.0
_CORNER_AHEAD = 120.0  # vertex distance beyond the grid's leading edge


class SceneFormatError(ValueError):
    """Malformed scene file."""


def parse_scene(text: str, source: str = "<scene>") -> Scene:
    """Parse scene text into a Scene; raises SceneFormatError with context."""
    materials: dict[str, Material] = {}
    layers = []
    pose = Pose2D()

    def fail(line_no: int, message: str):
        raise SceneFormatError(f"{source}:{line_no}: {message}")

    def floats(tokens, line_no):
        try:
            return [float(t) for t in tokens]
        except ValueError:
            fail(line_no, f"expected numbers, got {tokens!r}")

    def material_of(name: str, line_no: int) -> Material:
        if name not in materials:
            fail(line_no, f"unknown material {name!r} (declare it first)")
        return materials[name]

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        keyword, *args = line.split()
        try:
            if keyword == "pose":
                if len(args) != 3:
                    fail(line_no, "pose takes x y heading_deg")
                x, y, heading = floats(args, line_no)
                pose = Pose2D(x=x, y=y, heading_deg=heading)
            elif keyword == "material":
                if len(args) != 2:
                    fail(line_no, "material takes name tau")
                materials[args[0]] = Material(args[0], float(args[1]))
            elif keyword == "halfplane":
                if len(args) != 6:
                    fail(line_no, "halfplane takes px py dx dy side material")
                px, py, dx, dy = floats(args[:4], line_no)
                shape = HalfPlane(point=(px, py), direction=(dx, dy), side=args[4])
                layers.append((shape, material_of(args[5], line_no)))
            elif keyword == "strip":
                if len(args) != 6:
                    fail(line_no, "strip takes px py dx dy width material")
                px, py, dx, dy, width = floats(args[:5], line_no)
                shape = Strip(point=(px, py), direction=(dx, dy), width=width)
                layers.append((shape, material_of(args[5], line_no)))
            elif keyword == "wedge":
                if len(args) != 5:
                    fail(line_no, "wedge takes vx vy start_deg end_deg material")
                vx, vy, start, end = floats(args[:4], line_no)
                shape = Wedge(vertex=(vx, vy), start_deg=start, end_deg=end)
                layers.append((shape, material_of(args[4], line_no)))
            elif keyword == "sine_edge":
                if len(args) != 9:
                    fail(line_no, "sine_edge takes px py dx dy amplitude wavelength phase side material")
                px, py, dx, dy, amp, wav, phase = floats(args[:7], line_no)
                shape = SineEdge(
                    point=(px, py),
                    direction=(dx, dy),
                    amplitude=amp,
                    wavelength=wav,
                    phase_deg=phase,
                    side=args[7],
                )
                layers.append((shape, material_of(args[8], line_no)))
            else:
                fail(line_no, f"unknown keyword {keyword!r}")
        except ValueError as exc:
            if isinstance(exc, SceneFormatError):
                raise
            fail(line_no, str(exc))
    return Scene(layers=tuple(layers), pose=pose)


def cloth_edge_scene(
    edge_y: float = _EDGE_Y,
    tilt_deg: float = 5.0,
    amplitude: float = 5.0,
    wavelength: float = 200.0,
    tau: float = 0.10,
) -> Scene:
    """Cloth below a gently drifting edge, anchored at the start grid centre.

    The base line is tilted against the travel direction so an uncorrected
    trace provably walks off the cloth.
    """
    direction = (math.cos(math.radians(tilt_deg)), math.sin(math.radians(tilt_deg)))
    cloth = Material("cloth", tau)
    edge = SineEdge(
        point=(19.0, edge_y),
        direction=direction,
        amplitude=amplitude,
        wavelength=wavelength,
        side="right",
    )
    return Scene(layers=((edge, cloth),))


def cloth_corner_scene(
    edge_y: float = _EDGE_Y, corner_ahead: float = _CORNER_AHEAD, tau: float = 0.10
) -> Scene:
    """Cloth with a straight edge that ends in a 90 degree corner.

    The vertex sits ``corner_ahead`` mm beyond the grid's leading edge at
    the start pose (world x = 38 + corner_ahead).
    """
    cloth = Material("cloth", tau)
    corner = Wedge(vertex=(38.0 + corner_ahead, edge_y), start_deg=180.0, end_deg=270.0)
    return Scene(layers=((corner, cloth),))


def cable_scene(angle_deg: float = 20.0, width: float = 3.0, tau: float = 0.0) -> Scene:
    """An opaque cable crossing the start view at the given angle."""
    direction = (math.cos(math.radians(angle_deg)), math.sin(math.radians(angle_deg)))
    cable = Material("cable", tau)
    strip = Strip(point=(19.0, 15.0), direction=direction, width=width)
    return Scene(layers=((strip, cable),))


def _builtin_text(name: str) -> str:
    return resources.files("tactiletrace").joinpath(f"scenes/{name}.scene").read_text("utf-8")


def load_scene(name_or_path: str | Path) -> Scene:
    """Load a scene by builtin name or from a file path."""
    name = str(name_or_path)
    if name in BUILTIN_SCENES:
        return parse_scene(_builtin_text(name), source=name)
    path = Path(name_or_path)
    if not path.is_file():
        raise SceneFormatError(
            f"no such scene: {name!r} (not a builtin {BUILTIN_SCENES} and not a file)"
        )
    return parse_scene(path.read_text("utf-8"), source=str(path))


def scene_text(name: str) -> str:
    """Raw text of a builtin scene template."""
    if name not in BUILTIN_SCENES:
        raise SceneFormatError(f"no builtin scene named {name!r}")
    return _builtin_text(name)
