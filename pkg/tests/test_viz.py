import re
import xml.etree.ElementTree as ET

from tactiletrace.hexgrid import default_grid
from tactiletrace.pipeline import process
from tactiletrace.scenes import cable_scene, cloth_edge_scene
from tactiletrace.simulator import SensorModel, render
from tactiletrace.tracer import ControllerConfig, trace
from tactiletrace.viz import ascii_frame, svg_frame, svg_trace

GRID = default_grid()


def grid_lines(text: str) -> list[str]:
    return [line for line in text.splitlines() if line and not line.startswith("#")]


def test_ascii_layout():
    frame = render(cable_scene(), GRID, SensorModel())
    text = ascii_frame(frame, GRID, process(frame, GRID))
    lines = grid_lines(text)
    assert len(lines) == 8
    for printed, line in enumerate(lines):
        row = 7 - printed  # rows print top-down, highest row first
        assert len(re.findall(r"\[\s*\d+\]|\d+", line)) == 4
        # a bright cell's slot carries one leading space of its own, so the
        # half-cell indent shows as >= 3 leading spaces on odd rows
        indent = len(line) - len(line.lstrip())
        if row % 2:
            assert indent >= 3
        else:
            assert indent <= 1


def test_ascii_marks_dark_cells():
    frame = render(cable_scene(), GRID, SensorModel())
    feats = process(frame, GRID)
    text = ascii_frame(frame, GRID, feats)
    assert text.count("[") == len(feats.split.dark)
    assert "lambda" in text
    assert "centroid" in text


def test_svg_frame_structure():
    frame = render(cable_scene(), GRID, SensorModel())
    feats = process(frame, GRID)
    doc = svg_frame(frame, GRID, feats)
    root = ET.fromstring(doc)
    ns = "{http://www.w3.org/2000/svg}"
    rects = root.findall(f".//{ns}rect")
    circles = root.findall(f".//{ns}circle")
    assert len(rects) == 32
    assert len(circles) == len(feats.markers)


def test_svg_trace_structure():
    template = cloth_edge_scene()
    from tactiletrace.simulator import Pose2D, scene_at_pose

    start = process(render(scene_at_pose(template, Pose2D()), GRID, SensorModel()), GRID)
    cfg = ControllerConfig(k_p=0.5, setpoint_y=start.centroid[1], max_steps=20)
    result = trace("cloth_edge", template, cfg, GRID, SensorModel())
    doc = svg_trace(result, template, GRID)
    root = ET.fromstring(doc)
    ns = "{http://www.w3.org/2000/svg}"
    polylines = root.findall(f".//{ns}polyline")
    assert len(polylines) >= 2  # scene geometry plus the trajectory
    assert len(root.findall(f".//{ns}circle")) >= len(result.trajectory)
