"""Per-frame feature extraction: threshold split, centroid, border markers.

A grasped object shadows part of the grid, so the reported values fall into
a dark and a bright cluster.  The stages here split the two clusters at the
largest sorted-value step, locate the shadow centroid, place boundary
markers where the interpolated value crosses the split threshold, fit one
or two line segments to those markers, and classify the contact as a
straight edge, a corner, a band (cable) or nothing.

All geometry is in mm in grid coordinates; angles are degrees from the
grid x-axis in (-90, 90].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .frame_codec import Frame
from .hexgrid import SensorGrid, default_grid

FrameLike = Union[Frame, Sequence[int], np.ndarray]


class NoSplit(ValueError):
    """Frame is too uniform to separate dark from bright."""


class EmptyDark(ValueError):
    pass


class ZeroWeight(ValueError):
    """All dark-cell weights are zero; cannot form a centroid."""


class InsufficientMarkers(ValueError):
    """Fewer than two markers; no line to fit."""


@dataclass(frozen=True)
class PipelineParams:
    """Tunables for the processing stages."""

    min_gap: int = 8                      # reported units; below this, NoSplit
    max_segments: int = 2
    corner_residual_ratio: float = 0.5    # 2-segment fit must beat this ratio
    min_corner_angle_deg: float = 20.0    # bend below this is not a corner
    band_side_tol_mm: float = 1.0         # marker offset that counts as off-line
    band_min_side_markers: int = 2

    def __post_init__(self) -> None:
        if self.min_gap < 1:
            raise ValueError("min_gap must be >= 1")
        if self.max_segments not in (1, 2):
            raise ValueError("max_segments must be 1 or 2")


@dataclass(frozen=True)
class ClusterSplit:
    """Dark/bright partition of a frame at the largest sorted-value step.

    ``dark`` and ``bright`` hold linear cell indices.  ``threshold`` is the
    average of the two cluster means and always separates the clusters:
    max(dark values) < threshold <= min(bright values) is not guaranteed,
    but max(dark values) < min(bright values) is.
    """

    threshold: float
    dark: frozenset[int]
    bright: frozenset[int]
    gap: float


@dataclass(frozen=True)
class EdgeMarker:
    """Point on a neighbor-pair segment where the value crosses threshold."""

    position: tuple[float, float]
    cells: tuple[int, int]


@dataclass(frozen=True)
class Segment:
    start: tuple[float, float]
    end: tuple[float, float]

    @property
    def direction(self) -> tuple[float, float]:
        dx = self.end[0] - self.start[0]
        dy = self.end[1] - self.start[1]
        norm = math.hypot(dx, dy)
        if norm == 0:
            return (1.0, 0.0)
        return (dx / norm, dy / norm)

    @property
    def angle_deg(self) -> float:
        return _line_angle_deg(*self.direction)


@dataclass(frozen=True)
class PiecewiseLinearFit:
    """One or two connected segments fitted to the edge markers.

    ``residual`` is the root-mean-square orthogonal distance of all markers
    to their assigned segment's line, in mm.  ``vertex`` is the joint when
    two segments are present.
    """

    segments: tuple[Segment, ...]
    residual: float
    vertex: tuple[float, float] | None = None


@dataclass(frozen=True)
class StraightEdge:
    angle_deg: float
    name = "straight_edge"


@dataclass(frozen=True)
class Corner:
    vertex_mm: tuple[float, float]
    opening_deg: float
    name = "corner"


@dataclass(frozen=True)
class Band:
    angle_deg: float
    width_mm: float
    name = "band"


@dataclass(frozen=True)
class NoContact:
    name = "none"


FeatureKind = Union[StraightEdge, Corner, Band, NoContact]


@dataclass(frozen=True)
class EdgeFeatures:
    split: ClusterSplit | None
    centroid: tuple[float, float] | None
    markers: tuple[EdgeMarker, ...]
    fit: PiecewiseLinearFit | None
    kind: FeatureKind


def _values_of(frame: FrameLike) -> np.ndarray:
    values = frame.values if isinstance(frame, Frame) else frame
    return np.asarray(values, dtype=float)


def gap_threshold(frame: FrameLike, min_gap: int = 8) -> ClusterSplit:
    """Split a frame into dark and bright cells at the largest value step.

    The values are sorted ascending and the largest step between adjacent
    values located; cells at or below the low side of that step are dark.
    The threshold is the average of the dark-cluster mean and the
    bright-cluster mean.  Ties between equally large steps go to the
    lowest-value step.

    Raises NoSplit when the largest step is below ``min_gap`` (uniform
    frame: nothing grasped, or everything covered).
    """
    if min_gap < 1:
        raise ValueError("min_gap must be >= 1")
    values = _values_of(frame)
    if values.size < 2:
        raise NoSplit("need at least two cells to split")
    order = np.argsort(values, kind="stable")
    sorted_values = values[order]
    gaps = np.diff(sorted_values)
    k = int(np.argmax(gaps))  # first occurrence = lowest-value step
    gap = float(gaps[k])
    if gap < min_gap:
        raise NoSplit(f"largest step {gap} below min_gap {min_gap}")
    dark = frozenset(int(i) for i in order[: k + 1])
    bright = frozenset(int(i) for i in order[k + 1 :])
    threshold = (float(sorted_values[: k + 1].mean()) + float(sorted_values[k + 1 :].mean())) / 2.0
    return ClusterSplit(threshold=threshold, dark=dark, bright=bright, gap=gap)


def dark_centroid(
    frame: FrameLike, split: ClusterSplit, grid: SensorGrid
) -> tuple[float, float]:
    """Weighted mean of dark-cell centres; weights are 255 minus the value.

    Darker cells (stronger shadow) weigh more.
    """
    values = _values_of(frame)
    idx = sorted(split.dark)
    if not idx:
        raise EmptyDark("dark cluster is empty")
    weights = 255.0 - values[idx]
    total = float(weights.sum())
    if total <= 0:
        raise ZeroWeight("all dark-cell weights are zero")
    cx, cy = (weights[:, None] * grid.centres[idx]).sum(axis=0) / total
    return float(cx), float(cy)


def edge_markers(
    frame: FrameLike, threshold: float, grid: SensorGrid
) -> tuple[EdgeMarker, ...]:
    """Interpolate the threshold crossing on every straddling neighbor pair.

    For a pair with values v1, v2 on opposite sides of the threshold, the
    marker sits at c1 + t*(c2 - c1) with t = (threshold - v1)/(v2 - v1), so
    the linearly interpolated value at the marker is exactly the threshold.
    A cell whose value equals the threshold contributes a single marker at
    its own centre.
    """
    if not 0.0 < threshold < 255.0:
        raise ValueError(f"threshold {threshold} outside (0, 255)")
    values = _values_of(frame)
    if values.size != grid.n_cells:
        raise ValueError(f"frame has {values.size} values for a {grid.n_cells}-cell grid")
    markers: list[EdgeMarker] = []
    exact_cells: set[int] = set()
    for i, j in grid.neighbor_pairs():
        v1, v2 = values[i], values[j]
        if v1 == threshold or v2 == threshold:
            for cell in (i, j):
                if values[cell] == threshold and cell not in exact_cells:
                    exact_cells.add(cell)
                    markers.append(EdgeMarker(position=grid.centre(cell), cells=(i, j)))
            continue
        if (v1 - threshold) * (v2 - threshold) < 0:
            t = (threshold - v1) / (v2 - v1)
            c1 = grid.centres[i]
            c2 = grid.centres[j]
            p = c1 + t * (c2 - c1)
            markers.append(EdgeMarker(position=(float(p[0]), float(p[1])), cells=(i, j)))
    return tuple(markers)


def _line_angle_deg(dx: float, dy: float) -> float:
    ang = math.degrees(math.atan2(dy, dx))
    while ang <= -90.0:
        ang += 180.0
    while ang > 90.0:
        ang -= 180.0
    return ang


def _fit_tls(points: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """Total-least-squares line through points: (mean, unit dir, ssq)."""
    mean = points.mean(axis=0)
    centered = points - mean
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    direction = vt[0]
    offsets = centered @ np.array([-direction[1], direction[0]])
    return mean, direction, float((offsets**2).sum())


def _line_intersection(
    p1: np.ndarray, d1: np.ndarray, p2: np.ndarray, d2: np.ndarray
) -> np.ndarray | None:
    cross = d1[0] * d2[1] - d1[1] * d2[0]
    if abs(cross) < 1e-12:
        return None
    delta = p2 - p1
    t = (delta[0] * d2[1] - delta[1] * d2[0]) / cross
    return p1 + t * d1


def _clip_segment(points: np.ndarray, mean: np.ndarray, direction: np.ndarray) -> Segment:
    t = (points - mean) @ direction
    start = mean + t.min() * direction
    end = mean + t.max() * direction
    return Segment(start=(float(start[0]), float(start[1])), end=(float(end[0]), float(end[1])))


def fit_piecewise(
    markers: Sequence[EdgeMarker],
    max_segments: int = 2,
    corner_residual_ratio: float = 0.5,
    min_corner_angle_deg: float = 20.0,
) -> PiecewiseLinearFit:
    """Fit one or two total-least-squares segments to the markers.

    The single-segment fit minimizes orthogonal distances and is clipped to
    the marker extent.  With four or more markers, every split of the
    markers (ordered by projection onto the single-fit direction) is tried;
    the two sides are fitted separately and joined at the intersection of
    their lines.  The two-segment fit is kept only when its residual is at
    most ``corner_residual_ratio`` times the single-segment residual and
    the two lines meet at ``min_corner_angle_deg`` or more, which stops
    noisy straight edges from turning into spurious corners.
    """
    n = len(markers)
    if n < 2:
        raise InsufficientMarkers(f"need at least 2 markers, got {n}")
    points = np.array([m.position for m in markers], dtype=float)
    mean1, dir1, ssq1 = _fit_tls(points)
    rms1 = math.sqrt(ssq1 / n)
    single = PiecewiseLinearFit(segments=(_clip_segment(points, mean1, dir1),), residual=rms1)
    if max_segments < 2 or n < 4:
        return single

    order = np.argsort(points @ dir1)
    sorted_points = points[order]
    best: tuple | None = None
    for k in range(2, n - 1):
        left, right = sorted_points[:k], sorted_points[k:]
        mean_l, dir_l, ssq_l = _fit_tls(left)
        mean_r, dir_r, ssq_r = _fit_tls(right)
        vertex = _line_intersection(mean_l, dir_l, mean_r, dir_r)
        if vertex is None:
            continue
        rms2 = math.sqrt((ssq_l + ssq_r) / n)
        if best is None or rms2 < best[0]:
            best = (rms2, left, right, mean_l, dir_l, mean_r, dir_r, vertex)
    if best is None:
        return single

    rms2, left, right, mean_l, dir_l, mean_r, dir_r, vertex = best
    line_angle = math.degrees(math.acos(min(1.0, abs(float(np.dot(dir_l, dir_r))))))
    if rms2 > corner_residual_ratio * rms1 or line_angle < min_corner_angle_deg:
        return single

    # Each arm runs from its far marker (projected onto its own line) to
    # the joint.
    def _arm(points_side: np.ndarray, mean: np.ndarray, direction: np.ndarray) -> np.ndarray:
        t = (points_side - mean) @ direction
        ends = [mean + t.min() * direction, mean + t.max() * direction]
        return max(ends, key=lambda e: float(np.linalg.norm(e - vertex)))

    far_l = _arm(left, mean_l, dir_l)
    far_r = _arm(right, mean_r, dir_r)
    seg_l = Segment(start=(float(far_l[0]), float(far_l[1])), end=(float(vertex[0]), float(vertex[1])))
    seg_r = Segment(start=(float(vertex[0]), float(vertex[1])), end=(float(far_r[0]), float(far_r[1])))
    return PiecewiseLinearFit(
        segments=(seg_l, seg_r),
        residual=rms2,
        vertex=(float(vertex[0]), float(vertex[1])),
    )


def _opening_angle_deg(fit: PiecewiseLinearFit) -> float:
    """Angle at the vertex between the two outward arm rays, degrees."""
    vertex = np.asarray(fit.vertex)
    r1 = np.asarray(fit.segments[0].start) - vertex
    r2 = np.asarray(fit.segments[1].end) - vertex
    n1, n2 = np.linalg.norm(r1), np.linalg.norm(r2)
    if n1 == 0 or n2 == 0:
        return 0.0
    cosang = float(np.dot(r1, r2) / (n1 * n2))
    return math.degrees(math.acos(max(-1.0, min(1.0, cosang))))


def _chord_length(
    point: np.ndarray, direction: np.ndarray, bounds: tuple[float, float, float, float]
) -> float:
    """Length of the line through ``point`` clipped to a bounding rectangle."""
    xmin, ymin, xmax, ymax = bounds
    t_low, t_high = -math.inf, math.inf
    for p, d, lo, hi in (
        (point[0], direction[0], xmin, xmax),
        (point[1], direction[1], ymin, ymax),
    ):
        if abs(d) < 1e-12:
            if not lo <= p <= hi:
                return 0.0
            continue
        t1, t2 = (lo - p) / d, (hi - p) / d
        t_low = max(t_low, min(t1, t2))
        t_high = min(t_high, max(t1, t2))
    return max(0.0, t_high - t_low)


def _band_width_mm(values: np.ndarray, grid: SensorGrid, fit: PiecewiseLinearFit) -> float:
    """Width of a dark band from its integrated shadow.

    The marker pitch cannot resolve widths below one cell, so the width is
    recovered photometrically: the total absorbed fraction over the grid
    equals (band width x track length) / cell area for an opaque band, and
    the track length is the fit line's chord across the sensed footprint.
    """
    absorbed = float((1.0 - values / 255.0).sum())
    cell_area = grid.spec.pitch_x * grid.spec.pitch_y
    segment = fit.segments[0]
    chord = _chord_length(
        np.asarray(segment.start), np.asarray(segment.direction), grid.footprint_bounds
    )
    if chord <= 0:
        dx = segment.end[0] - segment.start[0]
        dy = segment.end[1] - segment.start[1]
        chord = math.hypot(dx, dy)
    if chord <= 0:
        return 0.0
    return float(absorbed * cell_area / chord)


def classify(
    frame: FrameLike,
    split: ClusterSplit | None,
    centroid: tuple[float, float] | None,
    markers: Sequence[EdgeMarker],
    fit: PiecewiseLinearFit | None,
    grid: SensorGrid,
    params: PipelineParams | None = None,
) -> FeatureKind:
    """Name the contact from the border shape.

    Two fitted segments mean a corner.  One segment with markers clearly on
    both sides of it means a band crossing the grid (a cable: the shadow
    has two borders).  One segment with all markers on it is a straight
    edge.  No split or no fittable border yields none.
    """
    if params is None:
        params = PipelineParams()
    if split is None or fit is None:
        return NoContact()
    if len(fit.segments) == 2:
        return Corner(vertex_mm=fit.vertex, opening_deg=_opening_angle_deg(fit))
    segment = fit.segments[0]
    direction = np.asarray(segment.direction)
    start = np.asarray(segment.start)
    offsets = np.array(
        [
            direction[0] * (m.position[1] - start[1]) - direction[1] * (m.position[0] - start[0])
            for m in markers
        ]
    )
    tol = params.band_side_tol_mm
    n_pos = int((offsets > tol).sum())
    n_neg = int((offsets < -tol).sum())
    if n_pos >= params.band_min_side_markers and n_neg >= params.band_min_side_markers:
        width = _band_width_mm(_values_of(frame), grid, fit)
        return Band(angle_deg=segment.angle_deg, width_mm=width)
    return StraightEdge(angle_deg=segment.angle_deg)


def process(
    frame: FrameLike,
    grid: SensorGrid | None = None,
    params: PipelineParams | None = None,
) -> EdgeFeatures:
    """Run the full chain: split, centroid, markers, fit, classification.

    A frame too uniform to split yields kind none with empty features.
    """
    if grid is None:
        grid = default_grid()
    if params is None:
        params = PipelineParams()
    try:
        split = gap_threshold(frame, params.min_gap)
    except NoSplit:
        return EdgeFeatures(split=None, centroid=None, markers=(), fit=None, kind=NoContact())
    centroid = dark_centroid(frame, split, grid)
    markers = edge_markers(frame, split.threshold, grid)
    fit = None
    if len(markers) >= 2:
        fit = fit_piecewise(
            markers,
            max_segments=params.max_segments,
            corner_residual_ratio=params.corner_residual_ratio,
            min_corner_angle_deg=params.min_corner_angle_deg,
        )
    kind = classify(frame, split, centroid, markers, fit, grid, params)
    return EdgeFeatures(split=split, centroid=centroid, markers=markers, fit=fit, kind=kind)


def kind_to_dict(kind: FeatureKind) -> dict:
    if isinstance(kind, StraightEdge):
        return {"type": "straight_edge", "angle_deg": kind.angle_deg}
    if isinstance(kind, Corner):
        return {"type": "corner", "vertex_mm": list(kind.vertex_mm), "opening_deg": kind.opening_deg}
    if isinstance(kind, Band):
        return {"type": "band", "angle_deg": kind.angle_deg, "width_mm": kind.width_mm}
    return {"type": "none"}


def features_to_dict(features: EdgeFeatures, params: PipelineParams | None = None) -> dict:
    """JSON form of one frame's features (the JSONL line schema)."""
    fit = None
    if features.fit is not None:
        fit = {
            "segments": [[list(s.start), list(s.end)] for s in features.fit.segments],
            "residual_mm": features.fit.residual,
        }
        if features.fit.vertex is not None:
            fit["vertex_mm"] = list(features.fit.vertex)
    out = {
        "lambda": features.split.threshold if features.split else None,
        "dark": sorted(features.split.dark) if features.split else [],
        "centroid_mm": list(features.centroid) if features.centroid else None,
        "markers_mm": [list(m.position) for m in features.markers],
        "fit": fit,
        "kind": kind_to_dict(features.kind),
    }
    if params is not None:
        out["params"] = {
            "min_gap": params.min_gap,
            "max_segments": params.max_segments,
            "corner_residual_ratio": params.corner_residual_ratio,
            "min_corner_angle_deg": params.min_corner_angle_deg,
            "band_side_tol_mm": params.band_side_tol_mm,
            "band_min_side_markers": params.band_min_side_markers,
        }
    return out
