import math

import numpy as np
import pytest

from tactiletrace.frame_codec import Frame
from tactiletrace.hexgrid import GridSpec, build_grid, default_grid
from tactiletrace import pipeline as pl


def split_oracle(values, min_gap):
    """Brute force: try every adjacent split of the sorted values, keep the
    largest gap, lowest-value step on ties."""
    order = sorted(range(len(values)), key=lambda i: (values[i], i))
    best_gap, best_k = None, None
    for k in range(len(values) - 1):
        gap = values[order[k + 1]] - values[order[k]]
        if best_gap is None or gap > best_gap:
            best_gap, best_k = gap, k
    if best_gap is None or best_gap < min_gap:
        return None
    dark = [order[i] for i in range(best_k + 1)]
    bright = [order[i] for i in range(best_k + 1, len(values))]
    lam = (sum(values[i] for i in dark) / len(dark) + sum(values[i] for i in bright) / len(bright)) / 2
    return frozenset(dark), frozenset(bright), lam, best_gap


class TestGapThreshold:
    def test_six_cell_example(self):
        values = [8, 10, 12, 235, 238, 240]
        split = pl.gap_threshold(values)
        assert split.dark == {0, 1, 2}
        assert split.bright == {3, 4, 5}
        assert split.threshold == pytest.approx((10 + (235 + 238 + 240) / 3) / 2)
        assert split.threshold == pytest.approx(123.8333333333, abs=1e-9)
        assert split.gap == 223

    def test_uniform_frame_no_split(self):
        with pytest.raises(pl.NoSplit):
            pl.gap_threshold([128] * 32)

    def test_tie_break_takes_lowest_step(self):
        # two equal gaps of 100; the lower one wins, dark = {0}
        split = pl.gap_threshold([0, 100, 200])
        assert split.dark == {0}
        assert split.bright == {1, 2}
        assert split.threshold == pytest.approx(75.0)

    def test_matches_oracle_on_random_frames(self):
        rng = np.random.default_rng(10)
        checked = 0
        for _ in range(1000):
            values = [int(v) for v in rng.integers(0, 256, size=32)]
            expected = split_oracle(values, 8)
            if expected is None:
                with pytest.raises(pl.NoSplit):
                    pl.gap_threshold(values)
                continue
            split = pl.gap_threshold(values)
            dark, bright, lam, gap = expected
            assert split.dark == dark
            assert split.bright == bright
            assert split.threshold == pytest.approx(lam, abs=1e-9)
            assert split.gap == gap
            checked += 1
        assert checked > 900

    def test_clusters_separate(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            values = [int(v) for v in rng.integers(0, 256, size=32)]
            try:
                split = pl.gap_threshold(values)
            except pl.NoSplit:
                continue
            assert max(values[i] for i in split.dark) < min(values[i] for i in split.bright)

    def test_shift_invariance(self):
        # adding a constant (no clipping) keeps the partition, shifts lambda
        rng = np.random.default_rng(12)
        for _ in range(100):
            values = [int(v) for v in rng.integers(0, 200, size=32)]
            try:
                base = pl.gap_threshold(values)
            except pl.NoSplit:
                continue
            shifted = pl.gap_threshold([v + 55 for v in values])
            assert shifted.dark == base.dark
            assert shifted.threshold == pytest.approx(base.threshold + 55, abs=1e-9)

    def test_min_gap_validation(self):
        with pytest.raises(ValueError):
            pl.gap_threshold([0, 255], min_gap=0)

    def test_accepts_frame_objects(self):
        frame = Frame(values=tuple([0] * 16 + [255] * 16))
        split = pl.gap_threshold(frame)
        assert split.threshold == pytest.approx(127.5)


class TestDarkCentroid:
    def test_equal_weights_midpoint(self):
        grid = build_grid(GridSpec(rows=1, cols=2, pitch_x=10.0))
        split = pl.ClusterSplit(threshold=150.0, dark=frozenset({0, 1}), bright=frozenset(), gap=0)
        assert pl.dark_centroid([50, 50], split, grid) == pytest.approx((5.0, 0.0))

    def test_weighted_mean_example(self):
        # weights 200 and 100 at x = 0 and 10 -> x = 1000/300
        grid = build_grid(GridSpec(rows=1, cols=2, pitch_x=10.0))
        split = pl.ClusterSplit(threshold=200.0, dark=frozenset({0, 1}), bright=frozenset(), gap=0)
        cx, cy = pl.dark_centroid([55, 155], split, grid)
        assert cx == pytest.approx(10.0 / 3.0, abs=1e-12)
        assert cy == 0.0

    def test_single_cell_is_its_centre(self):
        grid = default_grid()
        split = pl.ClusterSplit(threshold=100.0, dark=frozenset({13}), bright=frozenset(), gap=0)
        values = [255] * 32
        values[13] = 10
        assert pl.dark_centroid(values, split, grid) == pytest.approx(grid.centre(13))

    def test_empty_dark_rejected(self):
        grid = default_grid()
        split = pl.ClusterSplit(threshold=1.0, dark=frozenset(), bright=frozenset(range(32)), gap=0)
        with pytest.raises(pl.EmptyDark):
            pl.dark_centroid([255] * 32, split, grid)

    def test_zero_weight_rejected(self):
        grid = default_grid()
        split = pl.ClusterSplit(threshold=255.0, dark=frozenset({0, 1}), bright=frozenset(), gap=0)
        with pytest.raises(pl.ZeroWeight):
            pl.dark_centroid([255] * 32, split, grid)

    def test_matches_direct_weighted_mean(self):
        # Oracle: plain-Python weighted mean with weights 255 - value.
        grid = default_grid()
        rng = np.random.default_rng(13)
        for _ in range(1000):
            values = [int(v) for v in rng.integers(0, 255, size=32)]
            size = int(rng.integers(1, 32))
            dark = frozenset(int(i) for i in rng.choice(32, size=size, replace=False))
            split = pl.ClusterSplit(threshold=0.0, dark=dark, bright=frozenset(range(32)) - dark, gap=0)
            sx = sy = sw = 0.0
            for i in dark:
                w = 255 - values[i]
                x, y = grid.centre(i)
                sx += w * x
                sy += w * y
                sw += w
            cx, cy = pl.dark_centroid(values, split, grid)
            assert cx == pytest.approx(sx / sw, abs=1e-9)
            assert cy == pytest.approx(sy / sw, abs=1e-9)

    def test_centroid_inside_dark_hull(self):
        grid = default_grid()
        rng = np.random.default_rng(14)
        for _ in range(200):
            values = [int(v) for v in rng.integers(0, 255, size=32)]
            try:
                split = pl.gap_threshold(values)
            except pl.NoSplit:
                continue
            cx, cy = pl.dark_centroid(values, split, grid)
            pts = grid.centres[sorted(split.dark)]
            assert pts[:, 0].min() - 1e-9 <= cx <= pts[:, 0].max() + 1e-9
            assert pts[:, 1].min() - 1e-9 <= cy <= pts[:, 1].max() + 1e-9


def vertical_pair_grid():
    # two cells stacked at (0,0) and (0, 30/7): a 2x1 grid with no offset
    return build_grid(GridSpec(rows=2, cols=1, odd_row_offset=0.0))


class TestEdgeMarkers:
    def test_midpoint_crossing(self):
        grid = vertical_pair_grid()
        markers = pl.edge_markers([100, 200], 150.0, grid)
        assert len(markers) == 1
        assert markers[0].position == pytest.approx((0.0, 30.0 / 7.0 / 2.0))
        assert markers[0].cells == (0, 1)

    def test_quarter_crossing(self):
        # t = (125-100)/(200-100) = 0.25, and the interpolated value there
        # must equal the threshold
        grid = vertical_pair_grid()
        markers = pl.edge_markers([100, 200], 125.0, grid)
        assert len(markers) == 1
        y = markers[0].position[1]
        assert y == pytest.approx(0.25 * 30.0 / 7.0, abs=1e-12)
        t = y / (30.0 / 7.0)
        assert 100 + t * (200 - 100) == pytest.approx(125.0, abs=1e-9)

    def test_no_crossing_no_marker(self):
        grid = vertical_pair_grid()
        assert pl.edge_markers([40, 90], 150.0, grid) == ()

    def test_exact_hit_sits_on_cell_centre(self):
        grid = vertical_pair_grid()
        markers = pl.edge_markers([150, 200], 150.0, grid)
        assert len(markers) == 1
        assert markers[0].position == pytest.approx((0.0, 0.0))

    def test_exact_hit_not_duplicated(self):
        # the equal-valued cell borders several neighbors but yields one marker
        grid = build_grid(GridSpec(rows=1, cols=3, pitch_x=10.0))
        markers = pl.edge_markers([100, 150, 200], 150.0, grid)
        positions = [m.position for m in markers]
        assert positions.count(pytest.approx((10.0, 0.0))) == 1

    def test_threshold_range_validated(self):
        grid = vertical_pair_grid()
        with pytest.raises(ValueError):
            pl.edge_markers([0, 255], 0.0, grid)
        with pytest.raises(ValueError):
            pl.edge_markers([0, 255], 255.0, grid)

    def test_markers_exactly_on_straddling_pairs(self):
        # Oracle: visit every neighbor pair once; count straddles.
        grid = default_grid()
        rng = np.random.default_rng(15)
        for _ in range(300):
            values = [int(v) for v in rng.integers(0, 256, size=32)]
            try:
                split = pl.gap_threshold(values)
            except pl.NoSplit:
                continue
            lam = split.threshold
            expected_pairs = {
                (i, j)
                for i, j in grid.neighbor_pairs()
                if (values[i] - lam) * (values[j] - lam) < 0
            }
            markers = pl.edge_markers(values, lam, grid)
            exact = any(values[i] == lam for i in range(32))
            if not exact:
                assert {m.cells for m in markers} == expected_pairs

    def test_marker_reproduces_threshold(self):
        grid = default_grid()
        rng = np.random.default_rng(16)
        for _ in range(300):
            values = [int(v) for v in rng.integers(0, 256, size=32)]
            try:
                split = pl.gap_threshold(values)
            except pl.NoSplit:
                continue
            for m in pl.edge_markers(values, split.threshold, grid):
                i, j = m.cells
                c1, c2 = grid.centres[i], grid.centres[j]
                seg = c2 - c1
                t = float(np.dot(np.asarray(m.position) - c1, seg) / np.dot(seg, seg))
                interpolated = values[i] + t * (values[j] - values[i])
                assert interpolated == pytest.approx(split.threshold, abs=1e-9)


def markers_at(points):
    return [pl.EdgeMarker(position=(float(x), float(y)), cells=(0, 1)) for x, y in points]


class TestFitPiecewise:
    def test_collinear_markers_single_segment(self):
        pts = [(x, 2 * x) for x in np.linspace(0, 10, 9)]
        fit = pl.fit_piecewise(markers_at(pts))
        assert len(fit.segments) == 1
        assert fit.residual < 1e-9
        assert fit.segments[0].angle_deg == pytest.approx(math.degrees(math.atan(2)), abs=1e-6)

    def test_single_marker_rejected(self):
        with pytest.raises(pl.InsufficientMarkers):
            pl.fit_piecewise(markers_at([(0, 0)]))

    def test_right_angle_wedge_recovered(self):
        # markers exactly on two rays of a 90 degree wedge at (19, 15)
        vertex = np.array([19.0, 15.0])
        d1 = np.array([math.cos(math.radians(160)), math.sin(math.radians(160))])
        d2 = np.array([math.cos(math.radians(70)), math.sin(math.radians(70))])
        pts = [vertex + t * d1 for t in np.linspace(1, 12, 8)]
        pts += [vertex + t * d2 for t in np.linspace(1, 12, 8)]
        fit = pl.fit_piecewise(markers_at(pts))
        assert len(fit.segments) == 2
        assert fit.vertex == pytest.approx(tuple(vertex), abs=2.0)
        opening = pl._opening_angle_deg(fit)
        assert opening == pytest.approx(90.0, abs=3.0)

    def test_shallow_bend_stays_single(self):
        # 10 degree bend is below the corner gate
        vertex = np.array([0.0, 0.0])
        d1 = np.array([-1.0, 0.0])
        d2 = np.array([math.cos(math.radians(10)), math.sin(math.radians(10))])
        pts = [vertex + t * d1 for t in np.linspace(0.5, 10, 6)]
        pts += [vertex + t * d2 for t in np.linspace(0.5, 10, 6)]
        fit = pl.fit_piecewise(markers_at(pts))
        assert len(fit.segments) == 1

    def test_max_segments_one(self):
        vertex = np.array([0.0, 0.0])
        pts = [vertex + t * np.array([-1.0, 0.0]) for t in np.linspace(1, 10, 6)]
        pts += [vertex + t * np.array([0.0, 1.0]) for t in np.linspace(1, 10, 6)]
        fit = pl.fit_piecewise(markers_at(pts), max_segments=1)
        assert len(fit.segments) == 1

    def test_segments_join_at_vertex(self):
        vertex = np.array([5.0, 5.0])
        pts = [vertex + t * np.array([-1.0, 0.2]) for t in np.linspace(1, 10, 7)]
        pts += [vertex + t * np.array([0.3, 1.0]) / np.linalg.norm([0.3, 1.0]) for t in np.linspace(1, 10, 7)]
        fit = pl.fit_piecewise(markers_at(pts))
        assert len(fit.segments) == 2
        assert fit.segments[0].end == fit.segments[1].start == fit.vertex


class TestProcess:
    def test_uniform_frame_is_none(self):
        feats = pl.process([255] * 32)
        assert isinstance(feats.kind, pl.NoContact)
        assert feats.split is None
        assert feats.centroid is None
        assert feats.markers == ()

    def test_corner_kind_implies_two_segments(self):
        rng = np.random.default_rng(17)
        for _ in range(300):
            values = [int(v) for v in rng.integers(0, 256, size=32)]
            feats = pl.process(values)
            if isinstance(feats.kind, pl.Corner):
                assert len(feats.fit.segments) == 2

    def test_features_to_dict_schema(self):
        import json

        values = [0] * 16 + [255] * 16
        feats = pl.process(values)
        row = pl.features_to_dict(feats, pl.PipelineParams())
        text = json.dumps(row)
        parsed = json.loads(text)
        assert parsed["lambda"] == pytest.approx(127.5)
        assert parsed["dark"] == list(range(16))
        assert isinstance(parsed["kind"], dict)
        assert parsed["params"]["min_gap"] == 8
