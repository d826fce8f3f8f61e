"""Road generation and geometry-query oracles."""

import numpy as np
import pytest

from drivebench import roadgen
from drivebench.errors import GenerationFailedError


def _straight(length=100.0, lane_width=4.0):
    n = int(length / 2) + 1
    wp = np.stack([np.linspace(0, length, n), np.zeros(n)], axis=1)
    return roadgen.Road(waypoints=wp, lane_width=lane_width)


# ---------------------------------------------------------------------------
# Road / config validation
# ---------------------------------------------------------------------------

def test_road_validation():
    with pytest.raises(ValueError):
        roadgen.Road(waypoints=np.zeros((1, 2)), lane_width=4.0)
    with pytest.raises(ValueError):
        roadgen.Road(waypoints=np.array([[0, 0], [0, 0]]), lane_width=4.0)
    with pytest.raises(ValueError):
        roadgen.Road(waypoints=np.array([[0, 0], [1, 0]]), lane_width=0.0)


def test_config_validation():
    with pytest.raises(ValueError):
        roadgen.RoadGenConfig(seed=0, segment_length_m=0.0)
    with pytest.raises(ValueError):
        roadgen.RoadGenConfig(seed=0, curvature_range=(5.0, -5.0))
    with pytest.raises(ValueError):
        roadgen.RoadGenConfig(seed=0, max_turn_deg=20.0,
                              curvature_range=(-10.0, 10.0))


def test_length_is_cumulative_segment_sum():
    road = _straight(100.0)
    assert road.length_m == pytest.approx(100.0)


# ---------------------------------------------------------------------------
# generation
# ---------------------------------------------------------------------------

def test_zero_curvature_gives_collinear_waypoints():
    cfg = roadgen.RoadGenConfig(seed=5, max_turn_deg=0.0,
                                curvature_range=(0.0, 0.0))
    road = roadgen.generate(cfg)
    assert np.max(np.abs(road.waypoints[:, 1])) < 1e-9
    assert np.all(np.diff(road.waypoints[:, 0]) > 0)


def test_generation_is_deterministic():
    cfg = roadgen.RoadGenConfig(seed=77, max_turn_deg=12.0,
                                curvature_range=(-12.0, 12.0))
    a = roadgen.generate(cfg)
    b = roadgen.generate(cfg)
    assert np.array_equal(a.waypoints, b.waypoints)


def _cross2(u, v):
    return u[0] * v[1] - u[1] * v[0]


def _segments_intersect(p1, p2, p3, p4):
    d1 = _cross2(p4 - p3, p1 - p3)
    d2 = _cross2(p4 - p3, p2 - p3)
    d3 = _cross2(p2 - p1, p3 - p1)
    d4 = _cross2(p2 - p1, p4 - p1)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0))


def test_hundred_roads_have_no_self_intersections():
    """O(n^2) segment-pair brute force over 100 seeded roads."""
    for seed in range(100):
        cfg = roadgen.RoadGenConfig(seed=seed, segment_count=12,
                                    max_turn_deg=15.0,
                                    curvature_range=(-15.0, 15.0))
        wp = roadgen.generate(cfg).waypoints
        n = len(wp) - 1
        for i in range(n):
            for j in range(i + 2, n):
                assert not _segments_intersect(wp[i], wp[i + 1],
                                               wp[j], wp[j + 1]), (seed, i, j)


def test_generation_failure_reports_seed():
    # a hairpin config that cannot avoid self-intersection
    cfg = roadgen.RoadGenConfig(seed=3, segment_count=60,
                                segment_length_m=2.0, max_turn_deg=40.0,
                                curvature_range=(40.0, 40.0), lane_width=6.0)
    with pytest.raises(GenerationFailedError):
        roadgen.generate(cfg)


def test_presets_are_ten_increasingly_curvy_roads():
    configs = roadgen.preset_configs()
    assert len(configs) == 10
    turns = [c.max_turn_deg for c in configs]
    assert turns == sorted(turns) and turns[0] == 0.0
    roads = roadgen.preset_roads()
    assert all(r.length_m == pytest.approx(180.0, abs=1e-6) for r in roads)


# ---------------------------------------------------------------------------
# geometry queries vs an exhaustive projection oracle
# ---------------------------------------------------------------------------

def _project_oracle(p, road):
    """Check every segment; return (signed distance, arc length)."""
    best = (np.inf, 0.0, 0.0)
    arc0 = 0.0
    for a, b in zip(road.waypoints[:-1], road.waypoints[1:]):
        seg = b - a
        seg_len = np.hypot(*seg)
        t = np.clip(np.dot(p - a, seg) / seg_len ** 2, 0.0, 1.0)
        proj = a + t * seg
        d = np.hypot(*(p - proj))
        if d < best[0]:
            cross = seg[0] * (p[1] - a[1]) - seg[1] * (p[0] - a[0])
            best = (d, d if cross >= 0 else -d, arc0 + t * seg_len)
        arc0 += seg_len
    return best[1], best[2]


def test_cte_simple_cases():
    road = _straight()
    assert roadgen.cross_track_error((50.0, 0.0), road) == pytest.approx(0.0)
    assert roadgen.cross_track_error((50.0, 1.0), road) == pytest.approx(1.0)
    assert roadgen.cross_track_error((50.0, -2.5), road) == pytest.approx(-2.5)


def test_progress_endpoints_and_midpoint():
    road = _straight()
    assert roadgen.progress((0.0, 0.0), road) == 0.0
    assert roadgen.progress((100.0, 0.0), road) == 1.0
    assert roadgen.progress((50.0, 0.3), road) == pytest.approx(0.5)


def test_cte_is_zero_at_every_waypoint():
    road = roadgen.generate(roadgen.RoadGenConfig(
        seed=9, max_turn_deg=10.0, curvature_range=(-10.0, 10.0)))
    for wp in road.waypoints:
        assert abs(roadgen.cross_track_error(wp, road)) < 1e-9


def test_random_points_match_projection_oracle():
    road = roadgen.generate(roadgen.RoadGenConfig(
        seed=4, segment_count=10, max_turn_deg=14.0,
        curvature_range=(-14.0, 14.0)))
    rng = np.random.default_rng(0)
    lo = road.waypoints.min(axis=0) - 5
    hi = road.waypoints.max(axis=0) + 5
    for _ in range(300):
        p = rng.uniform(lo, hi)
        want_cte, want_arc = _project_oracle(p, road)
        assert roadgen.cross_track_error(tuple(p), road) == pytest.approx(
            want_cte, abs=1e-9)
        assert roadgen.progress(tuple(p), road) == pytest.approx(
            np.clip(want_arc / road.length_m, 0, 1), abs=1e-9)


def test_progress_monotone_along_centerline():
    road = roadgen.generate(roadgen.RoadGenConfig(
        seed=2, max_turn_deg=8.0, curvature_range=(-8.0, 8.0)))
    vals = [roadgen.progress(tuple(wp), road) for wp in road.waypoints]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


# ---------------------------------------------------------------------------
# file format
# ---------------------------------------------------------------------------

def test_road_file_round_trip(tmp_path):
    road = roadgen.generate(roadgen.RoadGenConfig(
        seed=1, max_turn_deg=6.0, curvature_range=(-6.0, 6.0)))
    path = tmp_path / "r.txt"
    roadgen.save_road(path, road)
    back = roadgen.load_road(path)
    assert back.lane_width == road.lane_width
    assert np.max(np.abs(back.waypoints - road.waypoints)) < 1e-6
    assert path.read_text().startswith("lane_width ")


def test_load_road_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("width 4\n0 0\n1 0\n")
    with pytest.raises(ValueError):
        roadgen.load_road(path)
