"""Seeded waypoint road generation and road geometry queries."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GenerationFailedError

WAYPOINT_SPACING_M = 2.0  # dense polyline keeps discretization error small
MAX_RETRIES = 50


@dataclass(frozen=True)
class Road:
    """Centerline polyline plus lane width. Immutable after construction."""

    waypoints: np.ndarray        # (N, 2) meters
    lane_width: float

    def __post_init__(self):
        wp = np.asarray(self.waypoints, dtype=np.float64)
        if wp.ndim != 2 or wp.shape[1] != 2 or wp.shape[0] < 2:
            raise ValueError("road needs >= 2 waypoints of shape (N, 2)")
        seg = np.diff(wp, axis=0)
        seg_len = np.hypot(seg[:, 0], seg[:, 1])
        if np.any(seg_len == 0):
            raise ValueError("consecutive waypoints must be distinct")
        if self.lane_width <= 0:
            raise ValueError("lane_width must be > 0")
        wp.setflags(write=False)
        object.__setattr__(self, "waypoints", wp)
        object.__setattr__(self, "_seg", seg)
        object.__setattr__(self, "_seg_len", seg_len)
        object.__setattr__(self, "_cum_len", np.concatenate([[0.0], np.cumsum(seg_len)]))

    @property
    def length_m(self) -> float:
        return float(self._cum_len[-1])


@dataclass(frozen=True)
class RoadGenConfig:
    seed: int
    segment_count: int = 20
    segment_length_m: float = 10.0
    max_turn_deg: float = 10.0
    curvature_range: tuple = (-10.0, 10.0)  # degrees of heading change/segment
    lane_width: float = 4.0

    def __post_init__(self):
        if self.segment_length_m <= 0:
            raise ValueError("segment_length_m must be > 0")
        lo, hi = self.curvature_range
        if not (lo <= hi):
            raise ValueError("curvature_range must be (lo, hi) with lo <= hi")
        if self.max_turn_deg < 0:
            raise ValueError("max_turn_deg must be >= 0")
        if self.max_turn_deg > max(abs(lo), abs(hi)):
            raise ValueError("max_turn_deg outside curvature_range")


def _build_waypoints(cfg: RoadGenConfig, rng: np.random.Generator) -> np.ndarray:
    pts = [np.zeros(2)]
    heading = 0.0
    sub = max(1, int(np.ceil(cfg.segment_length_m / WAYPOINT_SPACING_M)))
    step = cfg.segment_length_m / sub
    for _ in range(cfg.segment_count):
        lo, hi = cfg.curvature_range
        turn = np.clip(rng.uniform(lo, hi), -cfg.max_turn_deg, cfg.max_turn_deg)
        # spread the heading change across the sub-waypoints (constant arc)
        dh = np.deg2rad(turn) / sub
        for _ in range(sub):
            heading += dh
            pts.append(pts[-1] + step * np.array([np.cos(heading), np.sin(heading)]))
    return np.asarray(pts)


def _self_intersects(wp: np.ndarray, clearance: float) -> bool:
    """True if two non-neighboring polyline points come closer than clearance."""
    n = len(wp)
    gap = max(3, int(np.ceil(2 * clearance / WAYPOINT_SPACING_M)) + 2)
    for i in range(n):
        j0 = i + gap
        if j0 >= n:
            break
        d = wp[j0:] - wp[i]
        if np.min(np.hypot(d[:, 0], d[:, 1])) < clearance:
            return True
    return False


def generate(cfg: RoadGenConfig) -> Road:
    """Seed-deterministic road generation with bounded retries on
    self-intersection."""
    rng = np.random.default_rng(cfg.seed)
    for _ in range(MAX_RETRIES):
        wp = _build_waypoints(cfg, rng)
        if not _self_intersects(wp, cfg.lane_width):
            return Road(waypoints=wp, lane_width=cfg.lane_width)
    raise GenerationFailedError(cfg.seed, MAX_RETRIES)


# ---------------------------------------------------------------------------
# geometry queries
# ---------------------------------------------------------------------------

def project(position, road: Road):
    """Project a point onto the centerline.

    Returns (segment index, clamped parameter t, arc length, signed distance);
    the sign is positive left of the travel direction.
    """
    p = np.asarray(position, dtype=np.float64)
    a = road.waypoints[:-1]
    seg = road._seg
    seg_len2 = road._seg_len ** 2
    t = np.clip(((p - a) * seg).sum(axis=1) / seg_len2, 0.0, 1.0)
    proj = a + t[:, None] * seg
    d = p - proj
    dist = np.hypot(d[:, 0], d[:, 1])
    i = int(np.argmin(dist))
    cross = seg[i, 0] * (p[1] - a[i, 1]) - seg[i, 1] * (p[0] - a[i, 0])
    signed = dist[i] if cross >= 0 else -dist[i]
    arc = road._cum_len[i] + t[i] * road._seg_len[i]
    return i, float(t[i]), float(arc), float(signed)


def cross_track_error(position, road: Road) -> float:
    """Signed perpendicular distance to the centerline (left positive)."""
    return project(position, road)[3]


def progress(position, road: Road) -> float:
    """Arc-length fraction of the projection, clamped to [0, 1]."""
    arc = project(position, road)[2]
    return float(np.clip(arc / road.length_m, 0.0, 1.0))


# ---------------------------------------------------------------------------
# presets & file format
# ---------------------------------------------------------------------------

def preset_configs() -> list[RoadGenConfig]:
    """Ten fixed test-road configs, ordered by increasing difficulty."""
    configs = []
    for i, max_turn in enumerate((0, 2, 4, 6, 8, 10, 12, 14, 16, 18)):
        configs.append(RoadGenConfig(
            seed=1000 + i,
            segment_count=18,
            segment_length_m=10.0,
            max_turn_deg=float(max_turn),
            curvature_range=(-float(max_turn), float(max_turn)),
            lane_width=4.0,
        ))
    return configs


def preset_roads() -> list[Road]:
    return [generate(cfg) for cfg in preset_configs()]


def save_road(path, road: Road) -> None:
    with open(path, "w") as fh:
        fh.write(f"lane_width {road.lane_width:.6g}\n")
        for x, y in road.waypoints:
            fh.write(f"{x:.6f} {y:.6f}\n")


def load_road(path) -> Road:
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 2 or header[0] != "lane_width":
            raise ValueError(f"{path}: expected 'lane_width <m>' header")
        lane_width = float(header[1])
        wp = [tuple(map(float, line.split())) for line in fh if line.strip()]
    return Road(waypoints=np.asarray(wp), lane_width=lane_width)
