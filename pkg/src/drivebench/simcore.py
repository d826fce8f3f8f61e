"""Built-in toy driving simulator: kinematic bicycle vehicle, road-ribbon
camera rendering with weather presets, and the closed episode loop.

Everything is deterministic given (road, agent, perturbation seed, weather,
dt); two runs of the same episode produce byte-identical logs.
"""

from __future__ import annotations

import json
import zlib
from dataclasses import dataclass, field

import numpy as np
from numba import njit, prange

from . import roadgen
from .errors import AgentError
from .perturb import default_catalog

# vehicle constants (configurable in principle; fixed defaults here)
WHEELBASE_M = 2.5
MAX_STEER_RAD = np.deg2rad(25.0)
MAX_ACCEL_MPS2 = 4.0
DRAG_PER_S = 0.1

DT_S = 1.0 / 30.0
FRAME_H, FRAME_W = 240, 320

# camera model
CAM_HEIGHT_M = 1.6
CAM_PITCH_RAD = 0.13
CAM_FOCAL_PX = 180.0
MAX_VIEW_M = 150.0

# scene palette (uint8)
ROAD_GREY = (105, 105, 105)
LINE_YELLOW = (200, 180, 60)
GRASS_GREEN = (60, 140, 60)
SKY_BLUE = (135, 190, 235)

DASH_HALF_WIDTH_M = 0.15
DASH_PERIOD_M = 4.0
DASH_ON_M = 2.5


@dataclass
class VehicleState:
    x: float = 0.0
    y: float = 0.0
    heading: float = 0.0
    speed: float = 0.0       # >= 0, no reverse


@dataclass(frozen=True)
class Action:
    steering: float
    throttle: float

    def __post_init__(self):
        object.__setattr__(self, "steering", float(np.clip(self.steering, -1, 1)))
        object.__setattr__(self, "throttle", float(np.clip(self.throttle, -1, 1)))


@dataclass(frozen=True)
class WeatherPreset:
    name: str
    light: float = 1.0       # ambient scaling
    haze: float = 0.0        # blend toward haze grey
    particles: int = 0       # seeded dots per frame

WEATHER_PRESETS = {p.name: p for p in (
    WeatherPreset("nominal"),
    WeatherPreset("fog", light=0.95, haze=0.5),
    WeatherPreset("rain", light=0.8, haze=0.15, particles=150),
    WeatherPreset("snow", light=0.85, haze=0.2, particles=150),
    WeatherPreset("dawn", light=0.75, haze=0.05),
    WeatherPreset("moonshine", light=0.5, haze=0.05),
    WeatherPreset("starry", light=0.35),
    WeatherPreset("dark_overcast", light=0.25, haze=0.1),
)}


def step(state: VehicleState, action: Action, dt: float = DT_S) -> VehicleState:
    """Kinematic bicycle step."""
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    heading = state.heading + (state.speed / WHEELBASE_M) * np.tan(
        action.steering * MAX_STEER_RAD) * dt
    x = state.x + state.speed * np.cos(heading) * dt
    y = state.y + state.speed * np.sin(heading) * dt
    speed = state.speed + (action.throttle * MAX_ACCEL_MPS2
                           - DRAG_PER_S * state.speed) * dt
    if speed < 1e-4:  # crawl threshold: treat as fully stopped
        speed = 0.0
    return VehicleState(x=x, y=y, heading=heading, speed=speed)


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------

@njit(cache=True, parallel=True)
def _render_ground(out, h, w, horizon_row, cam_x, cam_y, cos_h, sin_h,
                   focal, pitch, cam_height, wp, cum_len, i0, i1, lane_half,
                   road_len,
                   road_rgb, line_rgb, grass_rgb, sky_rgb):
    cx = (w - 1) / 2.0
    cy = (h - 1) / 2.0
    for v in prange(h):
        for u in range(w):
            down = pitch + np.arctan((v - cy) / focal)
            if down <= 1e-4:
                for c in range(3):
                    out[v, u, c] = sky_rgb[c]
                continue
            d = cam_height / np.tan(down)
            if d > MAX_VIEW_M:
                for c in range(3):
                    out[v, u, c] = sky_rgb[c]
                continue
            ray = np.sqrt(d * d + cam_height * cam_height)
            # image-right maps to the +steering (increasing heading) side so
            # that steering toward the road centroid closes the loop
            lat = (u - cx) / focal * ray
            gx = cam_x + d * cos_h - lat * sin_h
            gy = cam_y + d * sin_h + lat * cos_h
            # nearest centerline segment in the window
            best = 1e18
            best_arc = 0.0
            for i in range(i0, i1):
                ax, ay = wp[i, 0], wp[i, 1]
                bx, by = wp[i + 1, 0], wp[i + 1, 1]
                ex, ey = bx - ax, by - ay
                ll = ex * ex + ey * ey
                t = ((gx - ax) * ex + (gy - ay) * ey) / ll
                if t < 0.0:
                    t = 0.0
                elif t > 1.0:
                    t = 1.0
                px, py = ax + t * ex, ay + t * ey
                dd = (gx - px) * (gx - px) + (gy - py) * (gy - py)
                if dd < best:
                    best = dd
                    best_arc = cum_len[i] + t * np.sqrt(ll)
            dist = np.sqrt(best)
            if dist <= lane_half:
                if dist <= DASH_HALF_WIDTH_M and best_arc % DASH_PERIOD_M < DASH_ON_M:
                    for c in range(3):
                        out[v, u, c] = line_rgb[c]
                else:
                    for c in range(3):
                        out[v, u, c] = road_rgb[c]
            else:
                for c in range(3):
                    out[v, u, c] = grass_rgb[c]


def render(state: VehicleState, road: roadgen.Road,
           weather: WeatherPreset = WEATHER_PRESETS["nominal"],
           frame_index: int = 0) -> np.ndarray:
    """Forward-facing 240x320 view of the road ribbon."""
    out = np.empty((FRAME_H, FRAME_W, 3), dtype=np.float64)
    wp = road.waypoints
    # only segments within ~80 m of the vehicle matter for the view
    seg_i, _, _, _ = roadgen.project((state.x, state.y), road)
    span = int(80.0 / roadgen.WAYPOINT_SPACING_M)
    i0 = max(0, seg_i - span)
    i1 = min(len(wp) - 1, seg_i + span)
    _render_ground(out, FRAME_H, FRAME_W, 0,
                   state.x, state.y, np.cos(state.heading), np.sin(state.heading),
                   CAM_FOCAL_PX, CAM_PITCH_RAD, CAM_HEIGHT_M,
                   wp, road._cum_len, i0, i1, road.lane_width / 2.0,
                   road.length_m,
                   np.array(ROAD_GREY, dtype=np.float64),
                   np.array(LINE_YELLOW, dtype=np.float64),
                   np.array(GRASS_GREEN, dtype=np.float64),
                   np.array(SKY_BLUE, dtype=np.float64))
    out /= 255.0
    if weather.light != 1.0:
        out *= weather.light
    if weather.haze > 0:
        haze_rgb = np.array([0.78, 0.78, 0.8]) * weather.light
        out = (1 - weather.haze) * out + weather.haze * haze_rgb
    if weather.particles > 0:
        entropy = zlib.crc32(weather.name.encode())  # stable across processes
        rng = np.random.Generator(np.random.PCG64(
            np.random.SeedSequence(entropy=entropy, spawn_key=(frame_index,))))
        ys = rng.integers(0, FRAME_H - 1, size=weather.particles)
        xs = rng.integers(0, FRAME_W - 1, size=weather.particles)
        out[ys, xs] = 0.92
        out[ys + 1, xs] = 0.92
    return np.clip(np.floor(out * 255.0 + 0.5), 0, 255).astype(np.uint8)


# ---------------------------------------------------------------------------
# episode loop
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FrameRecord:
    frame: int
    elapsed_s: float
    x: float
    y: float
    heading: float
    speed: float
    cte: float
    steering: float
    throttle: float


@dataclass
class EpisodeLog:
    frames: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)
    aborted: bool = False
    error: str | None = None


def save_episode(path, log: EpisodeLog) -> None:
    with open(path, "w") as fh:
        fh.write(json.dumps({"type": "meta", **log.meta,
                             "aborted": log.aborted, "error": log.error}) + "\n")
        for f in log.frames:
            fh.write(json.dumps({
                "type": "frame", "frame": f.frame, "elapsed_s": round(f.elapsed_s, 9),
                "x": f.x, "y": f.y, "heading": f.heading, "speed": f.speed,
                "cte": f.cte, "steering": f.steering, "throttle": f.throttle,
            }) + "\n")


def load_episode(path) -> EpisodeLog:
    log = EpisodeLog()
    with open(path) as fh:
        for line in fh:
            rec = json.loads(line)
            if rec.pop("type") == "meta":
                log.aborted = rec.pop("aborted", False)
                log.error = rec.pop("error", None)
                log.meta = rec
            else:
                log.frames.append(FrameRecord(**rec))
    return log


class BaseAgent:
    """Interface for built-in agents. External agents live behind agentproto."""

    needs_pixels = True
    # True when the agent is a pure function of its per-frame inputs; lets the
    # loop fast-forward provably stationary episodes to the timeout
    stateless_frames = True

    def reset(self):
        pass

    def act(self, image, state: VehicleState, road: roadgen.Road) -> Action:
        raise NotImplementedError


class CentroidAgent(BaseAgent):
    """Deterministic image-driven baseline: finds road-grey pixels in the
    lower half of the frame and steers toward their horizontal centroid.

    The road test is a fixed RGB box around the rendered road grey, which
    makes color and contrast perturbations break it in an explainable way.
    """

    needs_pixels = True

    def __init__(self, gain: float = 2.2, cruise_throttle: float = 0.22,
                 steer_slowdown: float = 0.5, tolerance: int = 28):
        self.gain = gain
        self.cruise_throttle = cruise_throttle
        self.steer_slowdown = steer_slowdown
        self.tolerance = tolerance

    def act(self, image, state, road) -> Action:
        lower = image[image.shape[0] // 2:].astype(np.int16)
        diff = np.abs(lower - np.array(ROAD_GREY, dtype=np.int16))
        mask = (diff <= self.tolerance).all(axis=2)
        if not mask.any():
            return Action(0.0, 0.0)  # lost the road: safe stop
        cols = np.nonzero(mask)[1]
        cx = (image.shape[1] - 1) / 2.0
        offset = (cols.mean() - cx) / cx
        steering = float(np.clip(self.gain * offset, -1.0, 1.0))
        throttle = self.cruise_throttle * (1.0 - self.steer_slowdown * abs(steering))
        return Action(steering, throttle)


class ConstantAgent(BaseAgent):
    needs_pixels = False

    def __init__(self, steering: float, throttle: float):
        self.action = Action(steering, throttle)

    def act(self, image, state, road) -> Action:
        return self.action


def run_episode(road: roadgen.Road, agent: BaseAgent,
                perturbation: tuple | None = None,
                weather: WeatherPreset = WEATHER_PRESETS["nominal"],
                dt: float = DT_S, timeout_s: float = 200.0,
                catalog=None, frame_sink=None) -> EpisodeLog:
    """Closed loop: render -> perturb -> agent -> step, with per-frame logging.

    `perturbation` is (kind, level, seed) or None. The perturbed image is seen
    by the agent only; simulator state never depends on it. `frame_sink`, if
    given, is called as sink(frame_index, perturbed_image) for every rendered
    frame (forces rendering even for pose-based agents).
    """
    cat = catalog or default_catalog()
    start_dir = road.waypoints[1] - road.waypoints[0]
    state = VehicleState(x=road.waypoints[0][0], y=road.waypoints[0][1],
                         heading=float(np.arctan2(start_dir[1], start_dir[0])),
                         speed=0.0)
    log = EpisodeLog(meta={
        "perturbation": list(perturbation) if perturbation else None,
        "weather": weather.name, "dt": dt, "timeout_s": timeout_s,
        "lane_width": road.lane_width, "road_length_m": road.length_m,
    })
    agent.reset()
    half = road.lane_width / 2.0
    want_pixels = agent.needs_pixels or frame_sink is not None

    i = 0
    while True:
        elapsed = i * dt
        cte = roadgen.cross_track_error((state.x, state.y), road)
        if abs(cte) > half or elapsed >= timeout_s or _reached(state, road):
            log.frames.append(FrameRecord(i, elapsed, state.x, state.y,
                                          state.heading, state.speed, cte, 0.0, 0.0))
            break
        image = None
        if want_pixels:
            image = render(state, road, weather, i)
            if perturbation is not None:
                kind, level, seed = perturbation
                image = cat.apply(kind, image, level, seed)
            if frame_sink is not None:
                frame_sink(i, image)
        try:
            action = agent.act(image, state, road)
        except AgentError as exc:
            log.frames.append(FrameRecord(i, elapsed, state.x, state.y,
                                          state.heading, state.speed, cte, 0.0, 0.0))
            log.aborted = True
            log.error = str(exc)
            break
        log.frames.append(FrameRecord(i, elapsed, state.x, state.y,
                                      state.heading, state.speed, cte,
                                      action.steering, action.throttle))
        # A stopped vehicle under a stateless agent in particle-free weather
        # is an exact fixed point: every remaining frame repeats this one, so
        # they can be written out without rendering.
        if (agent.stateless_frames and frame_sink is None
                and weather.particles == 0
                and state.speed == 0.0 and action.throttle <= 0.0):
            i += 1
            while i * dt < timeout_s:
                log.frames.append(FrameRecord(i, i * dt, state.x, state.y,
                                              state.heading, state.speed, cte,
                                              action.steering, action.throttle))
                i += 1
            log.frames.append(FrameRecord(i, i * dt, state.x, state.y,
                                          state.heading, state.speed, cte,
                                          0.0, 0.0))
            break
        state = step(state, action, dt)
        i += 1
    return log


def _reached(state: VehicleState, road: roadgen.Road) -> bool:
    goal = road.waypoints[-1]
    from .metrics import GOAL_RADIUS_M
    return (np.hypot(state.x - goal[0], state.y - goal[1]) <= GOAL_RADIUS_M
            and roadgen.progress((state.x, state.y), road) >= 0.99)
