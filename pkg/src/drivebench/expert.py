"""Ground-truth driver: pure-pursuit steering plus PID throttle.

The expert reads the vehicle pose and the road geometry, never pixels, so
its action trace is invariant to any perturbation applied to the rendered
frames. That property is what makes shadow-mode data collection sound: the
perturbed frame is paired with a clean-driving label.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np

from . import roadgen, simcore
from .image_ops import save_png
from .perturb import default_catalog


@dataclass(frozen=True)
class ExpertConfig:
    lookahead_m: float = 6.0
    target_speed_mps: float = 8.0
    kp: float = 0.8
    ki: float = 0.05
    kd: float = 0.1
    cte_slowdown_gain: float = 1.0

    def __post_init__(self):
        if self.lookahead_m <= 0 or self.target_speed_mps <= 0:
            raise ValueError("lookahead_m and target_speed_mps must be > 0")
        if min(self.kp, self.ki, self.kd, self.cte_slowdown_gain) < 0:
            raise ValueError("gains must be >= 0")


def point_at_arc(road: roadgen.Road, arc: float) -> np.ndarray:
    """Centerline point at the given arc length (clamped to the road)."""
    cum = road._cum_len
    arc = float(np.clip(arc, 0.0, road.length_m))
    i = int(np.searchsorted(cum, arc, side="right")) - 1
    i = min(i, len(road._seg_len) - 1)
    t = (arc - cum[i]) / road._seg_len[i]
    return road.waypoints[i] + t * road._seg[i]


def pursuit_steer(state: simcore.VehicleState, road: roadgen.Road,
                  cfg: ExpertConfig) -> float:
    """Pure pursuit toward the centerline point one lookahead ahead."""
    _, _, arc, _ = roadgen.project((state.x, state.y), road)
    goal = point_at_arc(road, arc + cfg.lookahead_m)
    alpha = np.arctan2(goal[1] - state.y, goal[0] - state.x) - state.heading
    alpha = np.arctan2(np.sin(alpha), np.cos(alpha))  # wrap to [-pi, pi]
    steer_angle = np.arctan2(2.0 * simcore.WHEELBASE_M * np.sin(alpha),
                             cfg.lookahead_m)
    return float(np.clip(steer_angle / simcore.MAX_STEER_RAD, -1.0, 1.0))


def pid_throttle(speed: float, cte: float, lane_width: float,
                 cfg: ExpertConfig, integrator_state, dt: float = simcore.DT_S):
    """PID on speed error toward a CTE-reduced target. Returns
    (throttle, new_integrator_state); the state is (integral, prev_error)."""
    if lane_width <= 0:
        raise ValueError("lane_width must be > 0")
    integral, prev_err = integrator_state
    target = cfg.target_speed_mps * max(
        0.0, 1.0 - cfg.cte_slowdown_gain * abs(cte) / (lane_width / 2.0))
    err = target - speed
    integral += err * dt
    if cfg.ki > 0:  # anti-windup: the integral term alone stays in range
        integral = float(np.clip(integral, -1.0 / cfg.ki, 1.0 / cfg.ki))
    deriv = (err - prev_err) / dt
    throttle = cfg.kp * err + cfg.ki * integral + cfg.kd * deriv
    return float(np.clip(throttle, -1.0, 1.0)), (integral, err)


class ExpertAgent(simcore.BaseAgent):
    needs_pixels = False
    stateless_frames = False  # PID integrator carries state across frames

    def __init__(self, cfg: ExpertConfig | None = None, dt: float = simcore.DT_S):
        self.cfg = cfg or ExpertConfig()
        self.dt = dt
        self.reset()

    def reset(self):
        self._integ = (0.0, 0.0)

    def act(self, image, state, road) -> simcore.Action:
        steering = pursuit_steer(state, road, self.cfg)
        cte = roadgen.cross_track_error((state.x, state.y), road)
        throttle, self._integ = pid_throttle(state.speed, cte, road.lane_width,
                                             self.cfg, self._integ, self.dt)
        return simcore.Action(steering, throttle)


def shadow_collect(roads, perturbations, out_dir,
                   cfg: ExpertConfig | None = None, seed: int = 0,
                   weather=simcore.WEATHER_PRESETS["nominal"],
                   dt: float = simcore.DT_S, timeout_s: float = 200.0,
                   catalog=None, road_seeds=None) -> int:
    """Drive every road with the expert while logging (perturbed frame,
    expert action) samples.

    `perturbations` is a list of (kind, level) pairs; an entry of None
    collects unperturbed frames. Layout: ``out_dir/samples/NNNNNN.png`` plus
    ``labels.csv``. Returns the sample count.
    """
    cat = catalog or default_catalog()
    samples_dir = os.path.join(out_dir, "samples")
    os.makedirs(samples_dir, exist_ok=True)
    rows = []
    counter = 0
    road_seeds = road_seeds or [None] * len(roads)

    for road, road_seed in zip(roads, road_seeds):
        for pert in perturbations:
            agent = ExpertAgent(cfg, dt)
            frames = {}

            def sink(idx, img, _frames=frames):
                _frames[idx] = img

            log = simcore.run_episode(
                road, agent,
                perturbation=(pert[0], pert[1], seed) if pert else None,
                weather=weather, dt=dt, timeout_s=timeout_s,
                catalog=cat, frame_sink=sink)
            for f in log.frames:
                if f.frame not in frames:   # terminal frame is not rendered
                    continue
                name = f"{counter:06d}.png"
                save_png(os.path.join(samples_dir, name), frames[f.frame])
                rows.append([name, f"{f.steering:.6f}", f"{f.throttle:.6f}",
                             "" if road_seed is None else road_seed,
                             pert[0] if pert else "nominal",
                             pert[1] if pert else 0])
                counter += 1

    with open(os.path.join(out_dir, "labels.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["frame", "steering", "throttle", "road_seed",
                    "perturbation", "level"])
        w.writerows(rows)
    return counter
