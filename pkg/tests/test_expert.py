"""Expert driver oracles: pure-pursuit geometry, PID behavior, shadow mode."""

import csv

import numpy as np
import pytest

from drivebench import expert, metrics, roadgen, simcore


def _straight(length=200.0, lane_width=4.0):
    n = int(length / 2) + 1
    wp = np.stack([np.linspace(0, length, n), np.zeros(n)], axis=1)
    return roadgen.Road(waypoints=wp, lane_width=lane_width)


def _arc_road(radius, sweep_rad=2.5, lane_width=4.0):
    """Counter-clockwise circular arc starting at the origin heading +x."""
    t = np.arange(0.0, sweep_rad, 2.0 / radius)
    wp = np.stack([radius * np.sin(t), radius * (1 - np.cos(t))], axis=1)
    return roadgen.Road(waypoints=wp, lane_width=lane_width)


def test_config_validation():
    with pytest.raises(ValueError):
        expert.ExpertConfig(lookahead_m=0.0)
    with pytest.raises(ValueError):
        expert.ExpertConfig(kp=-1.0)


def test_zero_steering_on_centerline():
    cfg = expert.ExpertConfig()
    state = simcore.VehicleState(x=50.0, y=0.0, heading=0.0)
    assert expert.pursuit_steer(state, _straight(), cfg) == pytest.approx(0.0)


def test_steering_sign_convention():
    cfg = expert.ExpertConfig()
    road = _straight()
    # goal point ahead-left (vehicle below the centerline) -> steer left (> 0)
    below = simcore.VehicleState(x=50.0, y=-1.0, heading=0.0)
    assert expert.pursuit_steer(below, road, cfg) > 0
    above = simcore.VehicleState(x=50.0, y=1.0, heading=0.0)
    assert expert.pursuit_steer(above, road, cfg) < 0


def test_goal_thirty_degrees_left_steers_left():
    cfg = expert.ExpertConfig(lookahead_m=6.0)
    road = _straight()
    state = simcore.VehicleState(x=50.0, y=0.0, heading=-np.pi / 6)
    assert expert.pursuit_steer(state, road, cfg) > 0.2


def test_steady_state_steering_on_circle():
    cfg = expert.ExpertConfig()
    for radius in (30.0, 60.0):
        road = _arc_road(radius)
        # place the vehicle on the arc, tangent heading, mid-way along
        t = 1.0
        state = simcore.VehicleState(
            x=radius * np.sin(t), y=radius * (1 - np.cos(t)), heading=t)
        got = expert.pursuit_steer(state, road, cfg)
        want = np.arctan(simcore.WHEELBASE_M / radius) / simcore.MAX_STEER_RAD
        assert abs(got - want) / want < 0.05, radius


def test_pid_zero_error_equilibrium():
    cfg = expert.ExpertConfig()
    throttle, _ = expert.pid_throttle(cfg.target_speed_mps, 0.0, 4.0, cfg,
                                      (0.0, 0.0))
    assert throttle == pytest.approx(0.0)


def test_pid_demands_braking_at_half_lane_cte():
    cfg = expert.ExpertConfig(cte_slowdown_gain=1.0)
    throttle, _ = expert.pid_throttle(3.0, 2.0, 4.0, cfg, (0.0, 0.0))
    assert throttle <= 0.0


def test_pid_step_response_settles_within_15s():
    cfg = expert.ExpertConfig()
    state = simcore.VehicleState()
    integ = (0.0, 0.0)
    settled_at = None
    for i in range(int(20 / simcore.DT_S)):
        throttle, integ = expert.pid_throttle(state.speed, 0.0, 4.0, cfg, integ)
        state = simcore.step(state, simcore.Action(0.0, throttle))
        if settled_at is None and abs(
                state.speed - cfg.target_speed_mps) <= 0.05 * cfg.target_speed_mps:
            settled_at = (i + 1) * simcore.DT_S
    assert settled_at is not None and settled_at < 15.0


def test_pid_integrator_anti_windup():
    cfg = expert.ExpertConfig()
    integ = (0.0, 0.0)
    for _ in range(10000):
        _, integ = expert.pid_throttle(0.0, 0.0, 4.0, cfg, integ)
    assert abs(cfg.ki * integ[0]) <= 1.0 + 1e-12


def test_expert_action_trace_is_perturbation_invariant():
    road = roadgen.preset_roads()[5]
    a = simcore.run_episode(road, expert.ExpertAgent(), timeout_s=8.0)
    b = simcore.run_episode(road, expert.ExpertAgent(),
                            perturbation=("phase_scramble", 5, 1), timeout_s=8.0)
    assert [(f.steering, f.throttle) for f in a.frames] == \
           [(f.steering, f.throttle) for f in b.frames]


# ---------------------------------------------------------------------------
# shadow-mode collection
# ---------------------------------------------------------------------------

def test_shadow_collect_counts_and_layout(tmp_path):
    road = _straight(length=60.0)
    out = tmp_path / "ds"
    n = expert.shadow_collect([road], [None, ("fog", 3)], out,
                              timeout_s=30.0, road_seeds=[42])
    pngs = sorted((out / "samples").glob("*.png"))
    assert len(pngs) == n
    with open(out / "labels.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == n
    assert rows[0]["frame"] == "000000.png"
    perts = {r["perturbation"] for r in rows}
    assert perts == {"nominal", "fog"}
    assert all(r["road_seed"] == "42" for r in rows)


def test_shadow_collect_deterministic(tmp_path):
    road = _straight(length=40.0)
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        expert.shadow_collect([road], [("snow", 2)], out, timeout_s=20.0)
        outs.append(out)
    for p in sorted((outs[0] / "samples").glob("*.png")):
        q = outs[1] / "samples" / p.name
        assert p.read_bytes() == q.read_bytes()
    assert (outs[0] / "labels.csv").read_bytes() == \
        (outs[1] / "labels.csv").read_bytes()


def test_shadow_labels_small_steering_on_straight_road(tmp_path):
    road = _straight(length=60.0)
    out = tmp_path / "ds"
    expert.shadow_collect([road], [None], out, timeout_s=30.0)
    with open(out / "labels.csv", newline="") as fh:
        for row in csv.DictReader(fh):
            assert abs(float(row["steering"])) < 0.05
