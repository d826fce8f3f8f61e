"""Drive one road closed-loop, clean vs. perturbed, and compare outcomes.

Runs the chosen agent on a preset road twice — once on clean frames, once
with a perturbation between renderer and agent — and prints both outcome
classifications side by side. Optionally dumps the frames the agent saw.

Usage: python demos/closed_loop_drive.py [--agent centroid] [--kind fog]
           [--level 5] [--road 0] [--frames-dir seen/]
"""

import argparse
import os

from drivebench import metrics, roadgen, simcore
from drivebench.harness import builtin_driving_agent
from drivebench.image_ops import save_png


def _run(road, agent_name, pert, timeout_s, frames_dir=None):
    sink = None
    if frames_dir:
        os.makedirs(frames_dir, exist_ok=True)

        def sink(i, img):
            if i % 30 == 0:   # one frame per simulated second
                save_png(os.path.join(frames_dir, f"f{i:05d}.png"), img)

    log = simcore.run_episode(road, builtin_driving_agent(agent_name),
                              perturbation=pert, timeout_s=timeout_s,
                              frame_sink=sink)
    return metrics.classify_outcome(log, road, timeout_s)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--agent", default="centroid",
                    choices=["centroid", "expert", "constant"])
    ap.add_argument("--kind", default="fog")
    ap.add_argument("--level", type=int, default=5, choices=range(1, 6))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--road", type=int, default=0, help="preset road index 0-9")
    ap.add_argument("--timeout", type=float, default=90.0)
    ap.add_argument("--frames-dir", help="dump every 30th perturbed frame here")
    args = ap.parse_args()

    road = roadgen.preset_roads()[args.road]
    print(f"preset road {args.road}: {road.length_m:.0f} m, lane width "
          f"{road.lane_width:.1f} m, agent={args.agent}\n")

    for label, pert, frames_dir in (
            ("clean", None, None),
            (f"{args.kind} level {args.level}",
             (args.kind, args.level, args.seed), args.frames_dir)):
        out = _run(road, args.agent, pert, args.timeout, frames_dir)
        print(f"{label:24s} {out.status:12s} completion {out.completion:.2f}  "
              f"time {out.elapsed_s:6.1f}s  jitter {out.jitter_pct:.2f}%")

    if args.frames_dir:
        print(f"\nperturbed frames (1/s) written to {args.frames_dir}/")


if __name__ == "__main__":
    main()
