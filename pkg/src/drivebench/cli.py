"""Command-line entry point.

Subcommands: bench, perturb, offline, online, shadow, augment, roads, report.
Exit codes: 0 success, 1 usage error, 2 runtime error. All randomness is
controlled by ``--seed``; suite options can also come from a ``--config``
key=value file (see ``config_from_file``). The DRIVEBENCH_CONFIG environment
variable supplies a default config path.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import agentproto, bench, harness, roadgen
from .image_ops import load_png, save_png
from .perturb import default_catalog

CONFIG_ENV = "DRIVEBENCH_CONFIG"


def config_from_file(path) -> dict:
    """Parse a key=value suite config file (one pair per line, # comments).
    List values are comma-separated."""
    opts = {}
    with open(path) as fh:
        for ln, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{ln}: expected key=value")
            key, val = (s.strip() for s in line.split("=", 1))
            opts[key] = val
    return opts


def _suite_config(args) -> harness.SuiteConfig:
    opts = {}
    path = args.config or os.environ.get(CONFIG_ENV)
    if path:
        opts = config_from_file(path)
    kinds = args.kinds if args.kinds is not None else opts.get("perturbations")
    if isinstance(kinds, str):
        kinds = [k for k in kinds.split(",") if k]
    levels = opts.get("levels")
    levels = (tuple(int(v) for v in levels.split(",")) if levels
              else harness.LEVELS)
    road_seeds = opts.get("road_seeds")
    road_seeds = (tuple(int(v) for v in road_seeds.split(","))
                  if road_seeds else ())
    return harness.SuiteConfig(
        perturbations=tuple(kinds or ()),
        levels=levels,
        agent=args.agent if getattr(args, "agent", None)
        else opts.get("agent", "builtin:centroid"),
        weather=opts.get("weather", "nominal"),
        timeout_s=float(args.timeout if getattr(args, "timeout", None)
                        else opts.get("timeout_s", 200.0)),
        seed=args.seed,
        nominal_only=not kinds,
        strict=opts.get("strict", "true").lower() != "false",
        include_over_budget=opts.get("include_over_budget",
                                     "false").lower() == "true",
        road_seeds=road_seeds,
        dataset=getattr(args, "dataset", None) or opts.get("dataset"),
    )


def _resolve_driving_agent(spec_str, cfg, server_timeout_s=30.0):
    """builtin:<name> or serve:<port> (wait for an external agent)."""
    if spec_str.startswith("builtin:"):
        return harness.builtin_driving_agent(spec_str.split(":", 1)[1]), None
    if spec_str.startswith("serve:"):
        server = agentproto.HarnessServer(port=int(spec_str.split(":", 1)[1]))
        print(f"waiting for agent on port {server.port}", file=sys.stderr)
        session = server.accept(timeout_s=server_timeout_s)
        agent = agentproto.RemoteDrivingAgent(session, "online")
        return agent, (server, session)
    raise ValueError(f"unknown agent endpoint {spec_str!r}")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_bench(args) -> int:
    size = args.size.split("x")
    if len(size) != 2:
        raise ValueError(f"--size must be HxW, got {args.size!r}")
    h, w = int(size[0]), int(size[1])
    results = bench.measure_catalog(width=w, height=h, iterations=args.iters,
                                    seed=args.seed)
    os.makedirs(args.out, exist_ok=True)
    budget = bench.Budget(args.fps)
    bench.write_csv(os.path.join(args.out, "bench.csv"), results)
    bench.write_svg(os.path.join(args.out, "bench.svg"), results, budget)
    parts = bench.gate(results, budget)
    print(f"{len(parts['included'])} kinds within the {budget.budget_ms:.1f} ms "
          f"budget, {len(parts['excluded'])} excluded: "
          f"{', '.join(parts['excluded']) or 'none'}")
    return 0


def cmd_perturb(args) -> int:
    img = load_png(args.input)
    out = default_catalog().apply(args.kind, img, args.level, args.seed)
    save_png(args.output, out)
    return 0


def cmd_offline(args) -> int:
    cfg = _suite_config(args)
    if not cfg.dataset:
        raise ValueError("offline needs --dataset")
    dataset = harness.load_dataset(cfg.dataset)
    if args.embed_labels:
        dataset = harness.embed_labels(dataset)
    if cfg.agent.startswith("builtin:"):
        agent = harness.builtin_seg_agent(cfg.agent.split(":", 1)[1])
        harness.run_offline(dataset, agent, cfg, out_dir=args.out)
    elif cfg.agent.startswith("serve:"):
        server = agentproto.HarnessServer(port=int(cfg.agent.split(":", 1)[1]))
        print(f"waiting for agent on port {server.port}", file=sys.stderr)
        session = server.accept(timeout_s=30.0)
        try:
            harness.run_offline(dataset, harness.RemoteSegAgent(session),
                                cfg, out_dir=args.out)
        finally:
            session.bye()
            server.close()
    else:
        raise ValueError(f"unknown agent endpoint {cfg.agent!r}")
    print(f"report written to {args.out}")
    return 0


def cmd_online(args) -> int:
    cfg = _suite_config(args)
    agent, remote = _resolve_driving_agent(cfg.agent, cfg)
    try:
        rows = harness.run_online(cfg, agent=agent, out_dir=args.out)
    finally:
        if remote:
            server, session = remote
            session.bye()
            server.close()
    for row in rows:
        print(f"{row.kind:22s} success {row.avg:6.2f}% "
              f"OR={row.out_of_road} OT={row.out_of_time}")
    return 0


def cmd_shadow(args) -> int:
    cfg = _suite_config(args)
    if args.manifest:
        cfg = harness.shadow_config_from_manifest(args.manifest)
    count = harness.run_shadow(cfg, args.out)
    print(f"collected {count} samples into {args.out}")
    return 0


def cmd_augment(args) -> int:
    kinds = [k for k in args.kinds.split(",") if k]
    count = harness.export_augmented(args.dataset, kinds, args.mode,
                                     args.out, seed=args.seed)
    print(f"wrote {count} images to {args.out}")
    return 0


def cmd_roads(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    if args.presets:
        configs = roadgen.preset_configs()
    else:
        configs = [roadgen.RoadGenConfig(seed=args.seed + i)
                   for i in range(args.count)]
    for cfg in configs:
        road = roadgen.generate(cfg)
        roadgen.save_road(os.path.join(args.out, f"road_{cfg.seed}.txt"), road)
    print(f"wrote {len(configs)} roads to {args.out}")
    return 0


def cmd_report(args) -> int:
    """Re-render report.md from an existing report.csv."""
    import csv as _csv
    with open(os.path.join(args.out, "report.csv"), newline="") as fh:
        rows_raw = list(_csv.reader(fh))
    header, body = rows_raw[0], rows_raw[1:]
    if header[1] == "avg_iou":
        rows = [harness.ReportRow(kind=r[0], avg=float(r[1]), std=float(r[2]),
                                  max=float(r[3]), min=float(r[4]))
                for r in body]
        mode = "offline"
    else:
        rows = [harness.ReportRow(
            kind=r[0], avg=float(r[1]), std=float(r[2]),
            trend=tuple(float(v) for v in r[3:8]),
            out_of_road=int(r[8]), out_of_time=int(r[9]),
            agent_errors=int(r[10]), time_s=float(r[11]),
            jitter_pct=float(r[12])) for r in body]
        mode = "online"
    with open(os.path.join(args.out, "report.md"), "w") as fh:
        fh.write(harness.report_md_text(rows, mode))
    print(f"re-rendered {os.path.join(args.out, 'report.md')}")
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--config", help="suite config file (key=value lines)")
    p = argparse.ArgumentParser(prog="drivebench",
                                description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def add_parser(name, **kw):
        return sub.add_parser(name, parents=[common], **kw)

    b = add_parser("bench", help="per-kind latency benchmark")
    b.add_argument("--size", default="240x320")
    b.add_argument("--iters", type=int, default=250)
    b.add_argument("--fps", type=float, default=30.0)
    b.add_argument("--out", default="bench_out")
    b.set_defaults(func=cmd_bench)

    pe = add_parser("perturb", help="apply one perturbation to a PNG")
    pe.add_argument("--kind", required=True)
    pe.add_argument("--level", type=int, required=True)
    pe.add_argument("input")
    pe.add_argument("output")
    pe.set_defaults(func=cmd_perturb)

    off = add_parser("offline", help="offline segmentation suite")
    off.add_argument("--agent", default="builtin:echo")
    off.add_argument("--dataset")
    off.add_argument("--kinds", help="comma-separated perturbation ids")
    off.add_argument("--embed-labels", action="store_true",
                     help="copy labels into the red channel (echo-agent test)")
    off.add_argument("--out", default="offline_out")
    off.set_defaults(func=cmd_offline, timeout=None)

    on = add_parser("online", help="closed-loop driving suite")
    on.add_argument("--agent", default="builtin:centroid")
    on.add_argument("--kinds", help="comma-separated perturbation ids")
    on.add_argument("--timeout", type=float)
    on.add_argument("--out", default="online_out")
    on.set_defaults(func=cmd_online, dataset=None)

    sh = add_parser("shadow", help="expert-driven data collection")
    sh.add_argument("--kinds", help="comma-separated perturbation ids")
    sh.add_argument("--timeout", type=float)
    sh.add_argument("--manifest", help="re-collect from an existing manifest")
    sh.add_argument("--out", default="shadow_out")
    sh.set_defaults(func=cmd_shadow, dataset=None)

    au = add_parser("augment", help="export an augmented dataset")
    au.add_argument("--dataset", required=True)
    au.add_argument("--kinds", required=True)
    au.add_argument("--mode", choices=("max_intensity", "all_levels"),
                    default="max_intensity")
    au.add_argument("--out", default="augment_out")
    au.set_defaults(func=cmd_augment)

    ro = add_parser("roads", help="generate road files")
    ro.add_argument("--presets", action="store_true",
                    help="write the ten preset test roads")
    ro.add_argument("--count", type=int, default=1)
    ro.add_argument("--out", default="roads_out")
    ro.set_defaults(func=cmd_roads)

    rep = add_parser("report", help="re-render report.md from report.csv")
    rep.add_argument("--out", required=True)
    rep.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except Exception as exc:
        print(f"drivebench: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
