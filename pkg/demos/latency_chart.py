"""Benchmark the catalog against the 30 fps frame budget and chart it.

Times every kind at every level, prints an ASCII bar chart of worst-level
means, shows the include/exclude gate decision, and writes bench.csv plus an
SVG chart.

Usage: python demos/latency_chart.py [--iterations 50] [--out-dir bench_out]
"""

import argparse
import os

from drivebench import bench


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--iterations", type=int, default=50,
                    help="timing iterations per (kind, level); the gate "
                         "contract uses 250")
    ap.add_argument("--out-dir", default="bench_out")
    args = ap.parse_args()

    budget = bench.Budget(frame_rate_fps=30.0)
    print(f"frame budget: {budget.budget_ms:.1f} ms at "
          f"{budget.frame_rate_fps:.0f} fps; {args.iterations} iterations "
          f"per cell at 240x320\n")

    results = bench.measure_catalog(iterations=args.iterations)
    worst = bench.worst_level_means(results)

    width = 50
    top = max(worst.values())
    for kind, ms in sorted(worst.items(), key=lambda kv: -kv[1]):
        bar = "#" * max(1, round(width * ms / top))
        flag = " OVER" if ms >= budget.budget_ms else ""
        print(f"{kind:20s} {ms:7.2f} ms  {bar}{flag}")

    decision = bench.gate(results, budget)
    print(f"\ngate: {len(decision['included'])} kinds included, "
          f"excluded: {decision['excluded'] or 'none'}")

    os.makedirs(args.out_dir, exist_ok=True)
    bench.write_csv(os.path.join(args.out_dir, "bench.csv"), results)
    bench.write_svg(os.path.join(args.out_dir, "bench.svg"), results, budget)
    print(f"wrote {args.out_dir}/bench.csv and {args.out_dir}/bench.svg")


if __name__ == "__main__":
    main()
