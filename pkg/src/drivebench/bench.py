"""Per-frame latency micro-benchmark and the compute-budget gate.

A perturbation is eligible for the online loop only if its slowest level
stays under the frame budget (33.3 ms at 30 fps). Timing covers the apply()
call alone: input images are pre-generated, and warm-up iterations are
discarded so one-time allocation and JIT effects do not skew the mean.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass

import numpy as np

from .perturb import Catalog, default_catalog

DEFAULT_ITERATIONS = 250
DEFAULT_WARMUP = 10
DEFAULT_SIZE = (240, 320)  # (height, width)


@dataclass(frozen=True)
class Budget:
    frame_rate_fps: float = 30.0

    def __post_init__(self):
        if self.frame_rate_fps <= 0:
            raise ValueError("frame_rate_fps must be > 0")

    @property
    def budget_ms(self) -> float:
        return 1000.0 / self.frame_rate_fps


@dataclass(frozen=True)
class BenchResult:
    kind: str
    level: int
    iterations: int
    mean_ms: float
    std_ms: float
    max_ms: float


def measure(kind: str, level: int, width: int = 320, height: int = 240,
            iterations: int = DEFAULT_ITERATIONS, warmup: int = DEFAULT_WARMUP,
            seed: int = 0, catalog: Catalog | None = None) -> BenchResult:
    """Time apply() over pre-generated random RGB frames.

    Single-threaded by contract; do not benchmark kinds concurrently.
    """
    if iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {iterations}")
    cat = catalog or default_catalog()
    cat.get(kind)  # raises for unknown kinds before any timing work
    rng = np.random.default_rng(seed)
    pool = [rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8)
            for _ in range(min(iterations, 32))]

    for i in range(warmup):
        cat.apply(kind, pool[i % len(pool)], level, seed)

    samples_ms = np.empty(iterations)
    for i in range(iterations):
        img = pool[i % len(pool)]
        t0 = time.perf_counter_ns()
        cat.apply(kind, img, level, seed)
        samples_ms[i] = (time.perf_counter_ns() - t0) / 1e6

    return BenchResult(kind=kind, level=level, iterations=iterations,
                       mean_ms=float(samples_ms.mean()),
                       std_ms=float(samples_ms.std()),
                       max_ms=float(samples_ms.max()))


def measure_catalog(levels=(1, 2, 3, 4, 5), width: int = 320, height: int = 240,
                    iterations: int = DEFAULT_ITERATIONS, seed: int = 0,
                    catalog: Catalog | None = None) -> list[BenchResult]:
    cat = catalog or default_catalog()
    return [measure(kind, level, width, height, iterations, seed=seed, catalog=cat)
            for kind in cat.kinds() for level in levels]


def worst_level_means(results) -> dict[str, float]:
    worst: dict[str, float] = {}
    for r in results:
        worst[r.kind] = max(worst.get(r.kind, 0.0), r.mean_ms)
    return worst


def gate(results, budget: Budget) -> dict[str, list[str]]:
    """Partition kinds into included/excluded by worst-level mean latency."""
    if not results:
        raise ValueError("gate needs at least one BenchResult")
    worst = worst_level_means(results)
    included = sorted(k for k, ms in worst.items() if ms <= budget.budget_ms)
    excluded = sorted(k for k, ms in worst.items() if ms > budget.budget_ms)
    return {"included": included, "excluded": excluded}


def write_csv(path, results) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["kind", "level", "iterations", "mean_ms", "std_ms", "max_ms"])
        for r in results:
            w.writerow([r.kind, r.level, r.iterations,
                        f"{r.mean_ms:.4f}", f"{r.std_ms:.4f}", f"{r.max_ms:.4f}"])


def write_svg(path, results, budget: Budget) -> None:
    """Horizontal bar chart of worst-level mean latency with the budget line."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    worst = worst_level_means(results)
    kinds = sorted(worst, key=worst.get)
    values = [worst[k] for k in kinds]
    fig, ax = plt.subplots(figsize=(8, 0.28 * len(kinds) + 1.5))
    colors = ["#b33" if v > budget.budget_ms else "#47a" for v in values]
    ax.barh(kinds, values, color=colors)
    ax.axvline(budget.budget_ms, color="k", linestyle="--",
               label=f"budget {budget.budget_ms:.1f} ms")
    ax.set_xlabel("worst-level mean latency (ms)")
    ax.legend(loc="lower right")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
