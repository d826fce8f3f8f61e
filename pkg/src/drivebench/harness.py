"""Benchmark orchestration: offline segmentation suites, online driving
suites, shadow-mode collection, and augmentation export.

Datasets for the offline and augmentation paths are directories with
``images/*.png`` and ``labels/*.png`` sharing stems; labels are greyscale
rasters of per-pixel class ids. Shadow datasets (``samples/`` + ``labels.csv``)
are produced by :func:`run_shadow` and are a separate layout.

Every report row is recomputable from the persisted per-episode or per-image
logs; aggregation holds no hidden state, and a suite re-run from the same
config and master seed reproduces ``report.csv`` byte-identically.
"""

from __future__ import annotations

import csv
import io
import json
import os
import shutil
from dataclasses import dataclass

import numpy as np

from . import expert, metrics, roadgen, simcore
from .errors import AgentError, InvalidDatasetError
from .image_ops import load_gray, load_png, save_png
from .perturb import default_catalog

LEVELS = (1, 2, 3, 4, 5)
TREND_GLYPHS = " ▁▂▃▄▅▆▇█"


@dataclass(frozen=True)
class SuiteConfig:
    perturbations: tuple = ()        # kind ids; empty only with nominal_only
    levels: tuple = LEVELS
    agent: str = "builtin:centroid"  # builtin:<name> (online) / builtin:echo ...
    weather: str = "nominal"
    timeout_s: float = 200.0
    seed: int = 0
    nominal_only: bool = False
    strict: bool = True              # agent-error episodes count as failures
    include_over_budget: bool = False
    road_seeds: tuple = ()           # empty -> the ten preset roads
    dataset: str | None = None       # offline/augment dataset directory
    num_classes: int = 0             # 0 -> inferred from the labels

    def __post_init__(self):
        if self.timeout_s <= 0:
            raise ValueError("timeout_s must be > 0")
        if not self.perturbations and not self.nominal_only:
            raise ValueError("perturbation list empty; set nominal_only to "
                             "run just the baseline")
        bad = [lv for lv in self.levels if lv not in LEVELS]
        if bad or not self.levels:
            raise ValueError(f"levels must be a non-empty subset of 1..5, got "
                             f"{self.levels}")


@dataclass(frozen=True)
class ReportRow:
    """One aggregated suite row. Offline rows fill the IoU stats; online rows
    fill the success stats. The trend always has exactly 5 fractions."""

    kind: str
    avg: float
    std: float
    max: float | None = None
    min: float | None = None
    trend: tuple | None = None
    out_of_road: int | None = None
    out_of_time: int | None = None
    agent_errors: int | None = None
    time_s: float | None = None
    jitter_pct: float | None = None


def _resolve_roads(cfg: SuiteConfig):
    if cfg.road_seeds:
        return [roadgen.generate(roadgen.RoadGenConfig(seed=s))
                for s in cfg.road_seeds]
    return roadgen.preset_roads()


def _suite_kinds(cfg: SuiteConfig, catalog):
    kinds = []
    for kind in cfg.perturbations:
        spec = catalog.get(kind)   # raises on unknown/excluded ids
        if spec.over_budget and not cfg.include_over_budget:
            continue
        kinds.append(kind)
    return kinds


# ---------------------------------------------------------------------------
# offline (segmentation)
# ---------------------------------------------------------------------------

def load_dataset(path):
    """Load an images/ + labels/ dataset as [(name, image, label), ...]."""
    img_dir = os.path.join(path, "images")
    lab_dir = os.path.join(path, "labels")
    if not os.path.isdir(img_dir) or not os.path.isdir(lab_dir):
        raise InvalidDatasetError(f"{path}: expected images/ and labels/")
    items = []
    for name in sorted(os.listdir(img_dir)):
        if not name.endswith(".png"):
            continue
        lab_path = os.path.join(lab_dir, name)
        if not os.path.isfile(lab_path):
            raise InvalidDatasetError(f"{path}: image {name} has no label")
        img = load_png(os.path.join(img_dir, name))
        lab = load_gray(lab_path)
        if img.shape[:2] != lab.shape:
            raise InvalidDatasetError(
                f"{path}: {name} image {img.shape[:2]} vs label {lab.shape}")
        items.append((name, img, lab))
    if not items:
        raise InvalidDatasetError(f"{path}: no images found")
    return items


def embed_labels(items):
    """Test mode: copy each label's class ids into the image's red channel so
    an echo agent can return perfect predictions end to end."""
    out = []
    for name, img, lab in items:
        img = img.copy()
        img[..., 0] = lab
        out.append((name, img, lab))
    return out


class EchoSegAgent:
    """Reads the class map back out of the red channel (test mode)."""

    def segment(self, image: np.ndarray) -> np.ndarray:
        return image[..., 0].copy()


class _OracleSegAgent:
    """Returns the ground-truth label regardless of input (set per image)."""

    def __init__(self):
        self.label = None

    def segment(self, image: np.ndarray) -> np.ndarray:
        return self.label.copy()


class RemoteSegAgent:
    """Adapts an agentproto HarnessSession to the .segment() interface."""

    def __init__(self, session, deadline_ms: float | None = None):
        self.session = session
        self.deadline_ms = deadline_ms
        self._index = 0

    def segment(self, image: np.ndarray) -> np.ndarray:
        seg = self.session.request_segmentation(
            image, "offline", self._index, deadline_ms=self.deadline_ms)
        self._index += 1
        return seg


def run_offline(dataset, agent, cfg: SuiteConfig, out_dir=None):
    """Offline segmentation suite.

    For each perturbation x level the images are perturbed, the agent is
    queried, and mean IoU over the dataset is recorded; each row aggregates
    Avg/Std/Max/Min over the levels. Labels are never perturbed. A nominal
    row is always computed first. Returns (rows, per_image_log); the log rows
    are (kind, level, image_name, miou | "error").
    """
    if isinstance(dataset, str):
        dataset = load_dataset(dataset)
    catalog = default_catalog()
    oracle = isinstance(agent, _OracleSegAgent)
    # default to the full uint8 class space: perturbed frames can make an
    # agent emit ids outside the label range, which must score 0, not raise
    num_classes = cfg.num_classes or 256
    log = []
    rows = []

    def level_miou(kind, level):
        vals = []
        for name, img, lab in dataset:
            frame = img if kind is None else catalog.apply(
                kind, img, level, cfg.seed)
            if oracle:
                agent.label = lab
            try:
                pred = agent.segment(frame)
            except AgentError as exc:
                log.append((kind or "nominal", level, name, f"error:{exc}"))
                continue
            miou = metrics.mean_iou(
                metrics.iou_per_class(pred, lab, num_classes))
            log.append((kind or "nominal", level, name, miou))
            vals.append(miou)
        return float(np.mean(vals)) if vals else float("nan")

    nominal = level_miou(None, 0)
    rows.append(ReportRow(kind="nominal", avg=nominal, std=0.0,
                          max=nominal, min=nominal))
    for kind in _suite_kinds(cfg, catalog):
        per_level = [level_miou(kind, lv) for lv in cfg.levels]
        rows.append(ReportRow(
            kind=kind,
            avg=float(np.mean(per_level)), std=float(np.std(per_level)),
            max=float(np.max(per_level)), min=float(np.min(per_level))))

    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "offline_log.csv"), "w",
                  newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["kind", "level", "image", "miou"])
            for kind, level, name, val in log:
                w.writerow([kind, level, name,
                            val if isinstance(val, str) else f"{val:.6f}"])
        write_report(rows, out_dir, mode="offline")
    return rows, log


def builtin_seg_agent(name: str):
    if name == "echo":
        return EchoSegAgent()
    if name == "oracle":
        return _OracleSegAgent()
    raise ValueError(f"unknown builtin segmentation agent {name!r}")


# ---------------------------------------------------------------------------
# online (driving)
# ---------------------------------------------------------------------------

def builtin_driving_agent(name: str) -> simcore.BaseAgent:
    if name == "centroid":
        return simcore.CentroidAgent()
    if name == "expert":
        return expert.ExpertAgent()
    if name == "constant":
        return simcore.ConstantAgent(0.0, 0.3)
    raise ValueError(f"unknown builtin driving agent {name!r}")


def _episode_batch(roads, agent, pert, cfg: SuiteConfig, weather,
                   out_dir, tag):
    """Run one (kind, level) over all roads; returns outcome stats."""
    statuses, times, jitters = [], [], []
    agent_errors = 0
    for ri, road in enumerate(roads):
        log = simcore.run_episode(road, agent, perturbation=pert,
                                  weather=weather, timeout_s=cfg.timeout_s)
        if out_dir:
            ep_dir = os.path.join(out_dir, "episodes")
            os.makedirs(ep_dir, exist_ok=True)
            simcore.save_episode(
                os.path.join(ep_dir, f"{tag}_road{ri}.jsonl"), log)
        if log.aborted:
            agent_errors += 1
            continue
        out = metrics.classify_outcome(log, road, cfg.timeout_s)
        statuses.append(out.status)
        if out.status == metrics.SUCCESS:
            times.append(out.elapsed_s)
            jitters.append(out.jitter_pct)
    total = len(roads)
    denom = total if cfg.strict else max(1, total - agent_errors)
    return {
        "success_frac": statuses.count(metrics.SUCCESS) / denom,
        "out_of_road": statuses.count(metrics.OUT_OF_ROAD),
        "out_of_time": statuses.count(metrics.OUT_OF_TIME),
        "agent_errors": agent_errors,
        "times": times,
        "jitters": jitters,
    }


def _online_row(kind, level_stats) -> ReportRow:
    """Aggregate per-level batches into one report row. Time and jitter are
    averaged over non-failing (successful) episodes only."""
    fracs = [s["success_frac"] for s in level_stats]
    times = [t for s in level_stats for t in s["times"]]
    jitters = [j for s in level_stats for j in s["jitters"]]
    trend = tuple(fracs) if len(fracs) == 5 else tuple(
        fracs + [fracs[-1]] * (5 - len(fracs)))
    return ReportRow(
        kind=kind,
        avg=100.0 * float(np.mean(fracs)),
        std=100.0 * float(np.std(fracs)),
        trend=trend,
        out_of_road=sum(s["out_of_road"] for s in level_stats),
        out_of_time=sum(s["out_of_time"] for s in level_stats),
        agent_errors=sum(s["agent_errors"] for s in level_stats),
        time_s=float(np.mean(times)) if times else float("nan"),
        jitter_pct=float(np.mean(jitters)) if jitters else float("nan"))


def run_online(cfg: SuiteConfig, agent=None, out_dir=None):
    """Online driving suite: for every kind, roads x levels closed-loop
    episodes; nominal row (no perturbation, all roads) first."""
    catalog = default_catalog()
    roads = _resolve_roads(cfg)
    weather = simcore.WEATHER_PRESETS[cfg.weather]
    if agent is None:
        if not cfg.agent.startswith("builtin:"):
            raise ValueError(f"no session given for agent {cfg.agent!r}")
        agent = builtin_driving_agent(cfg.agent.split(":", 1)[1])

    rows = []
    nominal = _episode_batch(roads, agent, None, cfg, weather,
                             out_dir, "nominal")
    rows.append(_online_row("nominal", [nominal] * 5))
    for kind in _suite_kinds(cfg, catalog):
        stats = [_episode_batch(roads, agent, (kind, lv, cfg.seed), cfg,
                                weather, out_dir, f"{kind}_l{lv}")
                 for lv in cfg.levels]
        rows.append(_online_row(kind, stats))
    if out_dir:
        write_report(rows, out_dir, mode="online")
    return rows


# ---------------------------------------------------------------------------
# shadow collection
# ---------------------------------------------------------------------------

def run_shadow(cfg: SuiteConfig, out_dir) -> int:
    """Expert-driven data collection over the configured perturbation grid.
    Writes a manifest sufficient for byte-identical re-collection and returns
    the sample count."""
    roads = _resolve_roads(cfg)
    road_seeds = list(cfg.road_seeds) if cfg.road_seeds else [
        c.seed for c in roadgen.preset_configs()]
    perts = [None] + [(k, lv) for k in cfg.perturbations for lv in cfg.levels]
    os.makedirs(out_dir, exist_ok=True)
    count = expert.shadow_collect(
        roads, perts, out_dir, seed=cfg.seed,
        weather=simcore.WEATHER_PRESETS[cfg.weather],
        timeout_s=cfg.timeout_s, road_seeds=road_seeds)
    manifest = {
        "perturbations": list(cfg.perturbations),
        "levels": list(cfg.levels),
        "road_seeds": road_seeds,
        "weather": cfg.weather,
        "timeout_s": cfg.timeout_s,
        "seed": cfg.seed,
        "samples": count,
    }
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return count


def shadow_config_from_manifest(path) -> SuiteConfig:
    with open(path) as fh:
        m = json.load(fh)
    return SuiteConfig(
        perturbations=tuple(m["perturbations"]), levels=tuple(m["levels"]),
        road_seeds=tuple(m["road_seeds"]), weather=m["weather"],
        timeout_s=m["timeout_s"], seed=m["seed"],
        nominal_only=not m["perturbations"])


# ---------------------------------------------------------------------------
# augmentation export
# ---------------------------------------------------------------------------

def export_augmented(dataset_dir, perturbations, mode, out_dir,
                     seed: int = 0) -> int:
    """Emit original + perturbed image copies with labels byte-copied.

    ``max_intensity`` perturbs at level 5 only (N x (P+1) images);
    ``all_levels`` uses every level (N x (5P+1)). Returns the image count.
    """
    if mode not in ("max_intensity", "all_levels"):
        raise ValueError(f"unknown mode {mode!r}")
    items = load_dataset(dataset_dir)
    catalog = default_catalog()
    for kind in perturbations:
        catalog.get(kind)
    levels = (5,) if mode == "max_intensity" else LEVELS
    img_out = os.path.join(out_dir, "images")
    lab_out = os.path.join(out_dir, "labels")
    os.makedirs(img_out, exist_ok=True)
    os.makedirs(lab_out, exist_ok=True)

    count = 0
    for name, img, _ in items:
        stem = name[:-4]
        src_label = os.path.join(dataset_dir, "labels", name)

        def emit(suffix, frame):
            nonlocal count
            out_name = f"{stem}__{suffix}.png"
            save_png(os.path.join(img_out, out_name), frame)
            # labels are copied at the byte level, never re-encoded
            shutil.copyfile(src_label, os.path.join(lab_out, out_name))
            count += 1

        emit("nominal", img)
        for kind in perturbations:
            for lv in levels:
                emit(f"{kind}_l{lv}", catalog.apply(kind, img, lv, seed))
    return count


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

def _fmt(x, nd=4):
    if x is None:
        return ""
    if isinstance(x, float) and np.isnan(x):
        return "nan"
    return f"{x:.{nd}f}"


def _trend_glyphs(trend) -> str:
    return "".join(TREND_GLYPHS[round(f * (len(TREND_GLYPHS) - 1))]
                   for f in trend)


def report_csv_text(rows, mode: str) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    if mode == "offline":
        w.writerow(["kind", "avg_iou", "std_iou", "max_iou", "min_iou"])
        for r in rows:
            w.writerow([r.kind, _fmt(r.avg), _fmt(r.std),
                        _fmt(r.max), _fmt(r.min)])
    else:
        w.writerow(["kind", "avg_success_pct", "std_success_pct",
                    "l1", "l2", "l3", "l4", "l5",
                    "out_of_road", "out_of_time", "agent_errors",
                    "avg_time_s", "avg_jitter_pct"])
        for r in rows:
            w.writerow([r.kind, _fmt(r.avg, 2), _fmt(r.std, 2),
                        *(_fmt(f, 2) for f in r.trend),
                        r.out_of_road, r.out_of_time, r.agent_errors,
                        _fmt(r.time_s, 2), _fmt(r.jitter_pct, 3)])
    return buf.getvalue()


def report_md_text(rows, mode: str) -> str:
    lines = []
    if mode == "offline":
        lines.append("| Perturbation | Avg IoU | Std | Max | Min |")
        lines.append("|---|---|---|---|---|")
        for r in rows:
            lines.append(f"| {r.kind} | {_fmt(r.avg)} | {_fmt(r.std)} "
                         f"| {_fmt(r.max)} | {_fmt(r.min)} |")
    else:
        lines.append("| Perturbation | Success % (avg ± std) | Trend "
                     "| OR | OT | Err | Time s | Jitter % |")
        lines.append("|---|---|---|---|---|---|---|---|")
        for r in rows:
            lines.append(
                f"| {r.kind} | {_fmt(r.avg, 2)} ± {_fmt(r.std, 2)} "
                f"| {_trend_glyphs(r.trend)} | {r.out_of_road} "
                f"| {r.out_of_time} | {r.agent_errors} "
                f"| {_fmt(r.time_s, 2)} | {_fmt(r.jitter_pct, 3)} |")
    return "\n".join(lines) + "\n"


def write_report(rows, out_dir, mode: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "report.csv"), "w", newline="") as fh:
        fh.write(report_csv_text(rows, mode))
    with open(os.path.join(out_dir, "report.md"), "w") as fh:
        fh.write(report_md_text(rows, mode))
