"""Evaluation metrics: segmentation IoU, episode outcomes, and driving jitter."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import roadgen
from .errors import UndefinedMetricError

SUCCESS = "Success"
OUT_OF_ROAD = "OutOfRoad"
OUT_OF_TIME = "OutOfTime"

GOAL_RADIUS_M = 2.0  # distance to the final waypoint that counts as arrival


# ---------------------------------------------------------------------------
# segmentation
# ---------------------------------------------------------------------------

def iou_per_class(pred: np.ndarray, gt: np.ndarray, num_classes: int) -> np.ndarray:
    """Per-class intersection-over-union.

    Returns a length-C float vector; classes absent from both maps are NaN
    (absent), never 0.
    """
    pred = np.asarray(pred)
    gt = np.asarray(gt)
    if pred.shape != gt.shape:
        raise ValueError(f"shape mismatch: pred {pred.shape} vs gt {gt.shape}")
    if pred.max(initial=0) >= num_classes or gt.max(initial=0) >= num_classes:
        raise ValueError("class id out of range")
    p = pred.ravel().astype(np.int64)
    g = gt.ravel().astype(np.int64)
    inter = np.bincount(p[p == g], minlength=num_classes)
    count_p = np.bincount(p, minlength=num_classes)
    count_g = np.bincount(g, minlength=num_classes)
    union = count_p + count_g - inter
    out = np.full(num_classes, np.nan)
    present = union > 0
    out[present] = inter[present] / union[present]
    return out


def mean_iou(per_class: np.ndarray) -> float:
    """Arithmetic mean over present (non-NaN) classes."""
    per_class = np.asarray(per_class, dtype=float)
    present = ~np.isnan(per_class)
    if not present.any():
        raise UndefinedMetricError("no present classes")
    return float(per_class[present].mean())


# ---------------------------------------------------------------------------
# driving
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EpisodeOutcome:
    status: str                  # Success | OutOfRoad | OutOfTime
    completion: float            # arc-length fraction in [0, 1]
    elapsed_s: float             # simulated time
    jitter_pct: float


def jitter(cte_series, lane_width: float) -> float:
    """Mean absolute per-frame CTE derivative, as percent of lane width."""
    cte = np.asarray(cte_series, dtype=float)
    if cte.size < 2:
        raise ValueError("jitter needs at least 2 samples")
    if lane_width <= 0:
        raise ValueError(f"lane_width must be > 0, got {lane_width}")
    return float(100.0 * np.mean(np.abs(np.diff(cte))) / lane_width)


def classify_outcome(log, road: roadgen.Road, timeout_s: float) -> EpisodeOutcome:
    """Classify one episode log. OutOfRoad dominates: checked frame by frame
    before any timeout consideration."""
    frames = log.frames
    if not frames:
        raise ValueError("empty episode log")
    half = road.lane_width / 2.0
    jit = jitter([f.cte for f in frames], road.lane_width) if len(frames) >= 2 else 0.0

    last_on_road = None
    for f in frames:
        if abs(f.cte) > half:
            completion = 0.0
            if last_on_road is not None:
                completion = roadgen.progress((last_on_road.x, last_on_road.y), road)
            return EpisodeOutcome(OUT_OF_ROAD, completion, f.elapsed_s, jit)
        last_on_road = f

    last = frames[-1]
    goal = road.waypoints[-1]
    reached = (np.hypot(last.x - goal[0], last.y - goal[1]) <= GOAL_RADIUS_M
               and roadgen.progress((last.x, last.y), road) >= 0.99)
    if reached:
        return EpisodeOutcome(SUCCESS, 1.0, last.elapsed_s, jit)
    return EpisodeOutcome(OUT_OF_TIME,
                          roadgen.progress((last.x, last.y), road),
                          max(last.elapsed_s, timeout_s), jit)


def success_rate(outcomes) -> float:
    """Percentage of Success outcomes."""
    outcomes = list(outcomes)
    if not outcomes:
        raise ValueError("empty outcome list")
    return 100.0 * sum(o.status == SUCCESS for o in outcomes) / len(outcomes)


def completion_rate(outcomes) -> float:
    """Mean completion fraction, in percent."""
    outcomes = list(outcomes)
    if not outcomes:
        raise ValueError("empty outcome list")
    return 100.0 * float(np.mean([o.completion for o in outcomes]))
