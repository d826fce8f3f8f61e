"""Graphic pattern perturbations (category F)."""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from ..image_ops import convolve2d, luma

SOBEL_X = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.float64)
SOBEL_Y = SOBEL_X.T


def splatter_blobs(shape_hw, params, rng):
    """Seeded blob list replay: (y, x, radius) per blob."""
    h, w = shape_hw
    n = int(params["count"])
    ys = rng.integers(0, h, size=n)
    xs = rng.integers(0, w, size=n)
    radii = rng.uniform(params["r_lo"], params["r_hi"], size=n)
    return list(zip(ys.tolist(), xs.tolist(), radii.tolist()))


def _paint_disc(mask, cy, cx, r):
    h, w = mask.shape
    ri = int(np.ceil(r))
    y0, y1 = max(0, cy - ri), min(h, cy + ri + 1)
    x0, x1 = max(0, cx - ri), min(w, cx + ri + 1)
    if y0 >= y1 or x0 >= x1:
        return
    yy, xx = np.meshgrid(np.arange(y0, y1) - cy, np.arange(x0, x1) - cx,
                         indexing="ij")
    mask[y0:y1, x0:x1] |= yy * yy + xx * xx <= r * r


def splatter(img, params, rng):
    mask = np.zeros(img.shape[:2], dtype=bool)
    for cy, cx, r in splatter_blobs(img.shape[:2], params, rng):
        _paint_disc(mask, cy, cx, r)
    out = img.copy()
    out[mask] = 0.0
    return out


def _paint_segment(mask, y0, x0, y1, x1, step=1.0):
    n = max(2, int(np.hypot(y1 - y0, x1 - x0) / step) + 1)
    t = np.linspace(0.0, 1.0, n)
    ys = np.clip(np.round(y0 + (y1 - y0) * t).astype(int), 0, mask.shape[0] - 1)
    xs = np.clip(np.round(x0 + (x1 - x0) * t).astype(int), 0, mask.shape[1] - 1)
    mask[ys, xs] = True


def dotted_lines(img, params, rng):
    h, w = img.shape[:2]
    mask = np.zeros((h, w), dtype=bool)
    for _ in range(int(params["count"])):
        y0, y1 = rng.integers(0, h, size=2)
        x0, x1 = rng.integers(0, w, size=2)
        length = np.hypot(y1 - y0, x1 - x0)
        n = max(2, int(length / 6) + 1)  # one dot every ~6 px
        t = np.linspace(0.0, 1.0, n)
        ys = np.clip(np.round(y0 + (y1 - y0) * t).astype(int), 0, h - 2)
        xs = np.clip(np.round(x0 + (x1 - x0) * t).astype(int), 0, w - 2)
        for oy in (0, 1):
            for ox in (0, 1):
                mask[ys + oy, xs + ox] = True
    out = img.copy()
    out[mask] = 0.0
    return out


def zigzag(img, params, rng):
    h, w = img.shape[:2]
    mask = np.zeros((h, w), dtype=bool)
    for _ in range(int(params["count"])):
        y = float(rng.integers(0, h))
        x = float(rng.integers(0, w // 4))
        heading = rng.uniform(-0.4, 0.4)
        amp = rng.uniform(5.0, 12.0)
        period = rng.uniform(10.0, 18.0)
        sign = 1.0
        while x < w - 1:
            nx = x + period * np.cos(heading)
            ny = y + period * np.sin(heading) + sign * amp
            _paint_segment(mask, y, x, ny, nx)
            x, y = nx, ny
            sign = -sign
            if not (0 <= y < h):
                break
    out = img.copy()
    out[mask] = 0.0
    return out


def canny_edges(img, t_low, t_high):
    """Sobel gradients, non-maximum suppression, double threshold with one
    8-connected promotion pass. Thresholds act on the max-normalized magnitude."""
    g = luma(img)
    gx = convolve2d(g, SOBEL_X)
    gy = convolve2d(g, SOBEL_Y)
    mag = np.hypot(gx, gy)
    peak = mag.max()
    if peak == 0:
        return np.zeros(g.shape, dtype=bool)
    mag /= peak

    angle = np.mod(np.arctan2(gy, gx), np.pi)
    sector = np.floor((angle + np.pi / 8) / (np.pi / 4)).astype(int) % 4
    offsets = {0: (0, 1), 1: (1, 1), 2: (1, 0), 3: (1, -1)}
    nms = np.zeros_like(mag)
    for s, (dy, dx) in offsets.items():
        n1 = np.roll(mag, (-dy, -dx), axis=(0, 1))
        n2 = np.roll(mag, (dy, dx), axis=(0, 1))
        keep = (sector == s) & (mag >= n1) & (mag >= n2)
        nms[keep] = mag[keep]
    nms[0, :] = nms[-1, :] = 0
    nms[:, 0] = nms[:, -1] = 0

    strong = nms >= t_high
    weak = nms >= t_low
    promoted = weak & ndimage.binary_dilation(strong, np.ones((3, 3), bool))
    return strong | promoted


def canny_overlay(img, params, rng):
    edges = canny_edges(img, params["t_low"], params["t_high"])
    out = img.copy()
    out[edges] = 1.0
    return out


def cutout_rects(shape_hw, params, rng):
    """Seeded rectangle list replay: (y0, x0, y1, x1) per rectangle."""
    h, w = shape_hw
    rects = []
    for _ in range(int(params["count"])):
        frac = rng.uniform(params["area_lo"], params["area_hi"])
        aspect = rng.uniform(0.5, 2.0)
        rh = int(round(np.sqrt(frac * h * w / aspect)))
        rw = int(round(np.sqrt(frac * h * w * aspect)))
        rh = int(np.clip(rh, 1, h))
        rw = int(np.clip(rw, 1, w))
        y0 = int(rng.integers(0, h - rh + 1))
        x0 = int(rng.integers(0, w - rw + 1))
        rects.append((y0, x0, y0 + rh, x0 + rw))
    return rects


def cutout(img, params, rng):
    out = img.copy()
    for y0, x0, y1, x1 in cutout_rects(img.shape[:2], params, rng):
        out[y0:y1, x0:x1] = 0.0
    return out
