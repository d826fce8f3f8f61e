"""Weather perturbations (category C)."""

from __future__ import annotations

import numpy as np
from numba import njit

from ..image_ops import line_kernel, convolve2d

FOG_GREY = 0.85


@njit(cache=True)
def _swap_pass(img, dy, dx):
    # Sequential pixel swaps in raster order: a permutation of the pixels.
    h, w = img.shape[0], img.shape[1]
    for y in range(h):
        for x in range(w):
            ny = y + dy[y, x]
            nx = x + dx[y, x]
            if ny < 0:
                ny = 0
            elif ny >= h:
                ny = h - 1
            if nx < 0:
                nx = 0
            elif nx >= w:
                nx = w - 1
            for c in range(3):
                tmp = img[y, x, c]
                img[y, x, c] = img[ny, nx, c]
                img[ny, nx, c] = tmp


def frosted_glass(img, params, rng):
    r = int(params["radius"])
    passes = int(params["passes"])
    out = np.ascontiguousarray(img.copy())
    h, w = img.shape[:2]
    for _ in range(passes):
        dy = rng.integers(-r, r + 1, size=(h, w)).astype(np.int64)
        dx = rng.integers(-r, r + 1, size=(h, w)).astype(np.int64)
        _swap_pass(out, dy, dx)
    return out


def _paint_dots(plane, ys, xs, radii, value):
    h, w = plane.shape
    for r in (1, 2, 3):
        sel = radii == r
        if not sel.any():
            continue
        off = np.arange(-r + 1, r)
        oy, ox = np.meshgrid(off, off, indexing="ij")
        keep = oy * oy + ox * ox <= (r - 1) ** 2 + 1
        oy, ox = oy[keep], ox[keep]
        py = np.clip(ys[sel][:, None] + oy[None, :], 0, h - 1)
        px = np.clip(xs[sel][:, None] + ox[None, :], 0, w - 1)
        plane[py.ravel(), px.ravel()] = value


def snow(img, params, rng):
    n = int(params["dots"])
    h, w = img.shape[:2]
    ys = rng.integers(0, h, size=n)
    xs = rng.integers(0, w, size=n)
    radii = rng.integers(1, 4, size=n)

    dots = np.zeros((h, w), dtype=np.float64)
    _paint_dots(dots, ys, xs, radii, 1.0)

    # Streak layer: the same crystals smeared along a near-vertical line.
    streak_len = int(params["streak_len"])
    angle = np.pi / 2 + rng.uniform(-0.4, 0.4)
    streak = convolve2d(dots, line_kernel(streak_len, angle))
    streak = np.clip(streak * streak_len * 0.7, 0.0, 1.0)

    overlay = np.maximum(dots, streak)
    return np.maximum(img, overlay[:, :, None])


def fog(img, params, rng):
    f = params["f"]
    if f == 0:
        return img
    blended = (1.0 - f) * img + f * FOG_GREY
    # Desaturate by f/2 without an HSV round trip: scaling HSV saturation by
    # k at fixed value V=max is exactly c' = V - k*(V - c) per channel.
    v = blended.max(axis=2, keepdims=True)
    return v - (1.0 - f / 2.0) * (v - blended)


def brightness(img, params, rng):
    return np.clip(img + params["b"], 0.0, 1.0)


def contrast(img, params, rng):
    c = params["c"]
    if c == 1:
        return img
    return np.clip((img - 0.5) * c + 0.5, 0.0, 1.0)
