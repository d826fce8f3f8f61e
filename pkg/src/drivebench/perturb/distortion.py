"""Distortion perturbations (category D)."""

from __future__ import annotations

import cv2
import numpy as np

from ..image_ops import convolve2d, gaussian_kernel, identity_kernel


def elastic_field(shape_hw, alpha, smooth_sigma, rng):
    """Seeded displacement field: smoothed unit-uniform noise at amplitude alpha."""
    h, w = shape_hw
    dyx = []
    for _ in range(2):
        n = rng.uniform(-1.0, 1.0, size=(h, w))
        s = cv2.GaussianBlur(n, (0, 0), smooth_sigma,
                             borderType=cv2.BORDER_REFLECT)
        peak = np.abs(s).max()
        dyx.append(s / peak * alpha if peak > 0 else s)
    return dyx[0], dyx[1]


def elastic(img, params, rng):
    alpha = params["alpha"]
    dy, dx = elastic_field(img.shape[:2], alpha, params["smooth_sigma"], rng)
    h, w = img.shape[:2]
    yy, xx = np.meshgrid(np.arange(h, dtype=np.float32),
                         np.arange(w, dtype=np.float32), indexing="ij")
    map_x = (xx + dx).astype(np.float32)
    map_y = (yy + dy).astype(np.float32)
    # bilinear sampling with edge clamping, matching map_coordinates
    # order=1 / mode="nearest" semantics
    return cv2.remap(img, map_x, map_y, cv2.INTER_LINEAR,
                     borderMode=cv2.BORDER_REPLICATE)


def pixelate(img, params, rng):
    b = int(params["block"])
    if b == 1:
        return img
    h, w = img.shape[:2]
    ys = np.arange(0, h, b)
    xs = np.arange(0, w, b)
    sums = np.add.reduceat(np.add.reduceat(img, ys, axis=0), xs, axis=1)
    ylen = np.minimum(ys + b, h) - ys
    xlen = np.minimum(xs + b, w) - xs
    means = sums / (ylen[:, None, None] * xlen[None, :, None])
    return np.repeat(np.repeat(means, ylen, axis=0), xlen, axis=1)


def sample_pairing(img, params, rng):
    a = params["alpha"]
    if a == 0:
        return img
    h, w = img.shape[:2]
    rh, rw = h // 2, w // 2  # each region covers 25% of the image area
    y1, y2 = rng.integers(0, h - rh + 1, size=2)
    x1, x2 = rng.integers(0, w - rw + 1, size=2)
    src = img[y1:y1 + rh, x1:x1 + rw].copy()
    out = img.copy()
    out[y2:y2 + rh, x2:x2 + rw] = (1.0 - a) * out[y2:y2 + rh, x2:x2 + rw] + a * src
    return out


def sharpen(img, params, rng):
    e = params["e"]
    g = gaussian_kernel(1.0, truncate=3.0)
    ident = identity_kernel(g.shape[0])
    kernel = ident + e * (ident - g)
    return np.clip(convolve2d(img, kernel), 0.0, 1.0)
