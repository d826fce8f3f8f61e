"""Blur and focus perturbations (category B)."""

from __future__ import annotations

import numpy as np

from ..image_ops import (
    convolve2d,
    disc_kernel,
    gaussian_kernel,
    box_kernel,
    line_kernel,
    warp_affine,
)


def defocus_blur(img, params, rng):
    return convolve2d(img, disc_kernel(params["radius"]))


def motion_blur(img, params, rng):
    # Streak direction is seeded per frame; length sets the severity.
    angle = rng.uniform(0.0, np.pi)
    return convolve2d(img, line_kernel(int(params["length"]), angle))


def zoom_blur(img, params, rng):
    z = params["z"]
    m = int(params["copies"])
    acc = img.copy()
    for s in np.linspace(1.0, 1.0 + z, m)[1:]:
        acc += warp_affine(img, scale=s)
    return acc / m


def gaussian_blur(img, params, rng):
    sigma = params["sigma"]
    if sigma == 0:
        return img
    return convolve2d(img, gaussian_kernel(sigma, truncate=3.0))


def lowpass_filter(img, params, rng):
    k = int(params["k"])
    if k == 1:
        return img
    return convolve2d(img, box_kernel(k))
