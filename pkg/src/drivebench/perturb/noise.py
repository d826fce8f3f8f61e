"""Noise perturbations (category A)."""

from __future__ import annotations

import numpy as np

from . import jpeg


def gaussian_noise(img, params, rng):
    sigma = params["sigma"]
    if sigma == 0:
        return img
    return img + sigma * rng.standard_normal(size=img.shape, dtype=np.float32)


def poisson_noise(img, params, rng):
    lam = params["lam"]
    return rng.poisson(img * lam) / lam


def impulse_pixel_mask(shape_hw, p, rng):
    """Seeded selection replay: which pixels the impulse hits, and their polarity."""
    hit = rng.random(shape_hw) < p
    bright = rng.random(shape_hw) < 0.5
    return hit, bright


def impulse_noise(img, params, rng):
    hit, bright = impulse_pixel_mask(img.shape[:2], params["p"], rng)
    out = img.copy()
    out[hit & bright] = 1.0
    out[hit & ~bright] = 0.0
    return out


def speckle_noise(img, params, rng):
    noise = rng.standard_normal(size=img.shape, dtype=np.float32)
    return img * (1.0 + params["sigma"] * noise)


def jpeg_artifact(img, params, rng):
    # Deterministic; the seed is ignored.
    return jpeg.roundtrip(img, int(params["quality"]))
