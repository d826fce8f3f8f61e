"""Affine perturbations (category E): the two kinds that survive validity
filtering. Shear, rotate, and reflection are not constructible."""

from __future__ import annotations

import numpy as np

from ..image_ops import warp_affine

DIRECTIONS = ("left", "right", "up", "down")


def scale(img, params, rng):
    return warp_affine(img, scale=params["z"])


def translate_shift(shape_hw, shift_frac, rng):
    """Seeded direction pick; returns integer (dx, dy) in pixels."""
    h, w = shape_hw
    direction = DIRECTIONS[int(rng.integers(0, 4))]
    if direction == "left":
        return -int(round(shift_frac * w)), 0
    if direction == "right":
        return int(round(shift_frac * w)), 0
    if direction == "up":
        return 0, -int(round(shift_frac * h))
    return 0, int(round(shift_frac * h))


def translate(img, params, rng):
    dx, dy = translate_shift(img.shape[:2], params["shift_frac"], rng)
    if dx == 0 and dy == 0:
        return img
    return warp_affine(img, dx=dx, dy=dy)
