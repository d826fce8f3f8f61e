"""Color and tone perturbations (category G)."""

from __future__ import annotations

import numpy as np
from numba import njit

from ..image_ops import luma


def false_color(img, params, rng):
    # Transforms ordered by increasing visual severity.
    t = params["transform"]
    r, g, b = img[..., 0], img[..., 1], img[..., 2]
    if t == "swap_bgr":
        return img[..., ::-1].copy()
    if t == "swap_grb":
        return np.stack([g, r, b], axis=-1)
    if t == "invert_red":
        return np.stack([1.0 - r, g, b], axis=-1)
    if t == "average_pairs":
        return np.stack([(g + b) / 2, (r + b) / 2, (r + g) / 2], axis=-1)
    if t == "invert_all":
        return 1.0 - img
    raise ValueError(f"unknown false_color transform {t!r}")


def phase_scramble(img, params, rng):
    w = params["w"]
    if w == 0:
        return img
    # Random phase taken from the spectrum of white noise, so Hermitian
    # symmetry (and thus a real inverse) holds by construction. The half
    # spectrum keeps this inside the per-frame latency budget.
    h, w_px = img.shape[:2]
    noise = rng.standard_normal((h, w_px))
    noise_phase = np.angle(np.fft.rfft2(noise))
    # Self-conjugate bins (DC/Nyquist corners) must stay real; scrambling
    # them would leak energy into the imaginary part and shrink their
    # magnitude under the real inverse transform.
    pin_rows = [0] + ([h // 2] if h % 2 == 0 else [])
    pin_cols = [0] + ([-1] if w_px % 2 == 0 else [])
    out = np.empty_like(img)
    for c in range(3):
        spec = np.fft.rfft2(img[..., c])
        mixed = (1.0 - w) * np.angle(spec) + w * noise_phase
        for r in pin_rows:
            for col in pin_cols:
                mixed[r, col] = np.angle(spec[r, col])
        plane = np.fft.irfft2(np.abs(spec) * np.exp(1j * mixed), s=(h, w_px))
        out[..., c] = plane
    # No clamp here: out-of-range samples are clamped by the single
    # end-of-pipeline quantization, keeping the magnitude spectrum intact
    # in the float domain.
    return out


def hist_eq(img, params, rng):
    h = params["h"]
    if h == 0:
        return img
    out = np.empty_like(img)
    n = img.shape[0] * img.shape[1]
    for c in range(3):
        q = np.minimum((img[..., c] * 255).astype(int), 255)
        hist = np.bincount(q.ravel(), minlength=256)
        cdf = np.cumsum(hist)
        cdf_min = cdf[np.nonzero(hist)[0][0]] if hist.any() else 0
        denom = max(1, n - cdf_min)
        remap = (cdf - cdf_min) / denom
        out[..., c] = (1.0 - h) * img[..., c] + h * remap[q]
    return np.clip(out, 0.0, 1.0)


def white_balance(img, params, rng):
    w = params["w"]
    if w == 0:
        return img
    y = luma(img)
    k = max(1, int(0.05 * y.size))
    idx = np.argpartition(y.ravel(), -k)[-k:]  # top-5% brightest pixels
    flat = img.reshape(-1, 3)
    means = flat[idx].mean(axis=0)
    target = means.mean()
    gains = np.where(means > 1e-6, target / np.maximum(means, 1e-6), 1.0)
    gains = 1.0 + w * (gains - 1.0)
    return np.clip(img * gains, 0.0, 1.0)


def greyscale(img, params, rng):
    g = params["g"]
    if g == 0:
        return img
    y = luma(img)[..., None]
    return (1.0 - g) * img + g * y


@njit(cache=True)
def _sat_kernel(img, s, out):
    h, w = img.shape[:2]
    for y in range(h):
        for x in range(w):
            r = img[y, x, 0]
            g = img[y, x, 1]
            b = img[y, x, 2]
            v = max(r, g, b)
            dr, dg, db = v - r, v - g, v - b
            dmax = max(dr, dg, db)
            t = s
            if dmax > 0.0 and s * dmax > v:
                t = v / dmax
            out[y, x, 0] = v - t * dr
            out[y, x, 1] = v - t * dg
            out[y, x, 2] = v - t * db


def _saturation(img, s):
    if s == 1:
        return img
    # Scaling HSV saturation by s at fixed hue and value V=max is exactly
    # c' = V - t*(V - c) with t = s capped at V/(V-min) (the cap is where
    # saturation saturates at 1); avoids a full HSV round trip.
    out = np.empty_like(img)
    _sat_kernel(np.ascontiguousarray(img), float(s), out)
    return out


def saturation_increase(img, params, rng):
    return _saturation(img, params["s"])


def saturation_decrease(img, params, rng):
    return _saturation(img, params["s"])


def posterize(img, params, rng):
    bits = int(params["bits"])
    if bits >= 8:
        return img
    q = np.minimum((img * 255).astype(int), 255)
    mask = 0xFF & ~((1 << (8 - bits)) - 1)
    return (q & mask) / 255.0
