"""Baseline-JPEG blocking artifacts via an explicit DCT quantization round
trip: 4:2:0 subsampled YCbCr, 8x8 block DCT, quality-scaled standard tables.
No entropy coding, so the result is bit-deterministic and encoder-independent.
"""

from __future__ import annotations

import numpy as np
from scipy.fft import dctn, idctn

# Standard baseline luminance / chrominance quantization tables.
LUMA_Q = np.array([
    [16, 11, 10, 16, 24, 40, 51, 61],
    [12, 12, 14, 19, 26, 58, 60, 55],
    [14, 13, 16, 24, 40, 57, 69, 56],
    [14, 17, 22, 29, 51, 87, 80, 62],
    [18, 22, 37, 56, 68, 109, 103, 77],
    [24, 35, 55, 64, 81, 104, 113, 92],
    [49, 64, 78, 87, 103, 121, 120, 101],
    [72, 92, 95, 98, 112, 100, 103, 99],
], dtype=np.float64)

CHROMA_Q = np.array([
    [17, 18, 24, 47, 99, 99, 99, 99],
    [18, 21, 26, 66, 99, 99, 99, 99],
    [24, 26, 56, 99, 99, 99, 99, 99],
    [47, 66, 99, 99, 99, 99, 99, 99],
    [99, 99, 99, 99, 99, 99, 99, 99],
    [99, 99, 99, 99, 99, 99, 99, 99],
    [99, 99, 99, 99, 99, 99, 99, 99],
    [99, 99, 99, 99, 99, 99, 99, 99],
], dtype=np.float64)


def scaled_table(base: np.ndarray, quality: int) -> np.ndarray:
    """libjpeg-style quality scaling, clamped to [1, 255]."""
    quality = int(np.clip(quality, 1, 100))
    scale = 5000 / quality if quality < 50 else 200 - 2 * quality
    return np.clip(np.floor((base * scale + 50) / 100), 1, 255)


def _pad_to(plane: np.ndarray, mult: int) -> np.ndarray:
    h, w = plane.shape
    ph = (-h) % mult
    pw = (-w) % mult
    if ph or pw:
        plane = np.pad(plane, ((0, ph), (0, pw)), mode="edge")
    return plane


def _blockwise_roundtrip(plane: np.ndarray, qtable: np.ndarray) -> np.ndarray:
    h, w = plane.shape
    p = _pad_to(plane, 8)
    hb, wb = p.shape[0] // 8, p.shape[1] // 8
    # single precision throughout: quantization steps are >= 1, so float32
    # round-off (~1e-4 at this scale) cannot move a coefficient across a bin
    blocks = (p.reshape(hb, 8, wb, 8).transpose(0, 2, 1, 3)
              .astype(np.float32) - np.float32(128.0))
    coeff = dctn(blocks, axes=(2, 3), norm="ortho")
    coeff = np.round(coeff / qtable.astype(np.float32)) * qtable.astype(np.float32)
    rec = idctn(coeff, axes=(2, 3), norm="ortho") + np.float32(128.0)
    return rec.transpose(0, 2, 1, 3).reshape(p.shape)[:h, :w].astype(np.float64)


def roundtrip(img: np.ndarray, quality: int) -> np.ndarray:
    """DCT quantize/dequantize a float RGB image at the given quality."""
    x = img * 255.0
    r, g, b = x[..., 0], x[..., 1], x[..., 2]
    y = 0.299 * r + 0.587 * g + 0.114 * b
    cb = 128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b
    cr = 128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b

    h, w = y.shape
    # 4:2:0 chroma: 2x2 box average, processed at half resolution.
    cbp = _pad_to(cb, 2)
    crp = _pad_to(cr, 2)
    cb2 = cbp.reshape(cbp.shape[0] // 2, 2, cbp.shape[1] // 2, 2).mean(axis=(1, 3))
    cr2 = crp.reshape(crp.shape[0] // 2, 2, crp.shape[1] // 2, 2).mean(axis=(1, 3))

    lq = scaled_table(LUMA_Q, quality)
    cq = scaled_table(CHROMA_Q, quality)
    y = _blockwise_roundtrip(y, lq)
    cb2 = _blockwise_roundtrip(cb2, cq)
    cr2 = _blockwise_roundtrip(cr2, cq)

    cb = np.repeat(np.repeat(cb2, 2, axis=0), 2, axis=1)[:h, :w]
    cr = np.repeat(np.repeat(cr2, 2, axis=0), 2, axis=1)[:h, :w]

    cb -= 128.0
    cr -= 128.0
    out = np.stack([
        y + 1.402 * cr,
        y - 0.344136 * cb - 0.714136 * cr,
        y + 1.772 * cb,
    ], axis=-1)
    return np.clip(out / 255.0, 0.0, 1.0)
