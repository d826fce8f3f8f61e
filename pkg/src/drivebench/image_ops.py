"""Raster primitives shared by the perturbation catalog.

Images are numpy arrays:

- uint8 image:  shape (H, W, 3), values 0..255
- float image:  shape (H, W, 3), float64, values nominally 0..1

All perturbation math runs on float images; quantization back to uint8
(round-half-up, clamped) happens exactly once per perturbation.
"""

from __future__ import annotations

import numpy as np
import cv2
from numba import njit as _njit
from PIL import Image as _PILImage

MIN_SIDE = 8


def validate_image(img: np.ndarray) -> np.ndarray:
    """Check an (H, W, 3) uint8 raster and return it unchanged."""
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) image, got shape {img.shape}")
    if img.dtype != np.uint8:
        raise ValueError(f"expected uint8 image, got {img.dtype}")
    if img.shape[0] < MIN_SIDE or img.shape[1] < MIN_SIDE:
        raise ValueError(f"image sides must be >= {MIN_SIDE}, got {img.shape[:2]}")
    return img


def to_float(img: np.ndarray) -> np.ndarray:
    """uint8 [0,255] -> float64 [0,1]."""
    return validate_image(img).astype(np.float64) / 255.0


@_njit(cache=True)
def _quantize_flat(flat: np.ndarray, out: np.ndarray) -> None:
    for i in range(flat.size):
        v = flat[i] * 255.0 + 0.5
        if v <= 0.0:
            out[i] = 0
        elif v >= 255.0:
            out[i] = 255
        else:
            out[i] = np.uint8(v)   # truncation == floor for v >= 0


def to_uint8(img: np.ndarray) -> np.ndarray:
    """float [0,1] -> uint8, round-half-up, clamped to [0,255]."""
    arr = np.ascontiguousarray(img, dtype=np.float64)
    out = np.empty(arr.shape, dtype=np.uint8)
    _quantize_flat(arr.reshape(-1), out.reshape(-1))
    return out


# ---------------------------------------------------------------------------
# kernels & convolution
# ---------------------------------------------------------------------------

def identity_kernel(size: int) -> np.ndarray:
    if size % 2 == 0 or size < 1:
        raise ValueError(f"kernel size must be odd and >= 1, got {size}")
    k = np.zeros((size, size), dtype=np.float64)
    k[size // 2, size // 2] = 1.0
    return k


def box_kernel(size: int) -> np.ndarray:
    if size % 2 == 0 or size < 1:
        raise ValueError(f"kernel size must be odd and >= 1, got {size}")
    return np.full((size, size), 1.0 / (size * size), dtype=np.float64)


def gaussian_kernel(sigma: float, truncate: float = 3.0) -> np.ndarray:
    """Normalized 2-D Gaussian, truncated at `truncate` sigmas (odd size)."""
    if sigma <= 0:
        return identity_kernel(1)
    radius = max(1, int(np.ceil(truncate * sigma)))
    ax = np.arange(-radius, radius + 1, dtype=np.float64)
    g1 = np.exp(-0.5 * (ax / sigma) ** 2)
    k = np.outer(g1, g1)
    return k / k.sum()


def disc_kernel(radius: float) -> np.ndarray:
    """Normalized disc (circular aperture) kernel."""
    if radius <= 0:
        return identity_kernel(1)
    r = int(np.ceil(radius))
    ax = np.arange(-r, r + 1, dtype=np.float64)
    yy, xx = np.meshgrid(ax, ax, indexing="ij")
    k = (yy * yy + xx * xx <= radius * radius).astype(np.float64)
    return k / k.sum()


def line_kernel(length: int, angle_rad: float) -> np.ndarray:
    """Normalized straight-line (motion) kernel of the given pixel length."""
    length = max(1, int(length))
    size = length if length % 2 == 1 else length + 1
    k = np.zeros((size, size), dtype=np.float64)
    c = size // 2
    dx, dy = np.cos(angle_rad), np.sin(angle_rad)
    for t in np.linspace(-(length - 1) / 2.0, (length - 1) / 2.0, 2 * length + 1):
        x = int(round(c + t * dx))
        y = int(round(c + t * dy))
        k[y, x] = 1.0
    return k / k.sum()


def convolve2d(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """2-D convolution per channel with clamp-to-edge borders.

    Odd kernels only; the kernel must fit inside the image.
    """
    img = np.asarray(img, dtype=np.float64)
    kernel = np.asarray(kernel, dtype=np.float64)
    kh, kw = kernel.shape
    if kh % 2 == 0 or kw % 2 == 0:
        raise ValueError(f"kernel sides must be odd, got {kernel.shape}")
    if kh > img.shape[0] or kw > img.shape[1]:
        raise ValueError(
            f"kernel {kernel.shape} larger than image {img.shape[:2]}"
        )
    # filter2D performs correlation; flip to get convolution semantics.
    flipped = kernel[::-1, ::-1].copy()
    return cv2.filter2D(img, -1, flipped, borderType=cv2.BORDER_REPLICATE)


# ---------------------------------------------------------------------------
# color spaces
# ---------------------------------------------------------------------------

def rgb_to_hsv(img: np.ndarray) -> np.ndarray:
    """RGB [0,1] -> HSV with H in [0,1). Achromatic pixels get H=0.

    Out-of-range inputs are clamped, not rejected.
    """
    rgb = np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    v = rgb.max(axis=-1)
    c = v - rgb.min(axis=-1)
    s = np.where(v > 0, c / np.where(v > 0, v, 1.0), 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        safe_c = np.where(c > 0, c, 1.0)
        h = np.select(
            [c == 0, v == r, v == g],
            [0.0,
             ((g - b) / safe_c) % 6.0,
             (b - r) / safe_c + 2.0],
            default=(r - g) / safe_c + 4.0,
        ) / 6.0
    h = h % 1.0
    return np.stack([h, s, v], axis=-1)


def hsv_to_rgb(img: np.ndarray) -> np.ndarray:
    hsv = np.asarray(img, dtype=np.float64)
    h = (hsv[..., 0] % 1.0) * 6.0
    s = np.clip(hsv[..., 1], 0.0, 1.0)
    v = np.clip(hsv[..., 2], 0.0, 1.0)
    i = np.floor(h).astype(int) % 6
    f = h - np.floor(h)
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    r = np.choose(i, [v, q, p, p, t, v])
    g = np.choose(i, [t, v, v, q, p, p])
    b = np.choose(i, [p, p, t, v, v, q])
    return np.stack([r, g, b], axis=-1)


def luma(img: np.ndarray) -> np.ndarray:
    """BT.601 luma of a float RGB image."""
    img = np.asarray(img, dtype=np.float64)
    return 0.299 * img[..., 0] + 0.587 * img[..., 1] + 0.114 * img[..., 2]


# ---------------------------------------------------------------------------
# FFT (unnormalized-forward convention; DC bin equals the sample sum)
# ---------------------------------------------------------------------------

def fft2(plane: np.ndarray) -> np.ndarray:
    return np.fft.fft2(np.asarray(plane, dtype=np.float64))


def ifft2(spectrum: np.ndarray) -> np.ndarray:
    return np.fft.ifft2(np.asarray(spectrum, dtype=np.complex128))


# ---------------------------------------------------------------------------
# geometric warps
# ---------------------------------------------------------------------------

def warp_affine(img: np.ndarray, scale: float = 1.0,
                dx: float = 0.0, dy: float = 0.0) -> np.ndarray:
    """Center-scale then translate, bilinear sampling, black fill.

    Output pixel (x, y) samples the source at
    ``center + (p - center)/scale - (dx, dy)``; output size is unchanged.
    """
    if scale <= 0:
        raise ValueError(f"scale must be > 0, got {scale}")
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape[:2]
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    # forward map inverting src = center + (dst - center)/scale - (dx, dy)
    mat = np.array([[scale, 0.0, cx * (1.0 - scale) + scale * dx],
                    [0.0, scale, cy * (1.0 - scale) + scale * dy]])
    return cv2.warpAffine(img, mat, (w, h), flags=cv2.INTER_LINEAR)


# ---------------------------------------------------------------------------
# PNG / JPEG file I/O
# ---------------------------------------------------------------------------

def load_png(path) -> np.ndarray:
    with _PILImage.open(path) as im:
        return validate_image(np.asarray(im.convert("RGB")))


def save_png(path, img: np.ndarray) -> None:
    _PILImage.fromarray(validate_image(img), mode="RGB").save(path, format="PNG")


def load_gray(path) -> np.ndarray:
    """Single-channel uint8 raster (segmentation class maps)."""
    with _PILImage.open(path) as im:
        return np.asarray(im.convert("L"))


def save_gray(path, plane: np.ndarray) -> None:
    _PILImage.fromarray(np.asarray(plane, dtype=np.uint8), mode="L").save(
        path, format="PNG")
