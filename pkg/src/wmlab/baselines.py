"""Classical image corruptions used as watermark-evasion baselines.

Five parametric attacks (brightness, contrast, additive Gaussian noise,
Gaussian blur, JPEG re-compression) plus the sweep machinery that
applies one attack over an exhaustive parameter grid.  Everything is
deterministic given (input, parameters, seed) and returns u8 images;
identity parameters (enhancement factor 1) return the input bit-exactly.

The JPEG here is a quantization round trip only: color transform,
optional 4:2:0 subsampling, blockwise DCT, quantize/dequantize with the
standard Annex-K tables under the usual libjpeg quality scaling, and
inverse.  Entropy coding is skipped because only the decoded pixels
matter for evasion, not the byte stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .image import ImageU8, luma601, quantize_u8
from .transforms import dct8x8, idct8x8

__all__ = [
    "SweepGrid",
    "DEFAULT_GRIDS",
    "adjust_brightness",
    "adjust_contrast",
    "add_gaussian_noise",
    "gaussian_blur",
    "jpeg_compress",
    "apply_method",
    "sweep",
]


# ---------------------------------------------------------------------------
# point attacks


def adjust_brightness(img: ImageU8, factor: float) -> ImageU8:
    """Scale all samples by ``factor`` in (0, 1]."""
    if not 0.0 < factor <= 1.0:
        raise ValueError(f"brightness factor must be in (0, 1], got {factor}")
    return ImageU8(quantize_u8(img.data.astype(np.float64) * factor))


def adjust_contrast(img: ImageU8, factor: float) -> ImageU8:
    """Blend all samples toward the image's mean luma.

    out = mean + factor * (in - mean), so factor 1 is the identity and
    factor -> 0 collapses the image onto its mean gray.
    """
    if not 0.0 < factor <= 1.0:
        raise ValueError(f"contrast factor must be in (0, 1], got {factor}")
    data = img.data.astype(np.float64)
    mean = float(luma601(data).mean())
    return ImageU8(quantize_u8(mean + factor * (data - mean)))


def add_gaussian_noise(img: ImageU8, sigma: float, seed: int = 0) -> ImageU8:
    """Add iid N(0, (sigma*255)^2) noise; sigma is a fraction of range."""
    if sigma <= 0.0:
        raise ValueError(f"noise sigma must be positive, got {sigma}")
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(img.data.shape) * (sigma * 255.0)
    return ImageU8(quantize_u8(img.data.astype(np.float64) + noise))


def _gauss_kernel(sigma: float) -> np.ndarray:
    reach = max(1, int(math.ceil(3.0 * sigma)))
    x = np.arange(-reach, reach + 1, dtype=np.float64)
    k = np.exp(-(x ** 2) / (2.0 * sigma * sigma))
    return k / k.sum()


def _blur_axis(plane: np.ndarray, kernel: np.ndarray, axis: int) -> np.ndarray:
    reach = len(kernel) // 2
    pad = [(0, 0), (0, 0)]
    pad[axis] = (reach, reach)
    padded = np.pad(plane, pad, mode="edge")
    out = np.zeros_like(plane)
    for d, wgt in enumerate(kernel):
        sl = [slice(None), slice(None)]
        sl[axis] = slice(d, d + plane.shape[axis])
        out += wgt * padded[tuple(sl)]
    return out


def gaussian_blur(img: ImageU8, radius: float) -> ImageU8:
    """Separable Gaussian smoothing, kernel truncated at 3 sigma,
    borders replicated."""
    if radius <= 0.0:
        raise ValueError(f"blur radius must be positive, got {radius}")
    kernel = _gauss_kernel(radius)
    out = np.empty_like(img.data, dtype=np.float64)
    for c in range(img.channels):
        plane = img.data[:, :, c].astype(np.float64)
        out[:, :, c] = _blur_axis(_blur_axis(plane, kernel, 0), kernel, 1)
    return ImageU8(quantize_u8(out))


# ---------------------------------------------------------------------------
# JPEG quantization round trip

# ITU T.81 Annex K reference quantization tables
_Q_LUMA = np.array([
    [16, 11, 10, 16, 24, 40, 51, 61],
    [12, 12, 14, 19, 26, 58, 60, 55],
    [14, 13, 16, 24, 40, 57, 69, 56],
    [14, 17, 22, 29, 51, 87, 80, 62],
    [18, 22, 37, 56, 68, 109, 103, 77],
    [24, 35, 55, 64, 81, 104, 113, 92],
    [49, 64, 78, 87, 103, 121, 120, 101],
    [72, 92, 95, 98, 112, 100, 103, 99],
], dtype=np.float64)

_Q_CHROMA = np.array([
    [17, 18, 24, 47, 99, 99, 99, 99],
    [18, 21, 26, 66, 99, 99, 99, 99],
    [24, 26, 56, 99, 99, 99, 99, 99],
    [47, 66, 99, 99, 99, 99, 99, 99],
    [99, 99, 99, 99, 99, 99, 99, 99],
    [99, 99, 99, 99, 99, 99, 99, 99],
    [99, 99, 99, 99, 99, 99, 99, 99],
    [99, 99, 99, 99, 99, 99, 99, 99],
], dtype=np.float64)


def _scaled_table(base: np.ndarray, quality: int) -> np.ndarray:
    # libjpeg quality mapping
    scale = 5000.0 / quality if quality < 50 else 200.0 - 2.0 * quality
    return np.clip(np.floor((base * scale + 50.0) / 100.0), 1.0, 255.0)


def _quantize_plane(plane: np.ndarray, table: np.ndarray) -> np.ndarray:
    h, w = plane.shape
    out = np.empty_like(plane)
    for i in range(0, h, 8):
        for j in range(0, w, 8):
            coeffs = dct8x8(plane[i:i + 8, j:j + 8] - 128.0)
            coeffs = np.round(coeffs / table) * table
            out[i:i + 8, j:j + 8] = idct8x8(coeffs) + 128.0
    return out


def jpeg_compress(img: ImageU8, quality: int, subsample: bool = True) -> ImageU8:
    """Decoded result of baseline JPEG at the given quality (1..100).

    Dimensions that are not multiples of 16 are edge-padded for the
    transform and cropped back afterwards.
    """
    quality = int(quality)
    if not 1 <= quality <= 100:
        raise ValueError(f"jpeg quality must be in 1..100, got {quality}")
    h, w = img.height, img.width
    ph, pw = (-h) % 16, (-w) % 16
    data = np.pad(img.data.astype(np.float64), ((0, ph), (0, pw), (0, 0)),
                  mode="edge")
    qy = _scaled_table(_Q_LUMA, quality)
    qc = _scaled_table(_Q_CHROMA, quality)
    if img.channels == 1:
        y = _quantize_plane(data[:, :, 0], qy)
        out = y[:h, :w, None]
        return ImageU8(quantize_u8(out))
    r, g, b = data[:, :, 0], data[:, :, 1], data[:, :, 2]
    y = 0.299 * r + 0.587 * g + 0.114 * b
    cb = 128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b
    cr = 128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b
    y = _quantize_plane(y, qy)
    if subsample:
        # 4:2:0 - average each 2x2 cell, code at half resolution,
        # replicate back up
        planes = []
        for c in (cb, cr):
            half = 0.25 * (c[0::2, 0::2] + c[1::2, 0::2]
                           + c[0::2, 1::2] + c[1::2, 1::2])
            half = _quantize_plane(half, qc)
            planes.append(np.repeat(np.repeat(half, 2, axis=0), 2, axis=1))
        cb, cr = planes
    else:
        cb = _quantize_plane(cb, qc)
        cr = _quantize_plane(cr, qc)
    r = y + 1.402 * (cr - 128.0)
    g = y - 0.344136 * (cb - 128.0) - 0.714136 * (cr - 128.0)
    b = y + 1.772 * (cb - 128.0)
    out = np.stack([r, g, b], axis=2)[:h, :w]
    return ImageU8(quantize_u8(out))


# ---------------------------------------------------------------------------
# exhaustive sweeps


@dataclass(frozen=True)
class SweepGrid:
    """Inclusive parameter grid: lo, lo+step, ..., up to hi."""

    method: str
    parameter: str
    lo: float
    hi: float
    step: float

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"grid lo {self.lo} exceeds hi {self.hi}")
        if self.step <= 0:
            raise ValueError(f"grid step must be positive, got {self.step}")

    def points(self):
        # epsilon guards the count against float division artifacts
        # (e.g. 0.99/0.01 evaluating just below 99)
        n = int(math.floor((self.hi - self.lo) / self.step + 1e-9)) + 1
        return [self.lo + i * self.step for i in range(n)]


DEFAULT_GRIDS = {
    "brightness": SweepGrid("brightness", "factor", 0.01, 1.0, 0.01),
    "contrast": SweepGrid("contrast", "factor", 0.01, 1.0, 0.01),
    "gaussian-noise": SweepGrid("gaussian-noise", "sigma", 0.01, 1.0, 0.01),
    "gaussian-blur": SweepGrid("gaussian-blur", "sigma", 0.1, 2.0, 0.1),
    "jpeg": SweepGrid("jpeg", "quality", 1, 100, 1),
}


def apply_method(method: str, img: ImageU8, value: float,
                 seed: int = 0) -> ImageU8:
    """Run one attack at one parameter value."""
    if method == "brightness":
        return adjust_brightness(img, value)
    if method == "contrast":
        return adjust_contrast(img, value)
    if method == "gaussian-noise":
        return add_gaussian_noise(img, value, seed=seed)
    if method == "gaussian-blur":
        return gaussian_blur(img, value)
    if method == "jpeg":
        return jpeg_compress(img, int(round(value)))
    raise ValueError(f"unknown evasion method {method!r}")


def sweep(method: str, grid: SweepGrid, img: ImageU8, seed: int = 0):
    """Apply ``method`` at every grid point, in grid order.

    Returns a list of (parameter, image) pairs; the stochastic methods
    reuse the same seed at each point so the sweep is reproducible.
    """
    return [(value, apply_method(method, img, value, seed=seed))
            for value in grid.points()]
