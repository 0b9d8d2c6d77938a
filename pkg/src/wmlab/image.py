"""Image containers, PNG/PPM I/O, and full-reference quality metrics.

Images are kept in channels-last numpy arrays.  Two containers exist:
``ImageU8`` for 8-bit storage (what codecs and files see) and ``ImageF``
for float work in [0, 1].  Conversions between the two are the only
sanctioned quantization points in the package, so every rounding rule
lives here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image as _PILImage

__all__ = [
    "ImageU8",
    "ImageF",
    "QualityReport",
    "load_image",
    "save_image",
    "to_float",
    "to_u8",
    "quantize_u8",
    "psnr",
    "ssim",
    "quantile_diff",
    "quality_report",
    "luma601",
]

_PEAK = 255.0
_SSIM_WIN = 8
_SSIM_C1 = (0.01 * _PEAK) ** 2
_SSIM_C2 = (0.03 * _PEAK) ** 2


@dataclass(frozen=True)
class ImageU8:
    """8-bit image, shape (height, width, channels), channels in {1, 3}."""

    data: np.ndarray

    def __post_init__(self):
        arr = self.data
        if not isinstance(arr, np.ndarray) or arr.dtype != np.uint8:
            raise ValueError("ImageU8 requires a uint8 numpy array")
        if arr.ndim != 3 or arr.shape[2] not in (1, 3):
            raise ValueError(
                f"expected (H, W, C) with C in {{1, 3}}, got shape {arr.shape}"
            )
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("empty image")

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    def copy(self) -> "ImageU8":
        return ImageU8(self.data.copy())


@dataclass(frozen=True)
class ImageF:
    """Float image in [0, 1], shape (height, width, channels)."""

    data: np.ndarray

    def __post_init__(self):
        arr = self.data
        if not isinstance(arr, np.ndarray) or arr.dtype != np.float64:
            raise ValueError("ImageF requires a float64 numpy array")
        if arr.ndim != 3 or arr.shape[2] not in (1, 3):
            raise ValueError(
                f"expected (H, W, C) with C in {{1, 3}}, got shape {arr.shape}"
            )

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class QualityReport:
    """Bundle of the three full-reference metrics used across the package."""

    psnr: float
    ssim: float
    quantile90: float


def to_float(img: ImageU8) -> ImageF:
    """Map u8 samples to [0, 1] by dividing by 255."""
    return ImageF(img.data.astype(np.float64) / _PEAK)


def quantize_u8(arr: np.ndarray) -> np.ndarray:
    """Quantize a float array on the 0..255 scale to uint8.

    Rounds half away from zero (so 0.5 -> 1, unlike numpy's banker's
    rounding), then clamps to [0, 255].  This is the single rounding
    rule shared by every path that produces storable pixels.
    """
    rounded = np.sign(arr) * np.floor(np.abs(arr) + 0.5)
    return np.clip(rounded, 0.0, 255.0).astype(np.uint8)


def to_u8(img: ImageF) -> ImageU8:
    """Quantize a [0, 1] float image to u8 (round half away from zero)."""
    return ImageU8(quantize_u8(img.data * _PEAK))


def luma601(data: np.ndarray) -> np.ndarray:
    """BT.601 luma of an (H, W, C) array on whatever scale it comes in.

    Coefficients are exactly 0.299, 0.587, 0.114 applied in float64.
    Single-channel input is returned as its own plane.
    """
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 3:
        raise ValueError("expected (H, W, C)")
    if arr.shape[2] == 1:
        return arr[:, :, 0].copy()
    return 0.299 * arr[:, :, 0] + 0.587 * arr[:, :, 1] + 0.114 * arr[:, :, 2]


# ---------------------------------------------------------------------------
# File I/O


def load_image(path) -> ImageU8:
    """Load an 8-bit RGB or grayscale image from a PNG or binary PPM/PGM file.

    Anything else (16-bit depths, palettes, alpha, other formats) is
    rejected with a ValueError so codec inputs are never silently coerced.
    """
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"no such image: {p}")
    with _PILImage.open(p) as im:
        fmt = (im.format or "").upper()
        if fmt not in ("PNG", "PPM"):
            raise ValueError(f"unsupported format {fmt or 'unknown'} for {p.name}; "
                             "expected PNG or binary PPM/PGM")
        if im.mode not in ("RGB", "L"):
            raise ValueError(f"unsupported mode {im.mode} for {p.name}; "
                             "expected 8-bit RGB or grayscale")
        arr = np.asarray(im, dtype=np.uint8)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    return ImageU8(arr)


def save_image(img: ImageU8, path) -> None:
    """Write a PNG (.png) or binary PPM/PGM (.ppm/.pgm) file."""
    p = Path(path)
    suffix = p.suffix.lower()
    arr = img.data
    if suffix == ".png":
        pil = _PILImage.fromarray(arr[:, :, 0] if img.channels == 1 else arr)
        pil.save(p, format="PNG")
    elif suffix in (".ppm", ".pgm"):
        if suffix == ".ppm" and img.channels != 3:
            raise ValueError("PPM (P6) holds RGB; use .pgm or .png for grayscale")
        if suffix == ".pgm" and img.channels != 1:
            raise ValueError("PGM (P5) holds grayscale; use .ppm or .png for RGB")
        pil = _PILImage.fromarray(arr[:, :, 0] if img.channels == 1 else arr)
        pil.save(p, format="PPM")
    else:
        raise ValueError(f"unsupported extension {suffix!r}; use .png, .ppm, or .pgm")


# ---------------------------------------------------------------------------
# Metrics


def _check_pair(a: ImageU8, b: ImageU8) -> None:
    if a.data.shape != b.data.shape:
        raise ValueError(f"shape mismatch: {a.data.shape} vs {b.data.shape}")


def psnr(a: ImageU8, b: ImageU8) -> float:
    """Peak signal-to-noise ratio in dB, peak 255.

    The MSE is taken jointly over every sample (all pixels, all
    channels).  Identical images return math.inf.
    """
    _check_pair(a, b)
    diff = a.data.astype(np.float64) - b.data.astype(np.float64)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(_PEAK * _PEAK / mse)


def _window_sums(plane: np.ndarray, win: int) -> np.ndarray:
    """Sum of every win x win window (stride 1, valid only) via cumsums."""
    c = np.cumsum(np.cumsum(plane, axis=0), axis=1)
    c = np.pad(c, ((1, 0), (1, 0)))
    return (c[win:, win:] - c[:-win, win:] - c[win:, :-win] + c[:-win, :-win])


def ssim(a: ImageU8, b: ImageU8) -> float:
    """Mean structural similarity with a uniform 8x8 window.

    Windows slide with stride 1 over valid positions; statistics use the
    population convention; stabilizers are C1=(0.01*255)^2 and
    C2=(0.03*255)^2.  Channels are scored independently and averaged.
    """
    _check_pair(a, b)
    win = _SSIM_WIN
    if a.height < win or a.width < win:
        raise ValueError(f"images must be at least {win}x{win} for ssim")
    n = float(win * win)
    scores = []
    for ch in range(a.channels):
        x = a.data[:, :, ch].astype(np.float64)
        y = b.data[:, :, ch].astype(np.float64)
        mx = _window_sums(x, win) / n
        my = _window_sums(y, win) / n
        vx = _window_sums(x * x, win) / n - mx * mx
        vy = _window_sums(y * y, win) / n - my * my
        cxy = _window_sums(x * y, win) / n - mx * my
        num = (2.0 * mx * my + _SSIM_C1) * (2.0 * cxy + _SSIM_C2)
        den = (mx * mx + my * my + _SSIM_C1) * (vx + vy + _SSIM_C2)
        scores.append(float(np.mean(num / den)))
    return float(np.mean(scores))


def quantile_diff(a: ImageU8, b: ImageU8, q: float) -> float:
    """Order statistic of the absolute sample differences.

    Returns the smallest difference value v such that strictly more than
    a fraction q of all |a - b| samples are <= v; equivalently, element
    floor(q*m) of the ascending sorted differences (clamped to the last
    element when q = 1).
    """
    _check_pair(a, b)
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"quantile must be in [0, 1], got {q}")
    diffs = np.abs(a.data.astype(np.int16) - b.data.astype(np.int16)).ravel()
    diffs.sort()
    idx = min(int(math.floor(q * diffs.size)), diffs.size - 1)
    return float(diffs[idx])


def quality_report(reference: ImageU8, candidate: ImageU8) -> QualityReport:
    """PSNR, SSIM and the 0.9 difference quantile of candidate vs reference."""
    return QualityReport(
        psnr=psnr(reference, candidate),
        ssim=ssim(reference, candidate),
        quantile90=quantile_diff(reference, candidate, 0.9),
    )
