"""Deterministic synthetic image corpus for benchmarks and tests.

Real benchmark photos cannot ship with the package, so experiments run
on a seeded family of "desk" images: a smooth illumination gradient
over power-law (roughly 1/f) textured noise, plus gentle color fields.
The power-law part matters — it fills every frequency bin with real
magnitude the way photographs do, so per-bin relative spectrum errors
stay meaningful.  Pure sums of cosines look similar in pixel space but
leave most bins empty and make relative errors blow up.  Values stay
inside [8%, 92%] of the dynamic range to avoid clamping artifacts when
codecs shift luma.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .image import ImageU8, load_image, quantize_u8, save_image

__all__ = ["generate_desk_image", "generate_desk_corpus", "write_corpus", "load_corpus"]

_LO, _HI = 0.08, 0.92


def _power_noise(rng, size, alpha, floor=0.0):
    """Unit-variance noise with amplitude spectrum (1+d)^-alpha + floor."""
    white = rng.standard_normal((size, size))
    spec = np.fft.fft2(white)
    idx = np.fft.fftfreq(size) * size
    d = np.sqrt(idx[:, None] ** 2 + idx[None, :] ** 2)
    field = np.real(np.fft.ifft2(spec * ((1.0 + d) ** -alpha + floor)))
    field -= field.mean()
    std = field.std()
    return field / std if std > 0 else field


def _gradient(rng, size):
    """One oblique cosine sweep, the 'desk lighting' of the scene."""
    yy, xx = np.mgrid[0:size, 0:size] / float(size)
    fx = int(rng.integers(-2, 3))
    fy = int(rng.integers(-2, 3))
    phase = rng.uniform(0, 2 * np.pi)
    return np.cos(2 * np.pi * (fx * xx + fy * yy) + phase)


def generate_desk_image(size: int = 64, seed=0) -> ImageU8:
    """One synthetic desk image; ``seed`` may be any SeedSequence entropy."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    lum = _gradient(rng, size) + _power_noise(rng, size, 2.9, floor=0.0008)
    c1 = 0.35 * _power_noise(rng, size, 2.2)
    c2 = 0.35 * _power_noise(rng, size, 2.2)
    r = lum + 0.30 * c1
    g = lum - 0.12 * c1 + 0.20 * c2
    b = lum - 0.25 * c2
    rgb = np.stack([r, g, b], axis=-1)
    span = rgb.max() - rgb.min()
    if span == 0:
        span = 1.0
    rgb = _LO + (_HI - _LO) * (rgb - rgb.min()) / span
    return ImageU8(quantize_u8(rgb * 255.0))


def generate_desk_corpus(count: int = 64, size: int = 64, seed: int = 0):
    """List of ``count`` images; image i depends only on (seed, i, size)."""
    return [generate_desk_image(size, seed=(seed, i)) for i in range(count)]


def write_corpus(images, directory) -> list:
    """Write images as zero-padded PNGs; returns the paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, img in enumerate(images):
        path = directory / f"desk_{i:03d}.png"
        save_image(img, path)
        paths.append(path)
    return paths


def load_corpus(directory):
    """Load every .png/.ppm in a directory, sorted by filename."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"corpus directory not found: {directory}")
    paths = sorted(p for p in directory.iterdir()
                   if p.suffix.lower() in (".png", ".ppm", ".pgm"))
    if not paths:
        raise FileNotFoundError(f"no images in {directory}")
    return [load_image(p) for p in paths]
