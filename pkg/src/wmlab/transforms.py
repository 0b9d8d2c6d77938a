"""Frequency-domain toolkit: 2-D FFT, radial band partition, 8x8 DCT,
one-level Haar wavelet split, and a small-matrix SVD wrapper.

Conventions used throughout the package:

* ``fft2`` is the unnormalized forward transform (DC bin = sum of all
  samples); ``ifft2`` carries the 1/(H*W) factor, so ``ifft2(fft2(x))``
  is the identity.
* Radial bands split the spectrum into ``k`` equal-width annuli of
  normalized frequency radius.  Band 1 always contains DC, band ``k``
  the maximum-radius bin.  Membership is decided with exact integer
  arithmetic so boundary bins never flip with float rounding.
* The 8x8 DCT and the Haar split are orthonormal, so both preserve
  energy and a constant 2x2 patch of value ``c`` lands in the Haar LL
  plane as ``2c``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "fft2",
    "ifft2",
    "BandMap",
    "BandProfile",
    "radial_bands",
    "band_energy",
    "dct8x8",
    "idct8x8",
    "haar_dwt2",
    "haar_idwt2",
    "svd_block",
]


def fft2(plane: np.ndarray) -> np.ndarray:
    """Unnormalized forward 2-D DFT of a real (H, W) plane -> complex128."""
    arr = np.asarray(plane, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("fft2 expects a single (H, W) plane")
    return np.fft.fft2(arr)


def ifft2(spectrum: np.ndarray) -> np.ndarray:
    """Inverse 2-D DFT (carries the 1/(H*W) normalization) -> complex128."""
    arr = np.asarray(spectrum, dtype=np.complex128)
    if arr.ndim != 2:
        raise ValueError("ifft2 expects a single (H, W) spectrum")
    return np.fft.ifft2(arr)


def _signed_freqs(n: int) -> np.ndarray:
    """Signed integer frequency of each FFT bin index along one axis."""
    idx = np.arange(n)
    return np.where(idx <= (n - 1) // 2, idx, idx - n).astype(np.int64)


@dataclass(frozen=True)
class BandMap:
    """Assignment of every FFT bin of an (H, W) spectrum to a radial band.

    ``bands[i, j]`` is the 1-based band of bin (i, j).  Bands partition
    the spectrum; for very small grids an intermediate band can be empty
    (no lattice point falls inside its annulus), which is legal.
    """

    height: int
    width: int
    k: int
    bands: np.ndarray = field(repr=False)

    def mask(self, band: int) -> np.ndarray:
        """Boolean (H, W) mask of the bins belonging to ``band``."""
        if not 1 <= band <= self.k:
            raise ValueError(f"band must be in 1..{self.k}, got {band}")
        return self.bands == band

    def counts(self) -> tuple:
        """Number of bins in each band, bands 1..k."""
        return tuple(int(np.count_nonzero(self.bands == b))
                     for b in range(1, self.k + 1))


@dataclass(frozen=True)
class BandProfile:
    """Per-band spectrum energy, bands 1..k."""

    energies: tuple

    @property
    def k(self) -> int:
        return len(self.energies)


def radial_bands(height: int, width: int, k: int = 5) -> BandMap:
    """Partition the (height, width) FFT grid into k equal-width radial bands.

    A bin with signed frequency (u, v) has squared radius d2 = u^2 + v^2;
    with R2 the largest squared radius on the grid, the bin belongs to the
    smallest band b in 1..k with k^2 * d2 <= b^2 * R2.  DC (d2 = 0) is in
    band 1 and the maximum-radius bin in band k.  All comparisons are on
    integers, so membership is exact.
    """
    if height < 1 or width < 1:
        raise ValueError("grid dimensions must be positive")
    if k < 1:
        raise ValueError("need at least one band")
    fu = _signed_freqs(height)
    fv = _signed_freqs(width)
    d2 = fu[:, None] ** 2 + fv[None, :] ** 2
    r2max = int(d2.max())
    if r2max == 0:  # 1x1 grid: only DC
        return BandMap(height, width, k, np.ones((1, 1), dtype=np.int64))
    thresholds = np.array([b * b * r2max for b in range(1, k + 1)], dtype=np.int64)
    bands = np.searchsorted(thresholds, k * k * d2, side="left") + 1
    return BandMap(height, width, k, bands.astype(np.int64))


def band_energy(spectrum: np.ndarray, bandmap: BandMap) -> BandProfile:
    """Sum of |F|^2 over the bins of each band."""
    spec = np.asarray(spectrum)
    if spec.shape != (bandmap.height, bandmap.width):
        raise ValueError(
            f"spectrum shape {spec.shape} does not match band map "
            f"({bandmap.height}, {bandmap.width})")
    power = np.abs(spec) ** 2
    return BandProfile(tuple(float(power[bandmap.mask(b)].sum())
                             for b in range(1, bandmap.k + 1)))


# ---------------------------------------------------------------------------
# 8x8 orthonormal DCT-II


def _dct_matrix() -> np.ndarray:
    n = 8
    T = np.zeros((n, n))
    for u in range(n):
        scale = np.sqrt(1.0 / n) if u == 0 else np.sqrt(2.0 / n)
        for x in range(n):
            T[u, x] = scale * np.cos((2 * x + 1) * u * np.pi / (2 * n))
    return T


_DCT_T = _dct_matrix()


def dct8x8(block: np.ndarray) -> np.ndarray:
    """Orthonormal 2-D DCT-II of one 8x8 block."""
    arr = np.asarray(block, dtype=np.float64)
    if arr.shape != (8, 8):
        raise ValueError(f"dct8x8 expects an 8x8 block, got {arr.shape}")
    return _DCT_T @ arr @ _DCT_T.T


def idct8x8(coeffs: np.ndarray) -> np.ndarray:
    """Inverse of :func:`dct8x8`."""
    arr = np.asarray(coeffs, dtype=np.float64)
    if arr.shape != (8, 8):
        raise ValueError(f"idct8x8 expects an 8x8 block, got {arr.shape}")
    return _DCT_T.T @ arr @ _DCT_T


# ---------------------------------------------------------------------------
# one-level 2-D Haar split


def haar_dwt2(plane: np.ndarray):
    """One orthonormal Haar level: (H, W) -> (LL, LH, HL, HH), each (H/2, W/2).

    LH holds horizontal detail (differences along the width axis), HL
    vertical detail, HH diagonal.  Requires even dimensions.
    """
    arr = np.asarray(plane, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("haar_dwt2 expects a single (H, W) plane")
    h, w = arr.shape
    if h % 2 or w % 2:
        raise ValueError(f"dimensions must be even, got {arr.shape}")
    a = arr[0::2, 0::2]
    b = arr[0::2, 1::2]
    c = arr[1::2, 0::2]
    d = arr[1::2, 1::2]
    ll = (a + b + c + d) / 2.0
    lh = (a - b + c - d) / 2.0
    hl = (a + b - c - d) / 2.0
    hh = (a - b - c + d) / 2.0
    return ll, lh, hl, hh


def haar_idwt2(ll, lh, hl, hh) -> np.ndarray:
    """Inverse of :func:`haar_dwt2`."""
    ll, lh, hl, hh = (np.asarray(p, dtype=np.float64) for p in (ll, lh, hl, hh))
    if not (ll.shape == lh.shape == hl.shape == hh.shape) or ll.ndim != 2:
        raise ValueError("subbands must share one (H/2, W/2) shape")
    h2, w2 = ll.shape
    out = np.empty((h2 * 2, w2 * 2))
    out[0::2, 0::2] = (ll + lh + hl + hh) / 2.0
    out[0::2, 1::2] = (ll - lh + hl - hh) / 2.0
    out[1::2, 0::2] = (ll + lh - hl - hh) / 2.0
    out[1::2, 1::2] = (ll - lh - hl + hh) / 2.0
    return out


# ---------------------------------------------------------------------------
# SVD of small blocks


def svd_block(block: np.ndarray):
    """SVD of one small 2-D block: returns (U, S, V) with block = U @ diag(S) @ V.T.

    Singular values come back in descending order.  Note V, not V.T, is
    returned, so reconstruction is ``U @ np.diag(S) @ V.T``.
    """
    arr = np.asarray(block, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("svd_block expects a 2-D block")
    u, s, vh = np.linalg.svd(arr, full_matrices=False)
    return u, s, vh.T
