"""Blind watermark codecs: embed/decode/detect for three schemes.

All codecs hide an ``n``-bit message (default 32) in a single image and
recover it without the original.  Detection compares the decoded bits
against the expected message and fires when the bit accuracy exceeds a
threshold ``gamma`` (strict inequality), so a decoder reduced to
guessing yields the binomial false-positive rate
``P(Bin(n, 1/2)/n > gamma)``.

The three schemes, in increasing order of spectral footprint:

``lsb``
    Replaces the least significant bit of seeded blue-channel pixels.
    Each message bit is written to ``redundancy`` (default 8) pixel
    positions drawn from a seeded permutation; decoding is a majority
    vote (ties resolved by the first position).  Strength is ignored.

``dwt-dct-svd``
    Works on BT.601 luma.  One Haar level isolates the LL plane, which
    is tiled into 8x8 blocks; each block is DCT-transformed and the top
    singular value of its 4x4 low-frequency corner is snapped to a
    quantization lattice of step ``strength`` (default 24).  Lattice
    points are labeled with the residue of ``point/step`` mod 4, so each
    block carries two message bits.  The snap never drops the top
    singular value below the second one, which keeps the decode-side
    ordering intact.  Capacity is 2 bits per 16x16 pixel area; extra
    blocks carry the message cyclically and decoding majority-votes.

``spectral``
    Works on BT.601 luma scaled to [0, 1].  Message bits are mapped to
    seeded conjugate-symmetric FFT bin pairs inside one of five radial
    frequency bands (default band 5, the outermost annulus).  Each
    carrier's real part is snapped to the nearest point of a seeded,
    per-carrier dithered lattice whose even points encode 0 and odd
    points encode 1; the step is ``sqrt(3) * strength*H*W/400``, sized
    so the rms coefficient change matches adding ``strength*H*W/400``
    outright.  Decoding reads the parity of the nearest lattice index,
    which on unwatermarked content is a fair coin because of the
    dither.  Bits repeat ``redundancy`` times (default 3, odd so votes
    cannot tie).  Only bins of the selected band are ever touched, and
    snapping is exact, so round trips are clean in every band that has
    the capacity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .image import ImageU8, luma601, quantize_u8
from .transforms import (
    dct8x8,
    fft2,
    haar_dwt2,
    haar_idwt2,
    idct8x8,
    ifft2,
    radial_bands,
    svd_block,
)

__all__ = [
    "Message",
    "CodecConfig",
    "DetectionResult",
    "CodecError",
    "bit_accuracy",
    "embed",
    "decode",
    "detect",
    "spectral_embed_plane",
    "CODEC_KINDS",
]

CODEC_KINDS = ("lsb", "dwt-dct-svd", "spectral")
N_BANDS = 5

_DEFAULT_STRENGTH = {"lsb": 1.0, "dwt-dct-svd": 24.0, "spectral": 0.45}
_DEFAULT_REDUNDANCY = {"lsb": 8, "spectral": 3}


class CodecError(ValueError):
    """An image cannot host the requested payload (size/capacity/band)."""


@dataclass(frozen=True)
class Message:
    """Immutable bit string; ``bits[0]`` is the most significant bit."""

    bits: tuple

    def __post_init__(self):
        if len(self.bits) < 1:
            raise ValueError("message must carry at least one bit")
        if any(b not in (0, 1) for b in self.bits):
            raise ValueError("message bits must be 0 or 1")

    @property
    def n(self) -> int:
        return len(self.bits)

    @classmethod
    def random(cls, n: int = 32, seed: int = 0) -> "Message":
        rng = np.random.default_rng(seed)
        return cls(tuple(int(b) for b in rng.integers(0, 2, size=n)))

    @classmethod
    def zeros(cls, n: int = 32) -> "Message":
        return cls((0,) * n)

    @classmethod
    def from_hex(cls, text: str) -> "Message":
        """Parse big-endian hex (case-insensitive); n = 4 * len(text)."""
        text = text.strip().lower()
        if not text or any(c not in "0123456789abcdef" for c in text):
            raise ValueError(f"not a hex string: {text!r}")
        value = int(text, 16)
        n = 4 * len(text)
        return cls(tuple((value >> (n - 1 - i)) & 1 for i in range(n)))

    def to_hex(self) -> str:
        """Lowercase big-endian hex; requires n divisible by 4."""
        if self.n % 4:
            raise ValueError("hex form needs a multiple of 4 bits")
        value = 0
        for b in self.bits:
            value = (value << 1) | b
        return format(value, f"0{self.n // 4}x")


def bit_accuracy(a: Message, b: Message) -> float:
    """Fraction of agreeing bit positions."""
    if a.n != b.n:
        raise ValueError(f"bit-length mismatch: {a.n} vs {b.n}")
    return sum(x == y for x, y in zip(a.bits, b.bits)) / a.n


@dataclass(frozen=True)
class CodecConfig:
    """Which codec to run and with what knobs.

    ``strength`` and ``redundancy`` default per codec kind when left at
    None (lsb: redundancy 8; dwt-dct-svd: step 24; spectral: strength
    0.45, redundancy 3).  ``band`` only matters for the spectral codec.
    """

    kind: str
    strength: float | None = None
    band: int = 5
    seed: int = 0
    n_bits: int = 32
    redundancy: int | None = None

    def __post_init__(self):
        if self.kind not in CODEC_KINDS:
            raise ValueError(f"unknown codec kind {self.kind!r}; "
                             f"expected one of {CODEC_KINDS}")
        if not 1 <= self.band <= N_BANDS:
            raise ValueError(f"band must be in 1..{N_BANDS}, got {self.band}")
        if self.n_bits < 1:
            raise ValueError("n_bits must be positive")
        if self.strength is not None and self.strength <= 0:
            raise ValueError("strength must be positive")
        if self.redundancy is not None and self.redundancy < 1:
            raise ValueError("redundancy must be at least 1")

    def resolved_strength(self) -> float:
        return self.strength if self.strength is not None \
            else _DEFAULT_STRENGTH[self.kind]

    def resolved_redundancy(self) -> int:
        if self.redundancy is not None:
            return self.redundancy
        return _DEFAULT_REDUNDANCY.get(self.kind, 1)


@dataclass(frozen=True)
class DetectionResult:
    bit_accuracy: float
    detected: bool
    gamma: float
    decoded: Message
    decode_failed: bool = False


# ---------------------------------------------------------------------------
# LSB codec


def _lsb_positions(img: ImageU8, cfg: CodecConfig):
    r = cfg.resolved_redundancy()
    need = cfg.n_bits * r
    total = img.height * img.width
    if total < need:
        raise CodecError(
            f"image too small for lsb payload: {total} pixels < "
            f"{cfg.n_bits} bits x {r} replicas")
    rng = np.random.default_rng(cfg.seed)
    perm = rng.permutation(total)[:need]
    channel = 2 if img.channels == 3 else 0
    return perm, channel, r


def _lsb_embed(img: ImageU8, msg: Message, cfg: CodecConfig) -> ImageU8:
    perm, channel, r = _lsb_positions(img, cfg)
    out = img.data.copy()
    flat = out[:, :, channel].ravel()
    for i, bit in enumerate(msg.bits):
        pos = perm[i * r:(i + 1) * r]
        flat[pos] = (flat[pos] & 0xFE) | bit
    out[:, :, channel] = flat.reshape(img.height, img.width)
    return ImageU8(out)


def _lsb_decode(img: ImageU8, cfg: CodecConfig) -> Message:
    perm, channel, r = _lsb_positions(img, cfg)
    flat = img.data[:, :, channel].ravel()
    bits = []
    for i in range(cfg.n_bits):
        votes = flat[perm[i * r:(i + 1) * r]] & 1
        ones = int(votes.sum())
        if 2 * ones > r:
            bits.append(1)
        elif 2 * ones < r:
            bits.append(0)
        else:  # even split: trust the first replica
            bits.append(int(votes[0]))
    return Message(tuple(bits))


# ---------------------------------------------------------------------------
# DWT-DCT-SVD codec


def _dwt_blocks(img: ImageU8, cfg: CodecConfig):
    h, w = img.height, img.width
    if h % 16 or w % 16:
        raise CodecError(
            f"dwt-dct-svd needs dimensions divisible by 16, got {h}x{w}")
    n_blocks = (h // 16) * (w // 16)
    slots = 2 * n_blocks
    if slots < cfg.n_bits:
        raise CodecError(
            f"capacity too small: {slots} bit slots < {cfg.n_bits} bits "
            f"(need at least {16 * 16 * cfg.n_bits // 2} pixels)")
    return n_blocks


def _snap_to_coset(sigma1: float, sigma2: float, coset: int, step: float) -> float:
    """Nearest lattice point m*step with m = coset (mod 4) and m*step >= sigma2."""
    k_near = math.floor((sigma1 / step - coset) / 4.0 + 0.5)
    k_min = max(math.ceil((sigma2 / step - coset) / 4.0), 0)
    k = max(k_near, k_min)
    return (coset + 4 * k) * step


def _apply_luma_delta(img: ImageU8, delta: np.ndarray) -> ImageU8:
    """Shift every channel by the luma change; preserves BT.601 chroma."""
    shifted = img.data.astype(np.float64) + delta[:, :, None]
    return ImageU8(quantize_u8(shifted))


def _dwt_embed(img: ImageU8, msg: Message, cfg: CodecConfig) -> ImageU8:
    n_blocks = _dwt_blocks(img, cfg)
    step = cfg.resolved_strength()
    luma = luma601(img.data)
    ll, lh, hl, hh = haar_dwt2(luma)
    bw = img.width // 16  # blocks per LL row
    for j in range(n_blocks):
        bi, bj = divmod(j, bw)
        block = ll[bi * 8:(bi + 1) * 8, bj * 8:(bj + 1) * 8]
        coeffs = dct8x8(block)
        u, s, v = svd_block(coeffs[:4, :4])
        hi = msg.bits[(2 * j) % msg.n]
        lo = msg.bits[(2 * j + 1) % msg.n]
        s = s.copy()
        s[0] = _snap_to_coset(s[0], s[1], 2 * hi + lo, step)
        coeffs[:4, :4] = u @ np.diag(s) @ v.T
        ll[bi * 8:(bi + 1) * 8, bj * 8:(bj + 1) * 8] = idct8x8(coeffs)
    new_luma = haar_idwt2(ll, lh, hl, hh)
    return _apply_luma_delta(img, new_luma - luma)


def _dwt_decode(img: ImageU8, cfg: CodecConfig) -> Message:
    n_blocks = _dwt_blocks(img, cfg)
    step = cfg.resolved_strength()
    ll = haar_dwt2(luma601(img.data))[0]
    bw = img.width // 16
    votes = [[] for _ in range(cfg.n_bits)]
    for j in range(n_blocks):
        bi, bj = divmod(j, bw)
        block = ll[bi * 8:(bi + 1) * 8, bj * 8:(bj + 1) * 8]
        _, s, _ = svd_block(dct8x8(block)[:4, :4])
        m = int(math.floor(s[0] / step + 0.5))
        coset = m % 4
        votes[(2 * j) % cfg.n_bits].append(coset >> 1)
        votes[(2 * j + 1) % cfg.n_bits].append(coset & 1)
    bits = []
    for vs in votes:
        ones = sum(vs)
        if 2 * ones > len(vs):
            bits.append(1)
        elif 2 * ones < len(vs):
            bits.append(0)
        else:
            bits.append(vs[0])
    return Message(tuple(bits))


# ---------------------------------------------------------------------------
# spectral codec


def _spectral_carriers(h: int, w: int, cfg: CodecConfig):
    """Seeded carrier bin pairs inside the configured band, plus dither.

    Candidates are the band's bins that form proper conjugate pairs
    (self-conjugate bins such as DC or pure-Nyquist bins are skipped);
    one canonical representative per pair, ordered by array index, then
    shuffled by the codec seed.  Bit i, replica p uses carrier i*r + p.
    Each carrier also gets a unit dither u in [0, 1) that offsets its
    quantization lattice, so undithered spectra read as coin flips.
    """
    r = cfg.resolved_redundancy()
    bm = radial_bands(h, w, N_BANDS)
    mask = bm.mask(cfg.band)
    candidates = []
    for i, j in np.argwhere(mask):
        pi, pj = (-i) % h, (-j) % w
        if (pi, pj) == (i, j):
            continue  # self-conjugate: cannot carry an independent real part
        if (i, j) < (pi, pj):
            candidates.append((int(i), int(j)))
    need = cfg.n_bits * r
    if len(candidates) < need:
        raise CodecError(
            f"band {cfg.band} of a {h}x{w} spectrum holds {len(candidates)} "
            f"usable bin pairs < {cfg.n_bits} bits x {r} replicas")
    rng = np.random.default_rng(cfg.seed)
    order = rng.permutation(len(candidates))
    chosen = [candidates[t] for t in order[:need]]
    dither = rng.uniform(0.0, 1.0, size=need)
    return chosen, r, dither


def _spectral_step(h: int, w: int, cfg: CodecConfig) -> float:
    # lattice step; sqrt(3) * amplitude makes the rms coefficient change
    # of snapping (uniform over +-step) equal `amplitude` itself
    return math.sqrt(3.0) * cfg.resolved_strength() * h * w / 400.0


def spectral_embed_plane(luma01: np.ndarray, msg: Message,
                         cfg: CodecConfig) -> np.ndarray:
    """Embed into a [0, 1] luma plane and return the new float plane.

    Exposed separately from :func:`embed` so the exact frequency-domain
    contract (only band bins move) can be checked without u8 rounding
    noise; :func:`embed` wraps this with the RGB/quantization plumbing.
    """
    plane = np.asarray(luma01, dtype=np.float64)
    h, w = plane.shape
    carriers, r, dither = _spectral_carriers(h, w, cfg)
    step = _spectral_step(h, w, cfg)
    spec = fft2(plane)
    for t, (i, j) in enumerate(carriers):
        bit = msg.bits[t // r]
        # snap the real part to the nearest point of this carrier's
        # dithered lattice for `bit`: dither + (2k + bit) * step
        off = dither[t] * 2.0 * step + bit * step
        re = spec[i, j].real
        snapped = off + 2.0 * step * round((re - off) / (2.0 * step))
        pi, pj = (-i) % h, (-j) % w
        spec[i, j] = complex(snapped, spec[i, j].imag)
        spec[pi, pj] = complex(snapped, spec[pi, pj].imag)
    return ifft2(spec).real


def _spectral_embed(img: ImageU8, msg: Message, cfg: CodecConfig) -> ImageU8:
    luma = luma601(img.data)
    new01 = spectral_embed_plane(luma / 255.0, msg, cfg)
    return _apply_luma_delta(img, new01 * 255.0 - luma)


def _spectral_decode(img: ImageU8, cfg: CodecConfig) -> Message:
    luma01 = luma601(img.data) / 255.0
    h, w = luma01.shape
    carriers, r, dither = _spectral_carriers(h, w, cfg)
    step = _spectral_step(h, w, cfg)
    spec = fft2(luma01)
    bits = []
    for i in range(cfg.n_bits):
        votes = []
        for t in range(i * r, (i + 1) * r):
            ci, cj = carriers[t]
            off = dither[t] * 2.0 * step
            # index of the nearest lattice point; its parity is the bit
            m = math.floor((spec[ci, cj].real - off) / step + 0.5)
            votes.append(m & 1)
        ones = sum(votes)
        if 2 * ones > r:
            bits.append(1)
        elif 2 * ones < r:
            bits.append(0)
        else:
            bits.append(votes[0])
    return Message(tuple(bits))


# ---------------------------------------------------------------------------
# public dispatch


_EMBED = {"lsb": _lsb_embed, "dwt-dct-svd": _dwt_embed, "spectral": _spectral_embed}
_DECODE = {"lsb": _lsb_decode, "dwt-dct-svd": _dwt_decode, "spectral": _spectral_decode}


def embed(img: ImageU8, msg: Message, cfg: CodecConfig) -> ImageU8:
    """Hide ``msg`` in ``img`` and return the watermarked image."""
    if msg.n != cfg.n_bits:
        raise ValueError(f"message carries {msg.n} bits, config says {cfg.n_bits}")
    return _EMBED[cfg.kind](img, msg, cfg)


def decode(img: ImageU8, cfg: CodecConfig) -> Message:
    """Blind-decode the n_bits message hosted by ``img`` (no original needed)."""
    return _DECODE[cfg.kind](img, cfg)


def detect(img: ImageU8, msg: Message, cfg: CodecConfig,
           gamma: float = 0.75) -> DetectionResult:
    """Decode and compare with the expected message.

    ``detected`` is True iff bit accuracy strictly exceeds ``gamma``.
    Thresholds at or below 1/2 are rejected: they would fire on noise
    more often than not.  A structurally impossible decode (image too
    small, etc.) counts as an all-zero decode that is flagged.
    """
    if not 0.5 < gamma <= 1.0:
        raise ValueError(f"gamma must be in (0.5, 1], got {gamma}")
    if msg.n != cfg.n_bits:
        raise ValueError(f"message carries {msg.n} bits, config says {cfg.n_bits}")
    try:
        decoded = decode(img, cfg)
        failed = False
    except CodecError:
        decoded = Message.zeros(cfg.n_bits)
        failed = True
    ba = bit_accuracy(msg, decoded)
    return DetectionResult(bit_accuracy=ba, detected=ba > gamma,
                           gamma=gamma, decoded=decoded, decode_failed=failed)
