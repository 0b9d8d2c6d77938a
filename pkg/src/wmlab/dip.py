"""Untrained-network image fitting with trace recording.

A randomly initialized encoder-decoder is fit to a single (watermarked)
image by ADAM on plain MSE, from a frozen noise input.  Because the net
reconstructs coarse structure long before fine texture, early iterates
are natural watermark-removal candidates: close to the image, missing
its high-frequency payload.  The run records periodic snapshots plus a
per-band relative spectrum error so that behavior is inspectable after
the fact.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .image import ImageF, ImageU8, luma601, psnr, quantize_u8
from .nn import AdamState, NetConfig, init_network
from .transforms import BandMap, fft2, radial_bands

__all__ = [
    "TraceRecord",
    "EvasionTrace",
    "forward",
    "compute_fbe",
    "run_evasion",
    "select_query_candidates",
    "trace_to_jsonl",
    "write_snapshots",
]

_EPS_DEN = 1e-8


def forward(net, z) -> ImageF:
    """One deterministic generator pass, packaged as a float image."""
    y = net.forward(z)
    return ImageF(np.transpose(y, (1, 2, 0)).astype(np.float64))


@dataclass(frozen=True)
class TraceRecord:
    """State of the fit at one recorded iteration.

    ``loss`` and ``psnr`` are measured against the fitting target.
    ``bit_accuracy``/``detected`` are present only when a detector was
    attached; ``fbe`` holds the 5 per-band relative spectrum errors
    (NaN marks a band with no usable bins).
    """

    iteration: int
    loss: float
    psnr: float
    snapshot: ImageU8
    bit_accuracy: float | None = None
    detected: bool | None = None
    fbe: tuple | None = None


@dataclass(frozen=True)
class EvasionTrace:
    records: tuple
    final_loss: float
    iters: int
    record_stride: int

    def iterations(self):
        return [r.iteration for r in self.records]


def compute_fbe(iterate: ImageF, target: ImageU8, bands: BandMap):
    """Per-band mean of |F(target) - F(iterate)| / |F(target)| on luma.

    Bins whose target magnitude falls below 1e-8 are excluded from the
    band mean; a band with no surviving bins comes back as NaN.
    """
    if iterate.data.shape[:2] != (target.height, target.width):
        raise ValueError("iterate and target sizes differ")
    if (bands.height, bands.width) != (target.height, target.width):
        raise ValueError("band map size does not match the images")
    ft = fft2(luma601(target.data.astype(np.float64)))
    fi = fft2(luma601(iterate.data * 255.0))
    mag = np.abs(ft)
    ok = mag >= _EPS_DEN
    rel = np.zeros_like(mag)
    rel[ok] = np.abs(ft - fi)[ok] / mag[ok]
    out = []
    for b in range(1, bands.k + 1):
        sel = (bands.bands == b) & ok
        out.append(float(rel[sel].mean()) if np.any(sel) else math.nan)
    return tuple(out)


def _to_u8(y) -> ImageU8:
    return ImageU8(quantize_u8(np.transpose(y, (1, 2, 0)) * 255.0))


def run_evasion(img: ImageU8, cfg: NetConfig = NetConfig(), iters: int = 500,
                record_stride: int = 10, detector=None,
                with_fbe: bool = True) -> EvasionTrace:
    """Fit the generator to ``img`` and record every ``record_stride``-th
    iterate.

    Record i holds the output after i optimizer steps, so a 500-step run
    at stride 10 yields records 10, 20, ..., 500.  ``detector`` may be a
    callable ImageU8 -> DetectionResult; its verdict is stored on each
    record.  Raises FloatingPointError the moment the loss goes
    non-finite (a diverged fit is useless evidence).
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    if record_stride < 1:
        raise ValueError("record_stride must be >= 1")
    net, z = init_network(cfg, img.height, img.width, out_channels=img.channels)
    target = np.transpose(img.data.astype(_np_dtype(cfg)), (2, 0, 1)) / 255.0
    opt = AdamState(net.parameters(), lr=0.01)
    bands = radial_bands(img.height, img.width) if with_fbe else None

    records = []

    def snap(iteration, y, loss):
        u8 = _to_u8(np.asarray(y, dtype=np.float64))
        rec = dict(iteration=iteration, loss=loss, psnr=psnr(img, u8),
                   snapshot=u8)
        if with_fbe:
            rec["fbe"] = compute_fbe(
                ImageF(np.transpose(np.asarray(y, np.float64), (1, 2, 0))),
                img, bands)
        if detector is not None:
            res = detector(u8)
            rec["bit_accuracy"] = res.bit_accuracy
            rec["detected"] = res.detected
        records.append(TraceRecord(**rec))

    loss = math.nan
    for t in range(1, iters + 1):
        y = net.forward(z)
        loss = float(np.mean((y - target) ** 2))
        if not math.isfinite(loss):
            raise FloatingPointError(f"loss diverged at iteration {t}")
        done = t - 1  # y reflects the parameters after t-1 steps
        if done and done % record_stride == 0:
            snap(done, y, loss)
        net.zero_grad()
        net.backward((2.0 / y.size) * (y - target))
        opt.step()
    y = net.forward(z)
    final_loss = float(np.mean((y - target) ** 2))
    if not math.isfinite(final_loss):
        raise FloatingPointError(f"loss diverged at iteration {iters}")
    if iters % record_stride == 0:
        snap(iters, y, final_loss)
    return EvasionTrace(records=tuple(records), final_loss=final_loss,
                        iters=iters, record_stride=record_stride)


def _np_dtype(cfg: NetConfig):
    return np.float32 if cfg.dtype == "float32" else np.float64


def select_query_candidates(trace: EvasionTrace, psnr_floor: float):
    """Iteration indices worth spending detector queries on: recorded
    iterates whose PSNR against the fitting target is at least
    ``psnr_floor``, in trace order.  An infinite floor selects nothing.
    """
    if math.isinf(psnr_floor) and psnr_floor > 0:
        return []
    return [r.iteration for r in trace.records if r.psnr >= psnr_floor]


def trace_to_jsonl(trace: EvasionTrace, path):
    """One JSON object per record: iter, loss, psnr, ba, fbe."""
    path = Path(path)
    with path.open("w") as fh:
        for r in trace.records:
            fbe = None if r.fbe is None else \
                [None if math.isnan(v) else round(v, 10) for v in r.fbe]
            fh.write(json.dumps({
                "iter": r.iteration,
                "loss": round(r.loss, 12),
                "psnr": None if math.isinf(r.psnr) else round(r.psnr, 6),
                "ba": r.bit_accuracy,
                "detected": r.detected,
                "fbe": fbe,
            }) + "\n")
    return path


def write_snapshots(trace: EvasionTrace, directory):
    """Save every recorded iterate as PNG, named by iteration index."""
    from .image import save_image

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for r in trace.records:
        p = directory / f"iter_{r.iteration:06d}.png"
        save_image(r.snapshot, p)
        paths.append(p)
    return paths
