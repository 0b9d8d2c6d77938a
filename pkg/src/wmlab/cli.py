"""Command-line front end.

Subcommands:

``embed``        watermark one image          -> <out>/watermarked.png
``detect``       decode + threshold verdict   -> stdout key=value lines
``evade``        one attack, best parameter   -> <out>/evasion.png + .json
``sweep``        full benchmark from a config -> <out>/benchmark.csv ...
``spectrum``     band energies of a residual  -> <out>/spectrum.csv
``trace``        generator-fit trajectory     -> <out>/trace.csv + .jsonl
``make-corpus``  synthetic desk images        -> <out>/desk_NNN.png

Exit codes: 0 success, 1 usage error, 2 runtime failure.  ``sweep``
reads a TOML or JSON config file whose keys mirror BenchmarkConfig.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

try:
    import tomllib as _toml
except ImportError:  # python < 3.11
    import tomli as _toml

from .baselines import DEFAULT_GRIDS, SweepGrid, apply_method
from .codecs import CODEC_KINDS, CodecConfig, CodecError, Message, detect, embed
from .corpus import generate_desk_corpus, write_corpus
from .dip import run_evasion, select_query_candidates, write_snapshots
from .harness import (
    BenchmarkConfig,
    best_evasion,
    emit_report,
    emit_trajectories,
    run_benchmark,
)
from .image import load_image, psnr, save_image
from .nn import NetConfig
from .transforms import band_energy, fft2, radial_bands
from .image import luma601

__all__ = ["main"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on bad flags; the contract wants 1
    def error(self, message):
        raise UsageError(message)


def _add_codec_args(p):
    p.add_argument("--codec", choices=CODEC_KINDS, default="spectral")
    p.add_argument("--band", type=int, default=5)
    p.add_argument("--strength", type=float, default=None)
    p.add_argument("--redundancy", type=int, default=None)
    p.add_argument("--codec-seed", type=int, default=0)
    p.add_argument("--n-bits", type=int, default=32)


def _codec_from_args(args) -> CodecConfig:
    return CodecConfig(kind=args.codec, strength=args.strength,
                       band=args.band, seed=args.codec_seed,
                       n_bits=args.n_bits, redundancy=args.redundancy)


def _add_message_args(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--message", help="hex payload, e.g. deadbeef")
    g.add_argument("--message-seed", type=int, default=0,
                   help="seed for a random payload (default)")


def _message_from_args(args) -> Message:
    if args.message:
        msg = Message.from_hex(args.message)
        if msg.n != args.n_bits:
            raise UsageError(
                f"--message encodes {msg.n} bits but --n-bits is {args.n_bits}")
        return msg
    return Message.random(args.n_bits, seed=args.message_seed)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def build_parser() -> _Parser:
    parser = _Parser(prog="wmlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("embed", help="watermark an image")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    _add_codec_args(p)
    _add_message_args(p)

    p = sub.add_parser("detect", help="decode and threshold one image")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--gamma", type=float, default=0.75)
    _add_codec_args(p)
    _add_message_args(p)

    p = sub.add_parser("evade", help="run one attack at its best parameter")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--method", required=True,
                   choices=sorted(DEFAULT_GRIDS) + ["dip"])
    p.add_argument("--gamma", type=float, default=0.75)
    p.add_argument("--grid", type=float, nargs=3,
                   metavar=("LO", "HI", "STEP"),
                   help="override the method's parameter grid")
    p.add_argument("--iters", type=int, default=500)
    p.add_argument("--stride", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    _add_codec_args(p)
    _add_message_args(p)

    p = sub.add_parser("sweep", help="full benchmark from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None,
                   help="output directory (overrides the config)")

    p = sub.add_parser("spectrum", help="band energies of a watermark residual")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--clean", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--bands", type=int, default=5)

    p = sub.add_parser("trace", help="fit trajectory on one image")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--clean", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--iters", type=int, default=500)
    p.add_argument("--stride", type=int, default=10)
    p.add_argument("--net-seed", type=int, default=0)
    p.add_argument("--snapshots", action="store_true",
                   help="also dump every recorded iterate as PNG")
    p.add_argument("--with-detector", action="store_true",
                   help="attach the codec detector to each record")
    p.add_argument("--gamma", type=float, default=0.75)
    _add_codec_args(p)
    _add_message_args(p)

    p = sub.add_parser("make-corpus", help="generate synthetic desk images")
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, default=64)
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    return parser


# ---------------------------------------------------------------------------
# subcommand bodies


def _cmd_embed(args) -> int:
    img = load_image(args.input)
    cfg = _codec_from_args(args)
    msg = _message_from_args(args)
    wm = embed(img, msg, cfg)
    out = _out_dir(args)
    path = out / "watermarked.png"
    save_image(wm, path)
    print(f"wrote {path}")
    print(f"psnr={psnr(img, wm):.4f}")
    print(f"message={msg.to_hex()}")
    return 0


def _cmd_detect(args) -> int:
    img = load_image(args.input)
    cfg = _codec_from_args(args)
    msg = _message_from_args(args)
    res = detect(img, msg, cfg, gamma=args.gamma)
    print(f"bit_accuracy={res.bit_accuracy:.6f}")
    print(f"gamma={res.gamma}")
    print(f"detected={'true' if res.detected else 'false'}")
    print(f"decoded={res.decoded.to_hex()}")
    return 0


def _evade_candidates(args, wm):
    if args.method == "dip":
        trace = run_evasion(wm, cfg=NetConfig(seed=args.seed),
                            iters=args.iters, record_stride=args.stride,
                            with_fbe=False)
        keep = set(select_query_candidates(trace, 0.0))
        return [(float(r.iteration), r.snapshot) for r in trace.records
                if r.iteration in keep]
    if args.grid:
        lo, hi, step = args.grid
        grid = SweepGrid(args.method, "value", lo, hi, step)
    else:
        grid = DEFAULT_GRIDS[args.method]
    return [(v, apply_method(args.method, wm, v, seed=args.seed))
            for v in grid.points()]


def _cmd_evade(args) -> int:
    wm = load_image(args.input)
    cfg = _codec_from_args(args)
    msg = _message_from_args(args)
    candidates = _evade_candidates(args, wm)
    got = best_evasion(candidates, lambda im: detect(im, msg, cfg, args.gamma),
                       args.gamma, wm)
    out = _out_dir(args)
    meta = {"method": args.method, "gamma": args.gamma, "evaded": got is not None}
    if got is None:
        print("no candidate evades detection")
    else:
        param, img, quality, ba = got
        save_image(img, out / "evasion.png")
        meta.update(parameter=param, psnr_vs_input=round(quality, 4),
                    bit_accuracy=ba)
        print(f"wrote {out / 'evasion.png'}")
        print(f"parameter={param}")
        print(f"psnr_vs_input={quality:.4f}")
        print(f"bit_accuracy={ba:.6f}")
    with (out / "evasion.json").open("w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return 0


def _grid_from_table(name, table) -> SweepGrid:
    default = DEFAULT_GRIDS.get(name)
    return SweepGrid(
        method=name,
        parameter=table.get("parameter",
                            default.parameter if default else "value"),
        lo=float(table["lo"]), hi=float(table["hi"]),
        step=float(table["step"]))


def _benchmark_from_config(raw: dict, out_override) -> BenchmarkConfig:
    if "corpus_dir" not in raw:
        raise UsageError("config needs corpus_dir")
    if not raw.get("codecs"):
        raise UsageError("config needs at least one [[codecs]] entry")
    codecs = tuple(CodecConfig(**entry) for entry in raw["codecs"])
    kwargs = {}
    for key in ("methods", "gammas", "mask_thresholds"):
        if key in raw:
            kwargs[key] = tuple(raw[key])
    for key in ("message_seed", "seed", "dip_iters", "dip_stride",
                "dip_psnr_floor", "width", "max_images"):
        if key in raw:
            kwargs[key] = raw[key]
    if "grids" in raw:
        kwargs["grids"] = {name: _grid_from_table(name, table)
                           for name, table in raw["grids"].items()}
    if "net" in raw:
        kwargs["net"] = NetConfig(**raw["net"])
    out_dir = out_override or raw.get("out_dir")
    return BenchmarkConfig(corpus_dir=raw["corpus_dir"], codecs=codecs,
                           out_dir=out_dir, **kwargs)


def _load_config(path: Path) -> dict:
    if path.suffix == ".json":
        return json.loads(path.read_text())
    with path.open("rb") as fh:
        return _toml.load(fh)


def _cmd_sweep(args) -> int:
    path = Path(args.config)
    if not path.exists():
        raise UsageError(f"config file not found: {path}")
    cfg = _benchmark_from_config(_load_config(path), args.out)
    report = run_benchmark(cfg)
    if cfg.out_dir is None:
        paths = emit_report(report, ".")
    else:
        paths = {"csv": Path(cfg.out_dir) / "benchmark.csv",
                 "rates": Path(cfg.out_dir) / "rates.csv",
                 "json": Path(cfg.out_dir) / "benchmark.json"}
    print(f"cells={len(report.cells)} rates={len(report.rates)}")
    for key in ("csv", "rates", "json"):
        print(f"wrote {paths[key]}")
    return 0


def _cmd_spectrum(args) -> int:
    wm = load_image(args.input)
    clean = load_image(args.clean)
    if wm.data.shape != clean.data.shape:
        raise UsageError("--in and --clean images differ in shape")
    residual = luma601(wm.data.astype(float)) - luma601(clean.data.astype(float))
    bands = radial_bands(wm.height, wm.width, args.bands)
    profile = band_energy(fft2(residual), bands)
    total = sum(profile.energies) or 1.0
    out = _out_dir(args)
    path = out / "spectrum.csv"
    with path.open("w") as fh:
        fh.write("band,energy,fraction\n")
        for i, e in enumerate(profile.energies, start=1):
            fh.write(f"{i},{e:.6e},{e / total:.6f}\n")
    print(f"wrote {path}")
    return 0


def _cmd_trace(args) -> int:
    wm = load_image(args.input)
    clean = load_image(args.clean) if args.clean else None
    detector = None
    if args.with_detector:
        cfg = _codec_from_args(args)
        msg = _message_from_args(args)
        detector = lambda im: detect(im, msg, cfg, gamma=args.gamma)
    trace = run_evasion(wm, cfg=NetConfig(seed=args.net_seed),
                        iters=args.iters, record_stride=args.stride,
                        detector=detector)
    out = _out_dir(args)
    paths = emit_trajectories(trace, out, clean=clean)
    print(f"records={len(trace.records)}")
    print(f"wrote {paths['csv']}")
    print(f"wrote {paths['jsonl']}")
    if args.snapshots:
        files = write_snapshots(trace, out / "snapshots")
        print(f"wrote {len(files)} snapshots under {out / 'snapshots'}")
    return 0


def _cmd_make_corpus(args) -> int:
    images = generate_desk_corpus(args.count, size=args.size, seed=args.seed)
    paths = write_corpus(images, args.out)
    print(f"wrote {len(paths)} images under {args.out}")
    return 0


_COMMANDS = {
    "embed": _cmd_embed,
    "detect": _cmd_detect,
    "evade": _cmd_evade,
    "sweep": _cmd_sweep,
    "spectrum": _cmd_spectrum,
    "trace": _cmd_trace,
    "make-corpus": _cmd_make_corpus,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, CodecError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
