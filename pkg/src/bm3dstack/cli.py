"""Command-line interface.

Subcommands: denoise, simulate, evaluate, reproduce-table1, fetch-assets.
Exit codes: 0 success, 1 bad arguments, 2 I/O failure, 3 numerical
failure (zero aggregation coverage and friends).

Every run prints its full effective configuration so a result can be
reproduced from the log alone.  Values from ``--config FILE`` (INI-style
``key = value`` sections, one per subcommand plus ``[engine]``) take
precedence over command-line flags, which take precedence over built-in
defaults.
"""

from __future__ import annotations

import argparse
import configparser
import sys
from pathlib import Path

import numpy as np

from . import assets
from .engine import CoverageError, EngineConfig
from .extensions import Method, denoise
from .imgio import ImageFormatError, load_stack, read_image, write_image
from .matching import SearchConfig
from .simeval import (ExperimentSpec, NoiseSpec, add_poisson, format_table,
                      peak_to_intensity, psnr, rows_to_csv, run_experiment)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_NUMERIC = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse exits 2 by default; we reserve 2 for I/O
        self.print_usage(sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _engine_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("engine")
    g.add_argument("--lambda3d", type=float, default=2.7)
    g.add_argument("--kaiser-beta", type=float, default=2.0)
    g.add_argument("--patch-size", type=int, default=8)
    g.add_argument("--radius", type=int, default=19, help="search radius, both steps")
    g.add_argument("--stride", type=int, default=3, help="reference grid stride")
    g.add_argument("--max-group1", type=int, default=16)
    g.add_argument("--max-group2", type=int, default=32)
    g.add_argument("--basis1", choices=("bior15", "dct"), default="bior15")
    g.add_argument("--basis2", choices=("bior15", "dct"), default="dct")
    g.add_argument("--jobs", type=int, default=1)
    g.add_argument("--chunk-size", type=int, default=2048)


def _engine_config(ns: argparse.Namespace) -> EngineConfig:
    step = dict(search_radius=ns.radius, stride=ns.stride, patch_size=ns.patch_size)
    return EngineConfig(
        sigma=1.0,
        step1=SearchConfig(max_group=ns.max_group1, **step),
        step2=SearchConfig(max_group=ns.max_group2, **step),
        step1_basis=ns.basis1, step2_basis=ns.basis2,
        lambda3d=ns.lambda3d, kaiser_beta=ns.kaiser_beta,
        jobs=ns.jobs, chunk_size=ns.chunk_size)


def _coerce(text: str, current):
    if isinstance(current, bool):
        return text.strip().lower() in ("1", "true", "yes", "on")
    if isinstance(current, int) and not isinstance(current, bool):
        return int(text)
    if isinstance(current, float):
        return float(text)
    if isinstance(current, list):
        return text.split()
    return text


def _apply_config_file(ns: argparse.Namespace) -> None:
    """Config-file values override flags (documented precedence)."""
    if not getattr(ns, "config", None):
        return
    parser = configparser.ConfigParser()
    read = parser.read(ns.config)
    if not read:
        raise FileNotFoundError(f"config file not found: {ns.config}")
    for section in ("engine", ns.command):
        if not parser.has_section(section):
            continue
        for key, value in parser.items(section):
            attr = key.replace("-", "_")
            if not hasattr(ns, attr):
                raise ValueError(f"unknown config key [{section}] {key}")
            setattr(ns, attr, _coerce(value, getattr(ns, attr)))


def _print_effective(ns: argparse.Namespace) -> None:
    skip = {"func", "command"}
    pairs = sorted((k, v) for k, v in vars(ns).items() if k not in skip)
    print("# effective configuration")
    for key, value in pairs:
        print(f"#   {key} = {value}")


def _parse_method(ns: argparse.Namespace, n_frames: int) -> Method:
    if ns.method == "bm3d3":
        if ns.ref_frame is None:
            raise ValueError("--method bm3d3 requires --ref-frame")
        return Method("bm3d3", ref_frame=ns.ref_frame)
    if ns.method == "bm3d4_sigma":
        if ns.sigma_lp is None:
            raise ValueError("--method bm3d4_sigma requires --sigma-lp")
        return Method("bm3d4_sigma", sigma_lp=ns.sigma_lp, lp_shape=ns.lp_shape)
    return Method(ns.method)


def cmd_denoise(ns: argparse.Namespace) -> int:
    stack = load_stack(ns.frames if len(ns.frames) > 1 else ns.frames[0])
    method = _parse_method(ns, stack.shape[0])
    estimate = denoise(stack, method, _engine_config(ns))
    write_image(estimate * ns.out_scale, ns.out, maxval=ns.maxval)
    print(f"wrote {ns.out}")
    if ns.reference is not None:
        ref = read_image(ns.reference)
        est = estimate
        if ns.peak is not None:
            est = peak_to_intensity(estimate, float(ref.max()), ns.peak)
        print(f"psnr = {psnr(est, ref, ns.range):.4f} dB")
    return EXIT_OK


def cmd_simulate(ns: argparse.Namespace) -> int:
    clean = read_image(ns.image)
    stack = add_poisson(clean, NoiseSpec(peak=ns.peak, realisations=ns.frames,
                                         seed=ns.seed))
    outdir = Path(ns.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    maxval = 255 if stack.max() <= 255 else 65535
    for i, frame in enumerate(stack):
        write_image(frame, outdir / f"frame_{i:03d}.pgm", maxval=maxval)
    print(f"wrote {stack.shape[0]} frames to {outdir}")
    return EXIT_OK


def cmd_evaluate(ns: argparse.Namespace) -> int:
    est = read_image(ns.estimate)
    ref = read_image(ns.reference)
    print(f"psnr = {psnr(est, ref, ns.range):.4f} dB")
    return EXIT_OK


def _parse_subset(tokens: list[str]) -> list[tuple[str, float, int]]:
    cells = []
    for token in tokens:
        try:
            image, peak, frames = token.split(":")
            cells.append((image, float(peak.removeprefix("peak")),
                          int(frames.removeprefix("L"))))
        except Exception as exc:
            raise ValueError(f"bad --subset cell {token!r}; "
                             f"expected image:peakP:LN") from exc
    return cells


def _parse_grid(text: str) -> list[float]:
    if ":" in text:
        start, stop, step = (float(t) for t in text.split(":"))
        return list(np.arange(start, stop + step / 2, step))
    return [float(t) for t in text.split(",")]


def cmd_reproduce_table1(ns: argparse.Namespace) -> int:
    root = Path(ns.assets_dir) if ns.assets_dir else None
    have = assets.available(root)
    subset = _parse_subset(ns.subset) if ns.subset else None
    wanted = sorted({c[0] for c in subset}) if subset else list(assets.REGISTRY)
    missing = [name for name in wanted if name not in have]
    if missing:
        print(f"missing assets: {', '.join(missing)}\n"
              f"run `bm3dstack fetch-assets` first "
              f"(or fetch-assets --from-dir DIR with local copies)", file=sys.stderr)
        return EXIT_IO
    images = {name: assets.load_clean(name, root, ns.resize) for name in wanted}

    cfg = _engine_config(ns)
    grid = _parse_grid(ns.sigma_grid)
    rows = []
    if subset:
        from .simeval import run_cell
        for image, peak, frames in subset:
            for method in ns.methods:
                rows.append(run_cell(images[image], image, peak, frames, method,
                                     cfg, ns.seed, grid))
                print(rows[-1])
    else:
        spec = ExperimentSpec(images=images, peaks=ns.peaks,
                              frame_counts=ns.frame_counts, methods=ns.methods,
                              seed=ns.seed, sigma_lp_grid=grid, config=cfg)
        rows = run_experiment(spec, progress=print)
    print(format_table(rows))
    if ns.csv:
        rows_to_csv(rows, ns.csv)
        print(f"wrote {ns.csv}")
    return EXIT_OK


def cmd_fetch_assets(ns: argparse.Namespace) -> int:
    overrides = {}
    for item in ns.url or []:
        name, _, url = item.partition("=")
        if not url or name not in assets.REGISTRY:
            raise ValueError(f"bad --url {item!r}; expected name=URL")
        overrides[name] = url
    root = Path(ns.dest) if ns.dest else None
    from_dir = Path(ns.from_dir) if ns.from_dir else None
    paths = assets.fetch(ns.names or None, root, from_dir, overrides)
    for p in paths:
        print(f"installed {p}")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="bm3dstack",
                     description="Multi-frame Poisson denoising with BM3D extensions")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("denoise", help="denoise a frame stack")
    p.add_argument("--method", required=True,
                   choices=("bm3d1", "bm3d2", "bm3d3", "bm3d4", "bm3d4_sigma"))
    p.add_argument("--frames", nargs="+", required=True,
                   help="frame files, or a single directory")
    p.add_argument("--out", required=True)
    p.add_argument("--ref-frame", type=int, default=None)
    p.add_argument("--sigma-lp", type=float, default=None)
    p.add_argument("--lp-shape", choices=("radial", "separable"), default="radial")
    p.add_argument("--reference", default=None, help="clean image for PSNR")
    p.add_argument("--peak", type=float, default=None,
                   help="noise peak used in simulation (maps counts back for PSNR)")
    p.add_argument("--range", type=float, default=255.0)
    p.add_argument("--out-scale", type=float, default=1.0,
                   help="multiply the estimate before quantizing to --maxval")
    p.add_argument("--maxval", type=int, default=255, choices=(255, 65535))
    p.add_argument("--config", default=None)
    _engine_flags(p)
    p.set_defaults(func=cmd_denoise)

    p = sub.add_parser("simulate", help="write Poisson noisy frames from a clean image")
    p.add_argument("--image", required=True)
    p.add_argument("--peak", type=float, required=True)
    p.add_argument("--frames", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--outdir", required=True)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("evaluate", help="PSNR between two images")
    p.add_argument("--estimate", required=True)
    p.add_argument("--reference", required=True)
    p.add_argument("--range", type=float, default=255.0)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("reproduce-table1", help="run the PSNR benchmark grid")
    p.add_argument("--subset", nargs="*", default=None,
                   help="cells like house:peak1:L5 (default: full grid)")
    p.add_argument("--methods", nargs="+",
                   default=["bm3d1", "bm3d2", "bm3d3", "bm3d4", "bm3d4_sigma"])
    p.add_argument("--peaks", nargs="+", type=float, default=[1, 2, 3, 4, 5])
    p.add_argument("--frame-counts", nargs="+", type=int, default=[5, 10])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sigma-grid", default="80:220:5",
                   help="sigma_lp grid, start:stop:step or comma list")
    p.add_argument("--csv", default=None)
    p.add_argument("--assets-dir", default=None)
    p.add_argument("--resize", type=int, default=None,
                   help="downscale clean images to this square size")
    p.add_argument("--config", default=None)
    _engine_flags(p)
    p.set_defaults(func=cmd_reproduce_table1)

    p = sub.add_parser("fetch-assets", help="download the benchmark images")
    p.add_argument("--names", nargs="*", default=None,
                   choices=list(assets.REGISTRY), help="default: all")
    p.add_argument("--dest", default=None)
    p.add_argument("--from-dir", default=None,
                   help="install from local files instead of downloading")
    p.add_argument("--url", nargs="*", default=None, help="override as name=URL")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_fetch_assets)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        _apply_config_file(ns)
        _print_effective(ns)
        return ns.func(ns)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except (FileNotFoundError, OSError, ImageFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except CoverageError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
