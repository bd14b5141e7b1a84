"""Command-line interface.

Usage:
    tem-video synth --k0 4 --k1 4 --k2 4 --seed 1 --out video.json
    tem-video ingest frames.csv --out video.json
    tem-video encode video.json --grid 9x9 --spikes 10 --out spikes.csv
    tem-video reconstruct spikes.csv --grid 9x9 --truth video.json --out report.json
    tem-video sweep --mode spikes --out sweep.csv
    tem-video check --grid 9x15 --k1 4 --k2 4
    tem-video serve

Exit codes: 0 success, 2 parse/config or file error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

from collections.abc import Callable, Sequence
from pathlib import Path

import numpy as np

from .config import Settings, get_settings
from .errors import ConfigError, TemVideoError
from .formatting import (
    format_feasibility,
    format_grid_check,
    format_params,
    format_report,
    format_spike_summary,
    format_sweep,
)
from .logging_config import setup_logging
from .reconstructor import reconstruct
from .sensor_array import (
    build_mixing,
    feasibility,
    full_rank_check,
    parse_grid_spec,
    subset_independence_check,
)
from .serialization import (
    load_coefficients,
    load_video,
    read_frames_csv,
    read_spikes_csv,
    resolve_grid,
    save_coefficients,
    save_report,
    write_frames_csv,
    write_grid_csv,
    write_spikes_csv,
)
from .sweep import PRESETS, SweepConfig, SweepMode, run_sweep
from .tem_encoder import calibrated_params, encode_array
from .video_model import BandlimitParams, from_frames, random_video, render


logger = logging.getLogger("tem_video.cli")

_DEFAULT_K = 4


def _resolve_log_format(raw: str, interactive: bool) -> str:
    """Resolve ``"auto"`` to text on a terminal and JSON otherwise."""
    if raw == "auto":
        return "text" if interactive else "json"
    return raw


def _emit(text: str) -> None:
    sys.stdout.write(text + "\n")


# ---------------------------------------------------------------------------
# Flag parsers
# ---------------------------------------------------------------------------


def _floats(raw: str, count: int, name: str) -> tuple[float, ...]:
    parts = raw.split(",")
    if len(parts) != count:
        raise argparse.ArgumentTypeError(f"{name} needs {count} comma-separated numbers, got {raw!r}")
    try:
        return tuple(float(p) for p in parts)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"{name}: {e}") from e


def parse_periods(raw: str) -> tuple[float, float, float]:
    T, D1, D2 = _floats(raw, 3, "--periods")
    return T, D1, D2


def parse_window(raw: str) -> tuple[float, float]:
    t0, t1 = _floats(raw, 2, "--window")
    return t0, t1


def parse_grid_size(raw: str) -> tuple[int, int]:
    try:
        return parse_grid_spec(raw)
    except ConfigError as e:
        raise argparse.ArgumentTypeError(str(e)) from e


def parse_grid_list(raw: str) -> tuple[tuple[int, int], ...]:
    return tuple(parse_grid_size(g) for g in raw.split(",") if g.strip())


def parse_targets(raw: str) -> tuple[int, ...]:
    """``"1-15"`` or ``"5,9,15"`` (ranges and lists may be mixed)."""
    targets: list[int] = []
    try:
        for part in raw.split(","):
            lo, sep, hi = part.partition("-")
            targets.extend(range(int(lo), int(hi) + 1) if sep else [int(lo)])
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"targets must look like 1-15 or 5,9,15, got {raw!r}") from e
    return tuple(targets)


def parse_mode(raw: str) -> SweepMode:
    aliases = {"spikes": SweepMode.SPIKES, "tems": SweepMode.TEMS}
    try:
        return aliases.get(raw) or SweepMode(raw)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"mode must be spikes or tems, got {raw!r}") from e


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------


def _bandlimit(args: argparse.Namespace, fallback: BandlimitParams | None = None) -> BandlimitParams:
    """Bandwidth flags, falling back to *fallback* (or K = 4, unit periods) per field."""
    base = fallback or BandlimitParams(_DEFAULT_K, _DEFAULT_K, _DEFAULT_K)
    T, D1, D2 = args.periods if args.periods is not None else (base.T, base.D1, base.D2)
    return BandlimitParams(
        K0=base.K0 if args.k0 is None else args.k0,
        K1=base.K1 if args.k1 is None else args.k1,
        K2=base.K2 if args.k2 is None else args.k2,
        T=T,
        D1=D1,
        D2=D2,
    )


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_synth(args: argparse.Namespace, settings: Settings) -> int:
    params = _bandlimit(args)
    seed = settings.seed if args.seed is None else args.seed
    video = random_video(params, seed)
    save_coefficients(video.coefficients, args.out)
    if args.frames_out is not None:
        write_frames_csv(render(video), args.frames_out, params.T, params.D1, params.D2)
    logger.info("Synthesized video", extra={"seed": seed, "path": str(args.out)})
    _emit(format_params(params))
    return 0


def cmd_ingest(args: argparse.Namespace, settings: Settings) -> int:
    cube = read_frames_csv(args.frames)
    T, D1, D2 = args.periods if args.periods is not None else (cube.T, cube.D1, cube.D2)
    video = from_frames(cube.frames, T, D1, D2)
    error = float(np.max(np.abs(render(video) - cube.frames)))
    save_coefficients(video.coefficients, args.out)
    logger.info("Ingested frames", extra={"max_render_error": error, "path": str(args.out)})
    _emit(format_params(video.params))
    return 0


def cmd_encode(args: argparse.Namespace, settings: Settings) -> int:
    video = load_video(args.video)
    grid = resolve_grid(args.grid, video.params)
    kappa = settings.kappa if args.kappa is None else args.kappa
    tem = calibrated_params(video, grid, args.spikes, kappa=kappa, beta=args.beta, window=args.window)
    trains = encode_array(video, grid, tem, args.window)
    write_spikes_csv(trains, tem, args.out)
    if args.grid_out is not None:
        write_grid_csv(grid, args.grid_out)
    _emit(format_spike_summary(trains))
    return 0


def cmd_reconstruct(args: argparse.Namespace, settings: Settings) -> int:
    truth = load_coefficients(args.truth) if args.truth is not None else None
    params = _bandlimit(args, truth.params if truth is not None else None)
    grid = resolve_grid(args.grid, params)
    trains, tem = read_spikes_csv(args.spikes)
    rcond = settings.rcond if args.rcond is None else args.rcond
    report = reconstruct(grid, trains, tem, rcond=rcond, truth=truth)

    save_report(report, args.out)
    coeffs_out = args.coeffs_out or args.out.with_suffix(".coeffs.json")
    save_coefficients(report.estimate, coeffs_out)
    strict, pairs = feasibility([t.n_spikes for t in trains], params.J, params.K, strict=True)
    nonstrict, _ = feasibility([t.n_spikes for t in trains], params.J, params.K, strict=False)
    _emit(format_report(report))
    _emit(format_feasibility(pairs, params.J, params.K, strict, nonstrict))
    return 0


def cmd_sweep(args: argparse.Namespace, settings: Settings) -> int:
    video = load_video(args.video) if args.video is not None else None
    params = _bandlimit(args, video.params if video is not None else None)
    default_grids, default_targets = PRESETS[args.mode]
    config = SweepConfig(
        mode=args.mode,
        grids=args.grids or default_grids,
        targets=args.targets or default_targets,
        params=params,
        kappa=settings.kappa if args.kappa is None else args.kappa,
        beta=args.beta,
        seed=settings.seed if args.seed is None else args.seed,
        output=args.out,
        rcond=settings.rcond if args.rcond is None else args.rcond,
        window=args.window,
        timing=not args.no_timing,
        workers=settings.workers if args.workers is None else args.workers,
        video=video,
    )
    records = run_sweep(config)
    _emit(format_sweep(records))
    return 0


def cmd_check(args: argparse.Namespace, settings: Settings) -> int:
    params = _bandlimit(args)
    grid = resolve_grid(args.grid, params)
    mixing = build_mixing(grid)
    full_rank, condition = full_rank_check(mixing)
    fraction = None
    if grid.n_sensors >= params.J:
        seed = settings.seed if args.seed is None else args.seed
        fraction = subset_independence_check(mixing, args.trials, seed)
    _emit(format_grid_check(grid.n_sensors, params.J, full_rank, condition, fraction))
    if args.spikes is not None:
        counts = [args.spikes] * grid.n_sensors
        strict, pairs = feasibility(counts, params.J, params.K, strict=True)
        nonstrict, _ = feasibility(counts, params.J, params.K, strict=False)
        _emit(format_feasibility(pairs, params.J, params.K, strict, nonstrict))
    return 0


def cmd_serve(args: argparse.Namespace, settings: Settings) -> int:
    from .server import mcp

    logger.info("Starting MCP server (transport=stdio)")
    mcp.run(transport="stdio")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _add_bandlimit_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--k0", type=int, help="temporal bandwidth index K0 (default 4)")
    parser.add_argument("--k1", type=int, help="spatial bandwidth index K1 (default 4)")
    parser.add_argument("--k2", type=int, help="spatial bandwidth index K2 (default 4)")
    parser.add_argument("--periods", type=parse_periods, metavar="T,D1,D2", help="periods (default 1,1,1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tem-video",
        description="Time encoding of periodic bandlimited video and reconstruction from spike times.",
    )
    parser.add_argument("--log-level", help="override LOG_LEVEL")
    parser.add_argument("--log-format", choices=["auto", "text", "json"], help="override LOG_FORMAT")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="draw a random video and write its coefficients")
    _add_bandlimit_flags(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--frames-out", type=Path, help="also write the critically sampled frame cube")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="fit a video to a frame-cube CSV")
    p.add_argument("frames", type=Path)
    p.add_argument("--periods", type=parse_periods, metavar="T,D1,D2", help="override the CSV periods")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("encode", help="encode a video with a sensor grid")
    p.add_argument("video", type=Path)
    p.add_argument("--grid", required=True, help="N1xN2 or a sensor_id,d1,d2 CSV")
    p.add_argument("--spikes", type=int, required=True, help="target spikes per sensor")
    p.add_argument("--window", type=parse_window, metavar="t0,t1", help="default one period")
    p.add_argument("--kappa", type=float)
    p.add_argument("--beta", type=float, help="default 1 + sum |c|")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--grid-out", type=Path)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("reconstruct", help="recover coefficients from a spike CSV")
    p.add_argument("spikes", type=Path)
    p.add_argument("--grid", required=True, help="N1xN2 or a sensor_id,d1,d2 CSV")
    _add_bandlimit_flags(p)
    p.add_argument("--truth", type=Path, help="ground-truth coefficients for the error")
    p.add_argument("--rcond", type=float)
    p.add_argument("--out", type=Path, required=True, help="report JSON")
    p.add_argument("--coeffs-out", type=Path, help="default <out>.coeffs.json")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("sweep", help="grid size x spike-pair sweep")
    p.add_argument("--mode", type=parse_mode, default=SweepMode.SPIKES, help="spikes or tems")
    p.add_argument("--grids", type=parse_grid_list, help="e.g. 9x5,9x9,9x15")
    p.add_argument("--targets", type=parse_targets, help="spike pairs, e.g. 1-15 or 5,9,15")
    _add_bandlimit_flags(p)
    p.add_argument("--video", type=Path, help="coefficient JSON instead of a random video")
    p.add_argument("--seed", type=int)
    p.add_argument("--window", type=parse_window, metavar="t0,t1")
    p.add_argument("--kappa", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--rcond", type=float)
    p.add_argument("--workers", type=int)
    p.add_argument("--no-timing", action="store_true", help="write wall_time_s as 0")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("check", help="rank diagnostics of a sensor grid")
    p.add_argument("--grid", required=True, help="N1xN2 or a sensor_id,d1,d2 CSV")
    _add_bandlimit_flags(p)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int)
    p.add_argument("--spikes", type=int, help="also test the sample-count condition")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("serve", help="run the MCP server on stdio")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = get_settings()
    except ConfigError as e:
        parser.exit(e.exit_code, f"tem-video: {e}\n")

    log_format = _resolve_log_format(args.log_format or settings.log_format, sys.stderr.isatty())
    setup_logging(log_level=args.log_level or settings.log_level, log_format=log_format)

    func: Callable[[argparse.Namespace, Settings], int] = args.func
    try:
        return func(args, settings)
    except TemVideoError as e:
        logger.error("%s", e)
        return e.exit_code
    except OSError as e:
        logger.error("Cannot access %s: %s", e.filename, e.strerror)
        return 2
    except np.linalg.LinAlgError as e:
        logger.error("Numerical failure: %s", e)
        return 3


if __name__ == "__main__":
    sys.exit(main())
