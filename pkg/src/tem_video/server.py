"""tem-video MCP server -- tools, resources and prompts."""

from __future__ import annotations

from pathlib import Path

import anyio

from mcp.server.fastmcp import FastMCP

from .config import get_settings
from .errors import ConfigError, NonSpikingInputError, ParseError, TemVideoError
from .formatting import (
    format_feasibility,
    format_grid_check,
    format_params,
    format_report,
    format_spike_summary,
    format_sweep,
)
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
    read_spikes_csv,
    resolve_grid,
    save_coefficients,
    save_report,
    write_spikes_csv,
)
from .sweep import PRESETS, SweepConfig, SweepMode, run_sweep
from .tem_encoder import calibrated_params, encode_array
from .video_model import BandlimitParams, random_video


mcp = FastMCP(
    "tem-video",
    instructions="Time encoding of periodic bandlimited video. Sensors integrate a "
    "linear view of the video and fire spikes; the video's Fourier coefficients are "
    "recovered from the spike times. Use synthesize_video to create a test video, "
    "encode_video to produce spikes, reconstruct_video to recover the coefficients, "
    "check_sensor_grid for rank diagnostics and run_parameter_sweep to trade sensor "
    "count against spikes per sensor.",
)


def _error_message(e: TemVideoError) -> str:
    if isinstance(e, ParseError):
        return f"Invalid input file: {e}"
    if isinstance(e, NonSpikingInputError):
        return f"Input cannot spike ({e}). Use a larger bias."
    if e.exit_code == 2:
        return f"Invalid request: {e}"
    return f"Numerical failure: {e}"


def _bandlimit(k0: int, k1: int, k2: int, periods: list[float] | None) -> BandlimitParams:
    """Bandwidths with optional [T, D1, D2] periods (default all 1)."""
    if periods is None:
        return BandlimitParams(k0, k1, k2)
    if len(periods) != 3:
        raise ConfigError(f"periods must be [T, D1, D2], got {periods!r}")
    T, D1, D2 = (float(v) for v in periods)
    return BandlimitParams(k0, k1, k2, T=T, D1=D1, D2=D2)


# ---------------------------------------------------------------------------
# Tools
# ---------------------------------------------------------------------------


@mcp.tool()
async def synthesize_video(
    out_path: str,
    k0: int = 4,
    k1: int = 4,
    k2: int = 4,
    seed: int | None = None,
    periods: list[float] | None = None,
) -> str:
    """Draw a random real periodic bandlimited video and save its coefficients.

    Args:
        out_path: Where to write the coefficient JSON
        k0: Temporal bandwidth index (2*k0 + 1 temporal frequencies)
        k1: Horizontal bandwidth index
        k2: Vertical bandwidth index
        seed: Random seed (default: TEM_VIDEO_SEED)
        periods: Optional [T, D1, D2] periods (default: all 1)

    Returns:
        A summary of the video dimensions.
    """
    try:
        params = _bandlimit(k0, k1, k2, periods)
        chosen = get_settings().seed if seed is None else seed
        video = await anyio.to_thread.run_sync(random_video, params, chosen)
        save_coefficients(video.coefficients, out_path)
        return f"Wrote {out_path} (seed {chosen})\n{format_params(params)}"
    except TemVideoError as e:
        return _error_message(e)
    except OSError as e:
        return f"Cannot write {out_path}: {e.strerror}"
    except Exception as e:
        return f"Unexpected error: {e}"


@mcp.tool()
async def encode_video(
    video_path: str,
    out_path: str,
    grid: str = "9x9",
    spikes: int = 10,
    kappa: float | None = None,
    beta: float | None = None,
) -> str:
    """Encode a video with a sensor grid whose thresholds give a target spike count.

    Args:
        video_path: Coefficient JSON written by synthesize_video or the CLI
        out_path: Where to write the spike CSV
        grid: N1xN2 for a uniform grid, or a sensor_id,d1,d2 CSV path
        spikes: Target spikes per sensor over one period
        kappa: Integrator constant (default: TEM_VIDEO_KAPPA)
        beta: Bias added to every sensor input (default: 1 + sum |c|)

    Returns:
        Spike-count statistics of the encoded array.
    """

    def _encode() -> str:
        video = load_video(video_path)
        sensors = resolve_grid(grid, video.params)
        k = get_settings().kappa if kappa is None else kappa
        tem = calibrated_params(video, sensors, spikes, kappa=k, beta=beta)
        trains = encode_array(video, sensors, tem)
        write_spikes_csv(trains, tem, out_path)
        return format_spike_summary(trains)

    try:
        return await anyio.to_thread.run_sync(_encode)
    except TemVideoError as e:
        return _error_message(e)
    except OSError as e:
        return f"Cannot write {out_path}: {e.strerror}"
    except Exception as e:
        return f"Unexpected error: {e}"


@mcp.tool()
async def reconstruct_video(
    spikes_path: str,
    grid: str,
    k0: int = 4,
    k1: int = 4,
    k2: int = 4,
    truth_path: str | None = None,
    out_path: str | None = None,
    periods: list[float] | None = None,
) -> str:
    """Recover the Fourier coefficients of a video from a spike CSV.

    Args:
        spikes_path: Spike CSV written by encode_video or the CLI
        grid: The grid used for encoding (N1xN2 or a CSV path)
        k0: Temporal bandwidth index of the video
        k1: Horizontal bandwidth index
        k2: Vertical bandwidth index
        truth_path: Optional ground-truth coefficients; adds the relative error
            and overrides k0/k1/k2
        out_path: Optional report JSON; the estimate goes next to it as
            <out>.coeffs.json
        periods: Optional [T, D1, D2] periods of the video (default: all 1);
            ignored when truth_path is given

    Returns:
        Rank, residual and condition of the solve plus the sample-count condition.
    """

    def _reconstruct() -> str:
        truth = load_coefficients(truth_path) if truth_path is not None else None
        params = truth.params if truth is not None else _bandlimit(k0, k1, k2, periods)
        sensors = resolve_grid(grid, params)
        trains, tem = read_spikes_csv(spikes_path)
        report = reconstruct(sensors, trains, tem, rcond=get_settings().rcond, truth=truth)
        if out_path is not None:
            save_report(report, out_path)
            save_coefficients(report.estimate, Path(out_path).with_suffix(".coeffs.json"))
        counts = [t.n_spikes for t in trains]
        strict, pairs = feasibility(counts, params.J, params.K, strict=True)
        nonstrict, _ = feasibility(counts, params.J, params.K, strict=False)
        return format_report(report) + "\n" + format_feasibility(pairs, params.J, params.K, strict, nonstrict)

    try:
        return await anyio.to_thread.run_sync(_reconstruct)
    except TemVideoError as e:
        return _error_message(e)
    except OSError as e:
        return f"File error: {e.strerror}"
    except Exception as e:
        return f"Unexpected error: {e}"


@mcp.tool()
async def check_sensor_grid(
    grid: str = "9x9",
    k0: int = 4,
    k1: int = 4,
    k2: int = 4,
    spikes: int | None = None,
    trials: int = 100,
) -> str:
    """Rank diagnostics of the mixing matrix of a sensor grid.

    Args:
        grid: N1xN2 for a uniform grid, or a sensor_id,d1,d2 CSV path
        k0: Temporal bandwidth index (only used for the sample-count condition)
        k1: Horizontal bandwidth index
        k2: Vertical bandwidth index
        spikes: If given, also test the sample-count condition with this many
            spikes on every sensor
        trials: Random J-row subsets to test for independence

    Returns:
        Full-rank verdict, condition number and subset independence fraction.
    """

    def _check() -> str:
        params = BandlimitParams(k0, k1, k2)
        sensors = resolve_grid(grid, params)
        mixing = build_mixing(sensors)
        full_rank, condition = full_rank_check(mixing)
        fraction = None
        if sensors.n_sensors >= params.J:
            fraction = subset_independence_check(mixing, trials, get_settings().seed)
        text = format_grid_check(sensors.n_sensors, params.J, full_rank, condition, fraction)
        if spikes is not None:
            counts = [spikes] * sensors.n_sensors
            strict, pairs = feasibility(counts, params.J, params.K, strict=True)
            nonstrict, _ = feasibility(counts, params.J, params.K, strict=False)
            text += "\n" + format_feasibility(pairs, params.J, params.K, strict, nonstrict)
        return text

    try:
        return await anyio.to_thread.run_sync(_check)
    except TemVideoError as e:
        return _error_message(e)
    except Exception as e:
        return f"Unexpected error: {e}"


@mcp.tool()
async def run_parameter_sweep(
    mode: str = "spikes",
    grids: list[str] | None = None,
    targets: list[int] | None = None,
    k0: int = 4,
    k1: int = 4,
    k2: int = 4,
    seed: int | None = None,
    out_path: str | None = None,
) -> str:
    """Sweep sensor grid sizes against spike pairs per sensor on one random video.

    Args:
        mode: "spikes" (grids 9x5, 9x9, 9x15 against 1..15 pairs) or
            "tems" (grids 5x5..15x15 against 5, 9, 15 pairs)
        grids: Optional grid sizes overriding the preset (e.g. ["9x9"])
        targets: Optional spike-pair targets overriding the preset
        k0: Temporal bandwidth index
        k1: Horizontal bandwidth index
        k2: Vertical bandwidth index
        seed: Video seed (default: TEM_VIDEO_SEED)
        out_path: Optional sweep CSV

    Returns:
        One line per (grid, target) cell with rank and relative error.
    """
    try:
        sweep_mode = {"spikes": SweepMode.SPIKES, "tems": SweepMode.TEMS}.get(mode) or SweepMode(mode)
    except ValueError:
        return f"Unknown mode '{mode}'. Use 'spikes' or 'tems'."

    try:
        settings = get_settings()
        default_grids, default_targets = PRESETS[sweep_mode]
        config = SweepConfig(
            mode=sweep_mode,
            grids=tuple(parse_grid_spec(g) for g in grids) if grids else default_grids,
            targets=tuple(targets) if targets else default_targets,
            params=BandlimitParams(k0, k1, k2),
            kappa=settings.kappa,
            seed=settings.seed if seed is None else seed,
            output=Path(out_path) if out_path is not None else None,
            rcond=settings.rcond,
            workers=settings.workers,
        )
        records = await anyio.to_thread.run_sync(run_sweep, config)
        return format_sweep(records)
    except TemVideoError as e:
        return _error_message(e)
    except OSError as e:
        return f"Cannot write {out_path}: {e.strerror}"
    except Exception as e:
        return f"Unexpected error: {e}"


# ---------------------------------------------------------------------------
# Resources
# ---------------------------------------------------------------------------


@mcp.resource("temvideo://presets")
async def presets_resource() -> str:
    """The built-in sweep presets with their grid sizes and spike-pair targets."""
    lines: list[str] = []
    for mode, (grids, targets) in PRESETS.items():
        sizes = ", ".join(f"{n1}x{n2}" for n1, n2 in grids)
        lines.append(f"{mode.value}: grids {sizes}; spike pairs {', '.join(str(t) for t in targets)}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Prompts
# ---------------------------------------------------------------------------


@mcp.prompt()
def explain_tradeoff(grid: str = "9x9", k: int = 4) -> str:
    """Create a prompt exploring sensor count against spikes per sensor.

    Args:
        grid: Grid size to start from
        k: Bandwidth index used for all three dimensions
    """
    return f"""Run check_sensor_grid for a {grid} grid with k0 = k1 = k2 = {k}, then
run_parameter_sweep with mode "spikes" restricted to that grid.

Explain how the number of useful spike pairs per sensor, min(n - 1, 2K0 + 1),
and the number of sensors combine against the J * K unknowns, and point out
the smallest spike-pair target at which the reconstruction error drops to
numerical precision. Note where adding spikes stops helping because each
sensor can contribute at most 2K0 + 1 independent measurements."""
