"""Pure formatting functions that turn results into human-readable strings."""

from __future__ import annotations

import math

from collections.abc import Sequence

from .reconstructor import ReconstructionReport
from .sweep import SweepRecord
from .tem_encoder import SpikeTrain
from .video_model import BandlimitParams


def _sci(value: float | None) -> str:
    if value is None:
        return "n/a"
    if math.isnan(value):
        return "failed"
    if math.isinf(value):
        return "inf"
    return f"{value:.3e}"


def format_params(params: BandlimitParams) -> str:
    """One-line summary of bandwidths and periods."""
    return (
        f"K0={params.K0}, K1={params.K1}, K2={params.K2} "
        f"({params.K} x {params.J} = {params.n_coefficients} coefficients), "
        f"T={params.T:g}, D1={params.D1:g}, D2={params.D2:g}"
    )


def format_report(report: ReconstructionReport) -> str:
    """Format a reconstruction report into a readable string."""
    lines: list[str] = [
        f"Unknowns: {report.unknowns}",
        f"Measurements: {report.measurements}",
    ]
    if report.full_rank:
        lines.append(f"Rank: {report.rank} (full)")
    else:
        lines.append(f"Rank: {report.rank} of {report.unknowns} (underdetermined by {report.unknowns - report.rank})")
    lines.append(f"Residual norm: {_sci(report.residual_norm)}")
    lines.append(f"Condition estimate: {_sci(report.condition_estimate)}")
    if report.relative_coeff_mse is not None:
        lines.append(f"Relative coefficient MSE: {_sci(report.relative_coeff_mse)}")
    return "\n".join(lines)


def format_spike_summary(trains: Sequence[SpikeTrain]) -> str:
    """Spike-count statistics over an array of sensors."""
    if not trains:
        return "No sensors."
    counts = [t.n_spikes for t in trains]
    start, end = trains[0].window
    return (
        f"Sensors: {len(trains)}\n"
        f"Window: [{start:g}, {end:g}]\n"
        f"Spikes: {sum(counts)} total, {min(counts)}-{max(counts)} per sensor"
    )


def format_grid_check(
    n_sensors: int,
    J: int,
    full_rank: bool,
    condition: float,
    subset_fraction: float | None,
) -> str:
    """Diagnostics of a mixing matrix: rank and sampled subset independence."""
    lines: list[str] = [
        f"Sensors: {n_sensors}, spatial unknowns J: {J}",
        f"Full column rank: {'yes' if full_rank else 'no'} (condition {_sci(condition)})",
    ]
    if subset_fraction is not None:
        lines.append(f"Independent J-row subsets: {subset_fraction:.1%} of sampled subsets")
    elif n_sensors < J:
        lines.append("Fewer sensors than J: no J-row subset exists")
    return "\n".join(lines)


def format_feasibility(useful_pairs: int, J: int, K: int, strict: bool, nonstrict: bool) -> str:
    """Sample-count condition for perfect reconstruction."""
    needed = J * K
    verdict = "met" if strict else ("met at equality" if nonstrict else "not met")
    return f"Useful spike pairs: {useful_pairs} / {needed} needed -- condition {verdict}"


def format_sweep(records: Sequence[SweepRecord]) -> str:
    """Table of sweep cells, one line per (grid, target)."""
    if not records:
        return "No sweep cells."
    lines: list[str] = [
        f"{'grid':>7} {'pairs':>5} {'useful':>6} {'cond':>5} {'rank':>5} {'rel. MSE':>10}",
    ]
    for r in records:
        cond = "yes" if r.condition_met_nonstrict else "no"
        lines.append(
            f"{r.grid_n1:>3}x{r.grid_n2:<3} {r.spike_pairs_target:>5} {r.useful_pairs:>6} "
            f"{cond:>5} {r.rank:>5} {_sci(r.relative_mse):>10}"
        )
        if r.error:
            lines.append(f"  Error: {r.error}")
    return "\n".join(lines)
