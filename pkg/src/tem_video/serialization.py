"""Readers and writers for coefficient tensors, frame cubes, grids, spikes and reports.

Floats are written with 17 significant digits so every file round-trips
bitwise.
"""

from __future__ import annotations

import csv
import json
import math
import re

from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Any

import numpy as np

from .errors import ParseError, ShapeMismatchError, TemVideoError
from .reconstructor import ReconstructionReport
from .sensor_array import SensorGrid, grid_from_directions, parse_grid_spec, uniform_grid
from .tem_encoder import SpikeTrain, TemParams
from .video_model import (
    BandlimitParams,
    CoefficientTensor,
    FloatArray,
    PeriodicBandlimitedVideo,
    is_hermitian,
)


if TYPE_CHECKING:
    from .sweep import SweepRecord


FRAMES_HEADER = ("n1", "n2", "nt", "T", "D1", "D2")
GRID_HEADER = ("sensor_id", "d1", "d2")
SPIKES_HEADER = ("sensor_id", "spike_time")
SWEEP_HEADER = (
    "grid_n1",
    "grid_n2",
    "spike_pairs_target",
    "useful_pairs",
    "condition_strict",
    "condition_nonstrict",
    "rank",
    "relative_mse",
    "wall_time_s",
)

_SENSOR_LINE = re.compile(r"^#\s*(.*)$")


def fmt(value: float) -> str:
    """17 significant digits, the shortest form that always round-trips."""
    return format(float(value), ".17g")


def _float(raw: str, source: str, line: int) -> float:
    try:
        return float(raw)
    except ValueError as e:
        raise ParseError(f"not a number: {raw!r}", source=source, line=line) from e


def _int(raw: str, source: str, line: int) -> int:
    try:
        return int(raw)
    except ValueError as e:
        raise ParseError(f"not an integer: {raw!r}", source=source, line=line) from e


def _read_lines(path: Path) -> list[str]:
    try:
        return path.read_text().splitlines()
    except OSError as e:
        raise ParseError(f"cannot read file: {e.strerror}", source=str(path)) from e


# ---------------------------------------------------------------------------
# Coefficient tensors (JSON)
# ---------------------------------------------------------------------------


def coefficients_to_dict(tensor: CoefficientTensor) -> dict[str, Any]:
    p = tensor.params
    flat = tensor.flat()
    return {
        "K0": p.K0,
        "K1": p.K1,
        "K2": p.K2,
        "T": p.T,
        "D1": p.D1,
        "D2": p.D2,
        "re": flat.real.tolist(),
        "im": flat.imag.tolist(),
    }


def _dump(payload: dict[str, Any]) -> str:
    """JSON with float lists spelled out at 17 significant digits."""
    parts: list[str] = []
    for key, value in payload.items():
        if isinstance(value, list):
            encoded = "[" + ",".join(fmt(v) for v in value) + "]"
        elif isinstance(value, float):
            encoded = fmt(value)
        else:
            encoded = json.dumps(value)
        parts.append(f"{json.dumps(key)}:{encoded}")
    return "{" + ",".join(parts) + "}"


def save_coefficients(tensor: CoefficientTensor, path: str | Path) -> None:
    Path(path).write_text(_dump(coefficients_to_dict(tensor)) + "\n")


def coefficients_from_dict(payload: dict[str, Any], source: str = "<json>") -> CoefficientTensor:
    try:
        params = BandlimitParams(
            K0=int(payload["K0"]),
            K1=int(payload["K1"]),
            K2=int(payload["K2"]),
            T=float(payload["T"]),
            D1=float(payload["D1"]),
            D2=float(payload["D2"]),
        )
        re_part = np.asarray(payload["re"], dtype=np.float64)
        im_part = np.asarray(payload["im"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(f"malformed coefficient file: {e}", source=source) from e
    if re_part.shape != (params.n_coefficients,) or im_part.shape != re_part.shape:
        raise ParseError(
            f"expected {params.n_coefficients} real and imaginary parts, "
            f"got {re_part.size} and {im_part.size}",
            source=source,
        )
    values = (re_part + 1j * im_part).reshape(params.shape)
    try:
        return CoefficientTensor(params, values, real_flag=is_hermitian(values))
    except TemVideoError as e:
        raise ParseError(str(e), source=source) from e


def load_coefficients(path: str | Path) -> CoefficientTensor:
    path = Path(path)
    try:
        payload = json.loads("\n".join(_read_lines(path)))
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e.msg}", source=str(path), line=e.lineno) from e
    if not isinstance(payload, dict):
        raise ParseError("expected a JSON object", source=str(path))
    return coefficients_from_dict(payload, source=str(path))


def load_video(path: str | Path) -> PeriodicBandlimitedVideo:
    tensor = load_coefficients(path)
    if not tensor.real_flag:
        raise ParseError("coefficients are not conjugate symmetric; a video must be real", source=str(path))
    return PeriodicBandlimitedVideo(tensor)


# ---------------------------------------------------------------------------
# Frame cubes (CSV)
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FrameCube:
    frames: FloatArray
    T: float
    D1: float
    D2: float


def read_frames_csv(path: str | Path) -> FrameCube:
    """Read the ``n1,n2,nt,T,D1,D2`` header, its values, then nt blocks of n1 x n2."""
    path = Path(path)
    source = str(path)
    lines = [ln for ln in _read_lines(path) if ln.strip()]
    if len(lines) < 2:
        raise ParseError("missing header", source=source)
    header = tuple(h.strip() for h in lines[0].split(","))
    if header != FRAMES_HEADER:
        raise ParseError(f"header must be {','.join(FRAMES_HEADER)}, got {lines[0]!r}", source=source, line=1)
    fields = [f.strip() for f in lines[1].split(",")]
    if len(fields) != 6:
        raise ParseError("expected six header values", source=source, line=2)
    n1, n2, nt = (_int(f, source, 2) for f in fields[:3])
    T, D1, D2 = (_float(f, source, 2) for f in fields[3:])
    if min(n1, n2, nt) < 1:
        raise ParseError("frame dimensions must be positive", source=source, line=2)

    rows = lines[2:]
    if len(rows) != n1 * nt:
        raise ParseError(f"expected {n1 * nt} data rows, got {len(rows)}", source=source)
    cube = np.empty((n1, n2, nt))
    for offset, raw in enumerate(rows):
        line_no = offset + 3
        values = [_float(v, source, line_no) for v in raw.split(",")]
        if len(values) != n2:
            raise ParseError(f"expected {n2} values, got {len(values)}", source=source, line=line_no)
        r, p = divmod(offset, n1)
        cube[p, :, r] = values
    return FrameCube(frames=cube, T=T, D1=D1, D2=D2)


def write_frames_csv(frames: FloatArray, path: str | Path, T: float = 1.0, D1: float = 1.0, D2: float = 1.0) -> None:
    cube = np.asarray(frames, dtype=np.float64)
    if cube.ndim != 3:
        raise ShapeMismatchError(f"frames must be 3D, got {cube.ndim} dimensions")
    n1, n2, nt = cube.shape
    lines = [",".join(FRAMES_HEADER), ",".join([str(n1), str(n2), str(nt), fmt(T), fmt(D1), fmt(D2)])]
    for r in range(nt):
        lines.extend(",".join(fmt(v) for v in cube[p, :, r]) for p in range(n1))
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Sensor grids (CSV)
# ---------------------------------------------------------------------------


def write_grid_csv(grid: SensorGrid, path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(GRID_HEADER)
        for i, d in enumerate(grid.directions):
            writer.writerow([i, fmt(d.d1), fmt(d.d2)])


def read_grid_csv(path: str | Path, params: BandlimitParams) -> SensorGrid:
    path = Path(path)
    source = str(path)
    lines = _read_lines(path)
    reader = csv.reader(lines)
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != GRID_HEADER:
        raise ParseError(f"header must be {','.join(GRID_HEADER)}", source=source, line=1)
    points: list[tuple[float, float]] = []
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 3:
            raise ParseError("expected sensor_id,d1,d2", source=source, line=line_no)
        if _int(row[0], source, line_no) != len(points):
            raise ParseError("sensor ids must run 0, 1, 2, ...", source=source, line=line_no)
        points.append((_float(row[1], source, line_no), _float(row[2], source, line_no)))
    try:
        return grid_from_directions(points, params)
    except TemVideoError as e:
        raise ParseError(str(e), source=source) from e


def resolve_grid(spec: str, params: BandlimitParams) -> SensorGrid:
    """``N1xN2`` for a uniform grid, otherwise a ``sensor_id,d1,d2`` CSV path."""
    path = Path(spec)
    if path.suffix.lower() == ".csv" or path.exists():
        return read_grid_csv(path, params)
    n1, n2 = parse_grid_spec(spec)
    return uniform_grid(n1, n2, params)


# ---------------------------------------------------------------------------
# Spike streams (CSV)
# ---------------------------------------------------------------------------


def write_spikes_csv(trains: Sequence[SpikeTrain], params: Sequence[TemParams], path: str | Path) -> None:
    """One ``# sensor_id=..,kappa=..,delta=..,beta=..,t0=..,t1=..`` line per sensor, then the spikes."""
    if len(trains) != len(params):
        raise ShapeMismatchError(f"got {len(trains)} trains but {len(params)} parameter sets")
    lines: list[str] = []
    for train, p in zip(trains, params, strict=True):
        t0, t1 = train.window
        lines.append(
            f"# sensor_id={train.sensor_id},kappa={fmt(p.kappa)},delta={fmt(p.delta)},"
            f"beta={fmt(p.beta)},t0={fmt(t0)},t1={fmt(t1)}"
        )
    lines.append(",".join(SPIKES_HEADER))
    for train in trains:
        lines.extend(f"{train.sensor_id},{fmt(t)}" for t in train.times)
    Path(path).write_text("\n".join(lines) + "\n")


def _parse_sensor_line(body: str, source: str, line: int) -> tuple[int, TemParams, tuple[float, float]]:
    fields: dict[str, str] = {}
    for item in body.split(","):
        key, sep, value = item.partition("=")
        if not sep:
            raise ParseError(f"expected key=value, got {item!r}", source=source, line=line)
        fields[key.strip()] = value.strip()
    missing = {"sensor_id", "kappa", "delta", "beta", "t0", "t1"} - fields.keys()
    if missing:
        raise ParseError(f"missing {', '.join(sorted(missing))}", source=source, line=line)
    try:
        params = TemParams(
            kappa=_float(fields["kappa"], source, line),
            delta=_float(fields["delta"], source, line),
            beta=_float(fields["beta"], source, line),
        )
    except TemVideoError as e:
        raise ParseError(str(e), source=source, line=line) from e
    window = (_float(fields["t0"], source, line), _float(fields["t1"], source, line))
    return _int(fields["sensor_id"], source, line), params, window


def read_spikes_csv(path: str | Path) -> tuple[list[SpikeTrain], list[TemParams]]:
    """Inverse of :func:`write_spikes_csv`; trains come back in header order."""
    path = Path(path)
    source = str(path)
    headers: dict[int, tuple[TemParams, tuple[float, float]]] = {}
    times: dict[int, list[float]] = {}
    seen_columns = False
    for line_no, raw in enumerate(_read_lines(path), start=1):
        line = raw.strip()
        if not line:
            continue
        match = _SENSOR_LINE.match(line)
        if match:
            sensor_id, params, window = _parse_sensor_line(match.group(1), source, line_no)
            if sensor_id in headers:
                raise ParseError(f"duplicate parameters for sensor {sensor_id}", source=source, line=line_no)
            headers[sensor_id] = (params, window)
            times[sensor_id] = []
            continue
        if not seen_columns:
            if tuple(h.strip() for h in line.split(",")) != SPIKES_HEADER:
                raise ParseError(f"expected header {','.join(SPIKES_HEADER)}", source=source, line=line_no)
            seen_columns = True
            continue
        fields = line.split(",")
        if len(fields) != 2:
            raise ParseError("expected sensor_id,spike_time", source=source, line=line_no)
        sensor_id = _int(fields[0], source, line_no)
        if sensor_id not in headers:
            raise ParseError(f"spike for sensor {sensor_id} without a parameter line", source=source, line=line_no)
        times[sensor_id].append(_float(fields[1], source, line_no))

    if not seen_columns:
        raise ParseError(f"missing header {','.join(SPIKES_HEADER)}", source=source)

    trains: list[SpikeTrain] = []
    params_list: list[TemParams] = []
    for sensor_id, (params, window) in headers.items():
        try:
            trains.append(SpikeTrain(sensor_id=sensor_id, times=np.array(times[sensor_id]), window=window))
        except TemVideoError as e:
            raise ParseError(str(e), source=source) from e
        params_list.append(params)
    return trains, params_list


# ---------------------------------------------------------------------------
# Reports and sweeps
# ---------------------------------------------------------------------------


def _finite_or_none(value: float | None) -> float | None:
    if value is None or not math.isfinite(value):
        return None
    return value


def save_report(report: ReconstructionReport, path: str | Path) -> None:
    """Diagnostics of a :class:`~tem_video.reconstructor.ReconstructionReport` as JSON.

    Non-finite values (an infinite condition number) are written as ``null``.
    """
    payload = {
        "rank": report.rank,
        "unknowns": report.unknowns,
        "measurements": report.measurements,
        "residual_norm": _finite_or_none(report.residual_norm),
        "relative_coeff_mse": _finite_or_none(report.relative_coeff_mse),
        "condition_estimate": _finite_or_none(report.condition_estimate),
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def sweep_rows(records: Iterable[SweepRecord]) -> list[list[str]]:
    return [
        [
            str(r.grid_n1),
            str(r.grid_n2),
            str(r.spike_pairs_target),
            str(r.useful_pairs),
            str(r.condition_met_strict).lower(),
            str(r.condition_met_nonstrict).lower(),
            str(r.rank),
            fmt(r.relative_mse),
            fmt(r.wall_time_s),
        ]
        for r in records
    ]


def write_sweep_csv(records: Iterable[SweepRecord], path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SWEEP_HEADER)
        writer.writerows(sweep_rows(records))
