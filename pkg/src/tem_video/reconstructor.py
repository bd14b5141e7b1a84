"""Reconstruction of the coefficient tensor from spike times.

Each consecutive spike pair (t_l, t_{l+1}) of sensor i gives one linear
measurement of the video:

    b_l^(i) = 2 kappa delta - beta (t_{l+1} - t_l)
            = integral_{t_l}^{t_{l+1}} y^(i)(u) du
            = vec(a_i F_l^T) . vec(C(x)),

where a_i is row i of the mixing matrix and F_l holds the integrals of the
temporal exponentials over the interval.  Stacking the rows gives a linear
system in vec(C(x)).  The video is real, so the unknowns are expressed
through the non-redundant half of the conjugate-symmetric coefficients and
the resulting real least-squares problem is solved by truncated SVD.
"""

from __future__ import annotations

import logging

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
import scipy.linalg

from .config import get_settings
from .errors import (
    DegenerateIntervalError,
    DivisionByZeroError,
    InsufficientDataError,
    ShapeMismatchError,
)
from .sensor_array import MixingMatrix, SensorGrid, build_mixing
from .tem_encoder import SpikeTrain, TemParams
from .video_model import (
    BandlimitParams,
    CoefficientTensor,
    ComplexArray,
    FloatArray,
    PeriodicBandlimitedVideo,
    from_real_parameters,
    real_parameter_basis,
    render,
    tensor_from_proxy,
)


logger = logging.getLogger("tem_video.reconstructor")


@dataclass(frozen=True)
class Measurement:
    """Integral of one sensor's input over one inter-spike interval."""

    sensor_id: int
    interval: tuple[float, float]
    b: float


@dataclass(frozen=True, eq=False)
class ForwardBlock:
    """Integrals of exp(j2pi k u / T), k = -K0..K0, over one interval."""

    entries: ComplexArray
    interval: tuple[float, float]


@dataclass(frozen=True, eq=False)
class LinearSystem:
    """Stacked measurement rows vec(a_i F_l^T) and their right-hand sides."""

    rows: ComplexArray
    rhs: FloatArray
    n_sensors: int
    J: int
    K: int
    row_sensor_ids: npt.NDArray[np.int64]

    @property
    def m(self) -> int:
        return int(self.rhs.size)


@dataclass(frozen=True, eq=False)
class ReconstructionReport:
    """Solution of a :class:`LinearSystem` with its diagnostics."""

    estimate: CoefficientTensor
    rank: int
    residual_norm: float
    condition_estimate: float
    unknowns: int
    measurements: int
    relative_coeff_mse: float | None = None

    @property
    def full_rank(self) -> bool:
        return self.rank == self.unknowns


def measurements_from_spikes(train: SpikeTrain, params: TemParams) -> list[Measurement]:
    """One measurement per consecutive spike pair (none below two spikes)."""
    t = train.times
    return [
        Measurement(
            sensor_id=train.sensor_id,
            interval=(float(t0), float(t1)),
            b=params.quantum - params.beta * float(t1 - t0),
        )
        for t0, t1 in zip(t[:-1], t[1:], strict=True)
    ]


def _forward_rows(starts: FloatArray, ends: FloatArray, K0: int, T: float) -> ComplexArray:
    """Forward blocks for many intervals at once, shape (n, 2K0+1)."""
    k = np.arange(-K0, K0 + 1)
    omega = 2 * np.pi * k / T
    safe = np.where(k == 0, 1.0, omega)
    rows = (np.exp(1j * np.outer(ends, omega)) - np.exp(1j * np.outer(starts, omega))) / (1j * safe)
    rows[:, K0] = ends - starts
    return rows


def forward_block(t0: float, t1: float, K0: int, T: float) -> ForwardBlock:
    """Exact integrals of the temporal exponentials over [t0, t1]."""
    if not t1 > t0:
        raise DegenerateIntervalError(f"interval [{t0}, {t1}] is empty")
    entries = _forward_rows(np.array([t0]), np.array([t1]), K0, T)[0]
    entries.setflags(write=False)
    return ForwardBlock(entries=entries, interval=(t0, t1))


def assemble_system(
    mixing: MixingMatrix,
    trains: Sequence[SpikeTrain],
    params: Sequence[TemParams],
    blp: BandlimitParams,
) -> LinearSystem:
    """Stack the rank-one rows of every spike pair of every sensor.

    Columns follow the row-major flattening of C(x) (J x K), the same
    ordering as :func:`tem_video.video_model.proxy_coefficients`.
    """
    n_sensors, J = mixing.shape
    if J != blp.J:
        raise ShapeMismatchError(f"mixing matrix has {J} columns, bandwidth needs J = {blp.J}")
    if len(trains) != len(params):
        raise ShapeMismatchError(f"got {len(trains)} spike trains but {len(params)} parameter sets")

    K = blp.K
    row_blocks: list[ComplexArray] = []
    rhs_blocks: list[FloatArray] = []
    ids: list[npt.NDArray[np.int64]] = []
    for train, p in zip(trains, params, strict=True):
        if not 0 <= train.sensor_id < n_sensors:
            raise ShapeMismatchError(f"spike train for sensor {train.sensor_id}, but A has {n_sensors} rows")
        if train.n_spikes < 2:
            continue
        starts, ends = train.times[:-1], train.times[1:]
        forward = _forward_rows(starts, ends, blp.K0, blp.T)
        a_i = mixing.entries[train.sensor_id]
        row_blocks.append((a_i[None, :, None] * forward[:, None, :]).reshape(-1, J * K))
        rhs_blocks.append(p.quantum - p.beta * (ends - starts))
        ids.append(np.full(starts.size, train.sensor_id, dtype=np.int64))

    if row_blocks:
        rows = np.concatenate(row_blocks)
        rhs = np.concatenate(rhs_blocks)
        row_ids = np.concatenate(ids)
    else:
        rows = np.zeros((0, J * K), dtype=np.complex128)
        rhs = np.zeros(0)
        row_ids = np.zeros(0, dtype=np.int64)
    logger.debug("Assembled system", extra={"rows": rhs.size, "unknowns": J * K})
    return LinearSystem(rows=rows, rhs=rhs, n_sensors=n_sensors, J=J, K=K, row_sensor_ids=row_ids)


def coefficient_mse(estimate: CoefficientTensor, truth: CoefficientTensor) -> float:
    """||estimate - truth||_F^2 / ||truth||_F^2."""
    if estimate.values.shape != truth.values.shape:
        raise ShapeMismatchError(
            f"estimate has shape {estimate.values.shape}, truth has {truth.values.shape}"
        )
    reference = float(np.sum(np.abs(truth.values) ** 2))
    if reference == 0.0:
        raise DivisionByZeroError("relative error against an all-zero reference")
    return float(np.sum(np.abs(estimate.values - truth.values) ** 2)) / reference


def solve(
    system: LinearSystem,
    blp: BandlimitParams,
    rcond: float | None = None,
    truth: CoefficientTensor | None = None,
) -> ReconstructionReport:
    """Minimum-norm least-squares estimate of the coefficient tensor.

    Singular values below ``rcond`` times the largest are truncated; the same
    threshold defines the reported rank.  ``rcond`` defaults to
    ``TEM_VIDEO_RCOND``.
    """
    if system.m == 0:
        raise InsufficientDataError("no spike pairs to reconstruct from")
    n = blp.n_coefficients
    if system.J * system.K != n:
        raise ShapeMismatchError(f"system has {system.J * system.K} unknowns, bandwidth needs {n}")
    rcond = get_settings().rcond if rcond is None else rcond

    # Rows are conjugate symmetric, so in the real parameterization they are real.
    real_rows = (system.rows @ real_parameter_basis(n)).real
    theta, _, rank, singular = scipy.linalg.lstsq(real_rows, system.rhs, cond=rcond, lapack_driver="gelsd")
    residual = float(np.linalg.norm(real_rows @ theta - system.rhs))
    condition = float(singular[0] / singular[-1]) if singular[-1] > 0 else float("inf")

    proxy = from_real_parameters(theta, (system.J, system.K))
    estimate = CoefficientTensor(blp, tensor_from_proxy(proxy, blp), real_flag=True)
    mse = coefficient_mse(estimate, truth) if truth is not None else None
    logger.info(
        "Solved system",
        extra={"rows": system.m, "unknowns": n, "rank": int(rank), "relative_mse": mse},
    )
    return ReconstructionReport(
        estimate=estimate,
        rank=int(rank),
        residual_norm=residual,
        condition_estimate=condition,
        unknowns=n,
        measurements=system.m,
        relative_coeff_mse=mse,
    )


def reconstruct(
    grid: SensorGrid,
    trains: Sequence[SpikeTrain],
    params: Sequence[TemParams],
    rcond: float | None = None,
    truth: CoefficientTensor | None = None,
) -> ReconstructionReport:
    """build_mixing, assemble_system and solve in one call."""
    mixing = build_mixing(grid)
    system = assemble_system(mixing, trains, params, grid.params)
    return solve(system, grid.params, rcond=rcond, truth=truth)


def video_mse(
    estimate: CoefficientTensor,
    truth: CoefficientTensor,
    n1: int | None = None,
    n2: int | None = None,
    nt: int | None = None,
) -> float:
    """Relative squared error between the two videos rendered on one grid."""
    got = render(PeriodicBandlimitedVideo(estimate), n1, n2, nt)
    want = render(PeriodicBandlimitedVideo(truth), n1, n2, nt)
    reference = float(np.sum(want**2))
    if reference == 0.0:
        raise DivisionByZeroError("relative error against an all-zero video")
    return float(np.sum((got - want) ** 2)) / reference
