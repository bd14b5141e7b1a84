"""Sensor geometry, frequency index bijection and the mixing matrix A.

Sensor i looks in direction d^(i) = (d1, d2).  Its input is a fixed linear
combination of J proxy signals, one per spatial frequency pair (k1, k2):

    y^(i)(t) = sum_j a_ij x^(j)(t),   a_ij = exp(j2pi (d1 k1(j) / D1 + d2 k2(j) / D2)).

Recovery needs A to have J linearly independent rows among the sensors that
carry enough spikes.  Checking every J-row subset is combinatorial, so this
module offers a full-rank test plus random subset sampling.
"""

from __future__ import annotations

import logging

from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
import scipy.linalg

from .errors import ConfigError, OutOfRangeError, ShapeMismatchError
from .video_model import BandlimitParams, ComplexArray


logger = logging.getLogger("tem_video.sensor_array")


@dataclass(frozen=True)
class SensorDirection:
    """A viewing direction.

    Build it with :meth:`reduced`, which maps any point into [0, D1) x [0, D2);
    :class:`SensorGrid` rejects directions outside that range.
    """

    d1: float
    d2: float

    @classmethod
    def reduced(cls, d1: float, d2: float, params: BandlimitParams) -> SensorDirection:
        r1 = float(np.mod(d1, params.D1))
        r2 = float(np.mod(d2, params.D2))
        # np.mod can return the period itself for tiny negative inputs.
        return cls(r1 if r1 < params.D1 else 0.0, r2 if r2 < params.D2 else 0.0)


@dataclass(frozen=True)
class SensorGrid:
    """Ordered sensor directions; the position in ``directions`` is the sensor id."""

    directions: tuple[SensorDirection, ...]
    params: BandlimitParams

    def __post_init__(self) -> None:
        if len(self.directions) < 1:
            raise ConfigError("a sensor grid needs at least one sensor")
        p = self.params
        for i, d in enumerate(self.directions):
            if not (0.0 <= d.d1 < p.D1 and 0.0 <= d.d2 < p.D2):
                raise ConfigError(
                    f"sensor {i} direction ({d.d1}, {d.d2}) lies outside [0, {p.D1}) x [0, {p.D2}); "
                    "use SensorDirection.reduced"
                )
        if len(set(self.directions)) != len(self.directions):
            raise ConfigError("sensor directions must be pairwise distinct")

    @property
    def n_sensors(self) -> int:
        return len(self.directions)

    def as_array(self) -> npt.NDArray[np.float64]:
        """I x 2 array of (d1, d2)."""
        return np.array([(d.d1, d.d2) for d in self.directions], dtype=np.float64)


@dataclass(frozen=True)
class IndexMap:
    """Bijection between (k1, k2) in [-K1, K1] x [-K2, K2] and j in 1..J.

    j = (k1 + K1)(2K2 + 1) + (k2 + K2 + 1), i.e. row-major order over (k1, k2).
    """

    K1: int
    K2: int

    @classmethod
    def for_params(cls, params: BandlimitParams) -> IndexMap:
        return cls(params.K1, params.K2)

    @property
    def J(self) -> int:
        return (2 * self.K1 + 1) * (2 * self.K2 + 1)

    def index_of(self, k1: int, k2: int) -> int:
        return index_of(k1, k2, self)

    def inverse_index(self, j: int) -> tuple[int, int]:
        return inverse_index(j, self)

    def frequency_arrays(self) -> tuple[npt.NDArray[np.int64], npt.NDArray[np.int64]]:
        """k1(j), k2(j) for j = 1..J as two length-J arrays."""
        q, r = np.divmod(np.arange(self.J), 2 * self.K2 + 1)
        return q - self.K1, r - self.K2


@dataclass(frozen=True, eq=False)
class MixingMatrix:
    """I x J unit-modulus matrix tying sensor inputs to proxy signals."""

    entries: ComplexArray
    grid: SensorGrid | None = None

    def __post_init__(self) -> None:
        entries = np.array(self.entries, dtype=np.complex128)
        if entries.ndim != 2:
            raise ShapeMismatchError(f"mixing matrix must be 2D, got shape {entries.shape}")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def shape(self) -> tuple[int, int]:
        rows, cols = self.entries.shape
        return rows, cols


def index_of(k1: int, k2: int, index_map: IndexMap) -> int:
    """1-based linear index j of the spatial frequency pair (k1, k2)."""
    if abs(k1) > index_map.K1 or abs(k2) > index_map.K2:
        raise OutOfRangeError(
            f"(k1, k2) = ({k1}, {k2}) outside [-{index_map.K1}, {index_map.K1}] x [-{index_map.K2}, {index_map.K2}]"
        )
    return (k1 + index_map.K1) * (2 * index_map.K2 + 1) + (k2 + index_map.K2 + 1)


def inverse_index(j: int, index_map: IndexMap) -> tuple[int, int]:
    """Inverse of :func:`index_of`."""
    if not 1 <= j <= index_map.J:
        raise OutOfRangeError(f"j = {j} outside 1..{index_map.J}")
    q, r = divmod(j - 1, 2 * index_map.K2 + 1)
    return q - index_map.K1, r - index_map.K2


def grid_from_directions(points: Iterable[tuple[float, float]], params: BandlimitParams) -> SensorGrid:
    """Build a grid from raw (d1, d2) pairs, reducing them into one period."""
    directions = tuple(SensorDirection.reduced(d1, d2, params) for d1, d2 in points)
    return SensorGrid(directions=directions, params=params)


def uniform_grid(n1: int, n2: int, params: BandlimitParams) -> SensorGrid:
    """n1 x n2 uniformly spaced sensors, row-major over (p, q)."""
    if n1 < 1 or n2 < 1:
        raise ConfigError(f"grid sizes must be >= 1, got {n1}x{n2}")
    directions = tuple(
        SensorDirection(p * params.D1 / n1, q * params.D2 / n2) for p in range(n1) for q in range(n2)
    )
    return SensorGrid(directions=directions, params=params)


def random_grid(n_sensors: int, params: BandlimitParams, seed: int) -> SensorGrid:
    """Sensors at i.i.d. uniform directions (generic position)."""
    if n_sensors < 1:
        raise ConfigError(f"need at least one sensor, got {n_sensors}")
    rng = np.random.default_rng(seed)
    points = rng.uniform(size=(n_sensors, 2)) * (params.D1, params.D2)
    return grid_from_directions(((float(a), float(b)) for a, b in points), params)


def build_mixing(grid: SensorGrid) -> MixingMatrix:
    """a_ij = exp(j2pi (d1^(i) k1(j) / D1 + d2^(i) k2(j) / D2))."""
    p = grid.params
    k1, k2 = IndexMap.for_params(p).frequency_arrays()
    d = grid.as_array()
    phase = np.outer(d[:, 0], k1) / p.D1 + np.outer(d[:, 1], k2) / p.D2
    return MixingMatrix(entries=np.exp(2j * np.pi * phase), grid=grid)


def _entries(matrix: MixingMatrix | npt.ArrayLike) -> ComplexArray:
    if isinstance(matrix, MixingMatrix):
        return matrix.entries
    return np.asarray(matrix, dtype=np.complex128)


def _independent(rows: ComplexArray, tol: float) -> tuple[bool, float]:
    s = scipy.linalg.svdvals(rows)
    n_rows, n_cols = rows.shape
    if n_rows < n_cols or s.size == 0 or s[0] == 0.0:
        return False, float("inf")
    condition = float(s[0] / s[-1]) if s[-1] > 0 else float("inf")
    return bool(s[-1] > tol * s[0]), condition


def full_rank_check(matrix: MixingMatrix | npt.ArrayLike, tol: float = 1e-10) -> tuple[bool, float]:
    """Whether A has full column rank J, with its 2-norm condition number."""
    ok, condition = _independent(_entries(matrix), tol)
    logger.debug("Full-rank check", extra={"full_rank": ok, "condition": condition})
    return ok, condition


def subset_independence_check(
    matrix: MixingMatrix | npt.ArrayLike,
    trials: int,
    seed: int,
    tol: float = 1e-10,
) -> float:
    """Fraction of random J-row subsets of A that are linearly independent."""
    entries = _entries(matrix)
    n_rows, n_cols = entries.shape
    if n_rows < n_cols:
        raise ShapeMismatchError(f"need at least J = {n_cols} rows, got {n_rows}")
    if trials < 1:
        raise ConfigError(f"trials must be >= 1, got {trials}")
    rng = np.random.default_rng(seed)
    passed = 0
    for _ in range(trials):
        rows = np.sort(rng.choice(n_rows, size=n_cols, replace=False))
        passed += _independent(entries[rows], tol)[0]
    return passed / trials


def useful_pairs(spike_counts: Sequence[int], K: int) -> int:
    """sum_i min(n_i - 1, K), with sensors below two spikes contributing nothing."""
    return int(sum(max(0, min(n - 1, K)) for n in spike_counts))


def feasibility(spike_counts: Sequence[int], J: int, K: int, strict: bool = True) -> tuple[bool, int]:
    """Sample-count condition for perfect reconstruction.

    Returns whether the useful spike pairs exceed (``strict``) or reach J K,
    together with the useful pair count.
    """
    if any(n < 0 for n in spike_counts):
        raise ConfigError("spike counts must be nonnegative")
    pairs = useful_pairs(spike_counts, K)
    needed = J * K
    return (pairs > needed if strict else pairs >= needed), pairs


def parse_grid_spec(raw: str) -> tuple[int, int]:
    """``"9x15"`` -> (9, 15)."""
    n1, sep, n2 = raw.strip().lower().partition("x")
    try:
        if not sep:
            raise ValueError(raw)
        size = int(n1), int(n2)
    except ValueError as e:
        raise ConfigError(f"grid must look like N1xN2, got {raw!r}") from e
    if min(size) < 1:
        raise ConfigError(f"grid sizes must be positive, got {raw!r}")
    return size
