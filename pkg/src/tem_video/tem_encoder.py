"""Integrate-and-fire time encoding of periodic bandlimited signals.

A machine with integrator constant kappa, threshold delta and bias beta
integrates (y(t) + beta) / kappa starting from -delta.  When the state reaches
+delta it records a spike time and resets to -delta, so consecutive spikes
t_l < t_{l+1} satisfy

    integral_{t_l}^{t_{l+1}} y(u) du = 2 kappa delta - beta (t_{l+1} - t_l).

Spike times are located exactly with the closed-form antiderivative of the
Fourier series: Brent's method inside an analytic bracket, then one Newton
step.
"""

from __future__ import annotations

import logging

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from scipy.optimize import brentq

from .errors import (
    ConfigError,
    InvalidSpikeTrainError,
    NonSpikingInputError,
    ShapeMismatchError,
    WindowEmptyError,
)
from .sensor_array import SensorGrid
from .video_model import (
    FloatArray,
    PeriodicBandlimitedVideo,
    PixelSignal1D,
    discard_imaginary,
    pixel_signal,
)


logger = logging.getLogger("tem_video.tem_encoder")

Window = tuple[float, float]

# A threshold crossing this close to the window end still counts as a spike.
_END_SLACK = 1e-13
# Bracket inflation that absorbs rounding when the amplitude bound is tight.
_BRACKET_INFLATION = 1e-9


@dataclass(frozen=True)
class TemParams:
    """Integrator constant, threshold and bias of one machine."""

    kappa: float
    delta: float
    beta: float

    def __post_init__(self) -> None:
        if not self.kappa > 0:
            raise ConfigError(f"kappa must be positive, got {self.kappa!r}")
        if not self.delta > 0:
            raise ConfigError(f"delta must be positive, got {self.delta!r}")
        if not np.isfinite(self.beta):
            raise ConfigError(f"beta must be finite, got {self.beta!r}")

    @property
    def quantum(self) -> float:
        """2 kappa delta, the integral of y + beta between consecutive spikes."""
        return 2.0 * self.kappa * self.delta


@dataclass(frozen=True, eq=False)
class SpikeTrain:
    """Strictly increasing spike times of one sensor inside its window."""

    sensor_id: int
    times: FloatArray
    window: Window

    def __post_init__(self) -> None:
        times = np.array(self.times, dtype=np.float64).ravel()
        start, end = self.window
        if end <= start:
            raise WindowEmptyError(f"window end {end} must exceed start {start}")
        if np.any(np.diff(times) <= 0):
            raise InvalidSpikeTrainError(f"sensor {self.sensor_id}: spike times must be strictly increasing")
        if times.size and (times[0] < start or times[-1] > end):
            raise InvalidSpikeTrainError(f"sensor {self.sensor_id}: spike times leave the window [{start}, {end}]")
        times.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "window", (float(start), float(end)))

    @property
    def n_spikes(self) -> int:
        return int(self.times.size)

    def __len__(self) -> int:
        return self.n_spikes


def _antiderivative_weights(sig: PixelSignal1D) -> tuple[FloatArray, npt.NDArray[np.complex128]]:
    """Angular frequencies and c_k / (j omega_k), with the k = 0 weight zeroed."""
    k = np.arange(-sig.K0, sig.K0 + 1)
    omega = 2 * np.pi * k / sig.T
    safe = np.where(k == 0, 1.0, omega)
    return omega, np.where(k == 0, 0.0, sig.coeffs / (1j * safe))


class _Integral:
    """t -> integral_0^t (y(u) + beta) du for a fixed signal and bias."""

    def __init__(self, sig: PixelSignal1D, beta: float) -> None:
        self._omega, self._weights = _antiderivative_weights(sig)
        self._slope = sig.mean + beta
        self._sig = sig
        self._beta = beta

    def __call__(self, t: float) -> float:
        oscillating = np.dot(np.exp(1j * self._omega * t) - 1.0, self._weights)
        return float(oscillating.real) + self._slope * t

    def rate(self, t: float) -> float:
        return float(self._sig.evaluate(t)) + self._beta


def _window(sig: PixelSignal1D, window: Window | None) -> Window:
    start, end = (0.0, sig.T) if window is None else (float(window[0]), float(window[1]))
    if end <= start:
        raise WindowEmptyError(f"window end {end} must exceed start {start}")
    return start, end


def _rate_floor(sig: PixelSignal1D, beta: float) -> float:
    """Conservative lower bound on y(t) + beta; must be positive to spike."""
    floor = sig.mean - sig.amplitude_bound() + beta
    if floor <= 0:
        raise NonSpikingInputError(
            f"bias {beta} does not keep y + beta positive "
            f"(c0 = {sig.mean:.6g}, sum |c_k| = {sig.amplitude_bound():.6g}); "
            f"need beta > {sig.amplitude_bound() - sig.mean:.6g}"
        )
    return floor


def antiderivative(sig: PixelSignal1D, t: npt.ArrayLike) -> float | FloatArray:
    """Closed form of integral_0^t y(u) du; vectorized over *t*."""
    omega, weights = _antiderivative_weights(sig)
    times = np.asarray(t, dtype=np.float64)
    oscillating = (np.exp(1j * np.multiply.outer(times, omega)) - 1.0) @ weights
    return discard_imaginary(oscillating + sig.coeffs[sig.K0] * times)


def encode(
    sig: PixelSignal1D,
    params: TemParams,
    window: Window | None = None,
    *,
    sensor_id: int = 0,
) -> SpikeTrain:
    """Spike times of one machine over *window* (default one period [0, T])."""
    start, end = _window(sig, window)
    floor = _rate_floor(sig, params.beta)
    quantum = params.quantum
    integral = _Integral(sig, params.beta)

    times: list[float] = []
    prev = start
    level = integral(start)
    level_end = integral(end)
    while True:
        target = level + quantum
        if level_end < target - _END_SLACK * quantum:
            break
        if level_end <= target:
            t = end
        else:
            hi = min(prev + quantum / floor * (1 + _BRACKET_INFLATION), end)

            def residual(u: float, target: float = target) -> float:
                return integral(u) - target

            if residual(hi) <= 0:
                t = hi
            else:
                t = brentq(residual, prev, hi, xtol=1e-12 * sig.T)
                polished = t - residual(t) / integral.rate(t)
                if prev < polished <= hi:
                    t = polished
        if t <= prev:
            # Rounding collapsed the interval; nothing more fits in the window.
            break
        times.append(t)
        prev = t
        level = integral(t)

    logger.debug(
        "Encoded sensor",
        extra={"sensor_id": sensor_id, "n_spikes": len(times), "delta": params.delta},
    )
    return SpikeTrain(sensor_id=sensor_id, times=np.array(times), window=(start, end))


def calibrate_threshold(
    sig: PixelSignal1D,
    kappa: float,
    beta: float,
    target_spikes: int,
    window: Window | None = None,
) -> float:
    """Threshold delta making :func:`encode` emit *target_spikes* spikes.

    delta = integral of (y + beta) over the window / (2 kappa target), which on
    a whole number of periods is (c0 + beta) * length / (2 kappa target).
    """
    if target_spikes < 1:
        raise ConfigError(f"target spike count must be >= 1, got {target_spikes}")
    if not kappa > 0:
        raise ConfigError(f"kappa must be positive, got {kappa!r}")
    start, end = _window(sig, window)
    _rate_floor(sig, beta)
    integral = _Integral(sig, beta)
    return (integral(end) - integral(start)) / (2.0 * kappa * target_spikes)


def default_bias(video: PeriodicBandlimitedVideo) -> float:
    """1 + sum |c|: keeps y + beta >= 1 for every pixel of *video*."""
    return 1.0 + video.coefficients.amplitude_bound()


def calibrated_params(
    video: PeriodicBandlimitedVideo,
    grid: SensorGrid,
    target_spikes: int,
    *,
    kappa: float = 1.0,
    beta: float | None = None,
    window: Window | None = None,
) -> list[TemParams]:
    """Per-sensor parameters whose thresholds hit *target_spikes* each."""
    beta = default_bias(video) if beta is None else beta
    params: list[TemParams] = []
    for i, d in enumerate(grid.directions):
        sig = pixel_signal(video, d.d1, d.d2)
        try:
            delta = calibrate_threshold(sig, kappa, beta, target_spikes, window)
        except NonSpikingInputError as e:
            raise NonSpikingInputError(str(e), sensor_id=i) from e
        params.append(TemParams(kappa=kappa, delta=delta, beta=beta))
    return params


def encode_array(
    video: PeriodicBandlimitedVideo,
    grid: SensorGrid,
    params: Sequence[TemParams],
    window: Window | None = None,
) -> list[SpikeTrain]:
    """Encode every sensor of *grid*; train i belongs to direction i."""
    if len(params) != grid.n_sensors:
        raise ShapeMismatchError(f"got {len(params)} parameter sets for {grid.n_sensors} sensors")
    trains: list[SpikeTrain] = []
    for i, (d, p) in enumerate(zip(grid.directions, params, strict=True)):
        sig = pixel_signal(video, d.d1, d.d2)
        try:
            trains.append(encode(sig, p, window, sensor_id=i))
        except NonSpikingInputError as e:
            raise NonSpikingInputError(str(e), sensor_id=i) from e
    logger.info(
        "Encoded sensor array",
        extra={"sensors": grid.n_sensors, "spikes": sum(t.n_spikes for t in trains)},
    )
    return trains
