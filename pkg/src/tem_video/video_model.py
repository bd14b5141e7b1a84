"""Periodic bandlimited video: coefficient storage, evaluation, synthesis and fitting.

A video is a finite 3D Fourier series

    y(d1, d2, t) = sum c[k0, k1, k2] exp(j2pi (k0 t / T + k1 d1 / D1 + k2 d2 / D2))

with |k0| <= K0, |k1| <= K1, |k2| <= K2.  Coefficients live in a complex array
of shape (2K0+1, 2K1+1, 2K2+1) where array index ``m`` stores frequency
``k = m - K`` on every axis.  Real videos carry exact conjugate symmetry
c[-k] = conj(c[k]).
"""

from __future__ import annotations

import logging

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
import numpy.typing as npt

from .errors import (
    ConfigError,
    EvenDimensionError,
    NonFiniteError,
    NotHermitianError,
    ShapeMismatchError,
)


if TYPE_CHECKING:
    from .sensor_array import IndexMap


logger = logging.getLogger("tem_video.video_model")

ComplexArray = npt.NDArray[np.complex128]
FloatArray = npt.NDArray[np.float64]

# Imaginary residue tolerated when a real signal is evaluated from complex sums.
_IMAG_RTOL = 1e-10
# Relative asymmetry tolerated before conjugate symmetry is enforced exactly.
_HERMITIAN_RTOL = 1e-12


@dataclass(frozen=True)
class BandlimitParams:
    """Bandwidth indices and periods of a periodic bandlimited video."""

    K0: int
    K1: int
    K2: int
    T: float = 1.0
    D1: float = 1.0
    D2: float = 1.0

    def __post_init__(self) -> None:
        for name in ("K0", "K1", "K2"):
            value = getattr(self, name)
            if not isinstance(value, int | np.integer) or value < 0:
                raise ConfigError(f"{name} must be a nonnegative integer, got {value!r}")
        for name in ("T", "D1", "D2"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ConfigError(f"{name} must be a positive period, got {value!r}")

    @property
    def K(self) -> int:
        """Number of temporal coefficients, 2K0+1."""
        return 2 * self.K0 + 1

    @property
    def J(self) -> int:
        """Number of spatial frequency pairs, (2K1+1)(2K2+1)."""
        return (2 * self.K1 + 1) * (2 * self.K2 + 1)

    @property
    def n_coefficients(self) -> int:
        return self.K * self.J

    @property
    def shape(self) -> tuple[int, int, int]:
        return (2 * self.K0 + 1, 2 * self.K1 + 1, 2 * self.K2 + 1)


# ---------------------------------------------------------------------------
# Conjugate symmetry helpers
# ---------------------------------------------------------------------------


def _mirror(values: npt.NDArray[np.complexfloating]) -> ComplexArray:
    """Reverse every axis: index k maps to -k on centered odd-length axes."""
    return np.asarray(values[(slice(None, None, -1),) * values.ndim])


def is_hermitian(values: npt.NDArray[np.complexfloating], rtol: float = _HERMITIAN_RTOL) -> bool:
    """True when ``values[-k] == conj(values[k])`` to *rtol* of the largest entry."""
    if values.size == 0:
        return True
    scale = float(np.max(np.abs(values)))
    deviation = float(np.max(np.abs(values - np.conj(_mirror(values)))))
    return deviation <= rtol * scale


def hermitian_part(values: npt.NDArray[np.complexfloating]) -> ComplexArray:
    """Project onto conjugate-symmetric arrays.

    The result is symmetric bitwise: the mirrored entry is computed from the
    same two operands in swapped order, and the center entry is exactly real.
    """
    return np.asarray((values + np.conj(_mirror(values))) / 2, dtype=np.complex128)


def to_real_parameters(values: npt.NDArray[np.complexfloating]) -> FloatArray:
    """Map a Hermitian array to its non-redundant real parameter vector.

    With N entries in row-major order the mirror of flat index n is N-1-n and
    the center h = (N-1)/2 is real.  For n < h we store
    u_n = sqrt(2) Re c_n and v_n = sqrt(2) Im c_n, so the map is an isometry:
    ``||theta|| == ||values||_F``.  Layout: ``[u_0..u_{h-1}, c_h, v_0..v_{h-1}]``.
    """
    flat = np.asarray(values, dtype=np.complex128).ravel()
    h = flat.size // 2
    head = flat[:h] * np.sqrt(2.0)
    return np.concatenate([head.real, [flat[h].real], head.imag])


def from_real_parameters(theta: npt.ArrayLike, shape: tuple[int, ...]) -> ComplexArray:
    """Inverse of :func:`to_real_parameters`."""
    theta = np.asarray(theta, dtype=np.float64)
    n = int(np.prod(shape))
    if theta.shape != (n,):
        raise ShapeMismatchError(f"expected {n} real parameters, got shape {theta.shape}")
    h = n // 2
    head = (theta[:h] + 1j * theta[h + 1 :]) / np.sqrt(2.0)
    flat = np.concatenate([head, [theta[h] + 0j], np.conj(head[::-1])])
    return flat.reshape(shape)


def real_parameter_basis(n: int) -> ComplexArray:
    """Matrix P with ``vec(values) == P @ theta`` for the layout above."""
    h = n // 2
    basis = np.zeros((n, n), dtype=np.complex128)
    idx = np.arange(h)
    mirror = n - 1 - idx
    basis[idx, idx] = 1 / np.sqrt(2.0)
    basis[mirror, idx] = 1 / np.sqrt(2.0)
    basis[idx, h + 1 + idx] = 1j / np.sqrt(2.0)
    basis[mirror, h + 1 + idx] = -1j / np.sqrt(2.0)
    basis[h, h] = 1.0
    return basis


def discard_imaginary(value: complex | ComplexArray) -> float | FloatArray:
    """Real part of a complex sum that should be real; logs residues above 1e-10."""
    real = np.real(value)
    residue = np.abs(np.imag(value))
    if np.any(residue > _IMAG_RTOL * (1.0 + np.abs(real))):
        logger.warning(
            "Discarding imaginary residue above tolerance",
            extra={"max_residue": float(np.max(residue))},
        )
    if np.ndim(real) == 0:
        return float(real)
    return np.asarray(real, dtype=np.float64)


def _exponentials(K: int, x: npt.ArrayLike, period: float) -> ComplexArray:
    """exp(j2pi k x / period) for k = -K..K; shape ``x.shape + (2K+1,)``."""
    k = np.arange(-K, K + 1)
    return np.exp(2j * np.pi * np.multiply.outer(np.asarray(x, dtype=np.float64), k) / period)


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CoefficientTensor:
    """3D Fourier series coefficients of a scene.

    ``values`` is copied and made read-only on construction.  When
    ``real_flag`` is set the array must be conjugate symmetric to 1e-12
    relative; the stored copy is then symmetric bitwise.
    """

    params: BandlimitParams
    values: ComplexArray
    real_flag: bool = True

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.complex128)
        if values.shape != self.params.shape:
            raise ShapeMismatchError(
                f"coefficient array has shape {values.shape}, expected {self.params.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise NonFiniteError("coefficients must be finite")
        if self.real_flag:
            if not is_hermitian(values):
                raise NotHermitianError("coefficients flagged real are not conjugate symmetric")
            values = hermitian_part(values)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def K(self) -> int:
        return self.params.K

    @property
    def J(self) -> int:
        return self.params.J

    def flat(self) -> ComplexArray:
        """Row-major (k0, k1, k2) flattening."""
        return self.values.ravel()

    def amplitude_bound(self) -> float:
        """sum |c|, an upper bound on |y| everywhere."""
        return float(np.sum(np.abs(self.values)))


@dataclass(frozen=True, eq=False)
class PeriodicBandlimitedVideo:
    """A real-valued video y(d1, d2, t) given by its coefficient tensor."""

    coefficients: CoefficientTensor

    def __post_init__(self) -> None:
        if not self.coefficients.real_flag:
            raise NotHermitianError("a video fed to time encoding machines must be real")

    @property
    def params(self) -> BandlimitParams:
        return self.coefficients.params


@dataclass(frozen=True, eq=False)
class PixelSignal1D:
    """One sensor's T-periodic input, coefficients c_k for k = -K0..K0."""

    coeffs: ComplexArray
    T: float

    def __post_init__(self) -> None:
        coeffs = np.array(self.coeffs, dtype=np.complex128)
        if coeffs.ndim != 1 or coeffs.size % 2 == 0:
            raise ShapeMismatchError(f"need an odd number of coefficients, got shape {coeffs.shape}")
        if not np.all(np.isfinite(coeffs)):
            raise NonFiniteError("pixel signal coefficients must be finite")
        if not np.isfinite(self.T) or self.T <= 0:
            raise ConfigError(f"period must be positive, got {self.T!r}")
        if not is_hermitian(coeffs):
            raise NotHermitianError("pixel signal coefficients are not conjugate symmetric")
        coeffs = hermitian_part(coeffs)
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def K0(self) -> int:
        return self.coeffs.size // 2

    @property
    def mean(self) -> float:
        """c_0, the average of the signal over one period."""
        return float(self.coeffs[self.K0].real)

    def amplitude_bound(self) -> float:
        """sum over k != 0 of |c_k|, bounding |y(t) - c_0|."""
        return float(np.sum(np.abs(self.coeffs)) - abs(self.coeffs[self.K0]))

    def evaluate(self, t: npt.ArrayLike) -> float | FloatArray:
        """y(t); accepts a scalar or an array of times."""
        return discard_imaginary(_exponentials(self.K0, t, self.T) @ self.coeffs)


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def eval_video(video: PeriodicBandlimitedVideo, d1: float, d2: float, t: float) -> float:
    """Evaluate the triple Fourier sum at one point (periodic extension)."""
    p = video.params
    total = np.einsum(
        "abc,a,b,c->",
        video.coefficients.values,
        _exponentials(p.K0, t, p.T),
        _exponentials(p.K1, d1, p.D1),
        _exponentials(p.K2, d2, p.D2),
    )
    return float(discard_imaginary(complex(total)))


def pixel_signal(video: PeriodicBandlimitedVideo, d1: float, d2: float) -> PixelSignal1D:
    """Temporal signal seen by a sensor looking in direction (d1, d2)."""
    p = video.params
    coeffs = np.einsum(
        "abc,b,c->a",
        video.coefficients.values,
        _exponentials(p.K1, d1, p.D1),
        _exponentials(p.K2, d2, p.D2),
    )
    return PixelSignal1D(coeffs=hermitian_part(coeffs), T=p.T)


def proxy_coefficients(video: PeriodicBandlimitedVideo, index_map: IndexMap) -> ComplexArray:
    """Matrix C(x), J x K: row j holds the temporal coefficients of proxy x^(j).

    Row j (0-based) corresponds to ``index_map.inverse_index(j + 1)``; every
    pixel signal then satisfies ``coeffs == a_i @ C``.
    """
    p = video.params
    if (index_map.K1, index_map.K2) != (p.K1, p.K2):
        raise ShapeMismatchError(
            f"index map is for K1={index_map.K1}, K2={index_map.K2}; video has K1={p.K1}, K2={p.K2}"
        )
    return np.ascontiguousarray(video.coefficients.values.transpose(1, 2, 0).reshape(p.J, p.K))


def tensor_from_proxy(proxy: npt.ArrayLike, params: BandlimitParams) -> ComplexArray:
    """Undo :func:`proxy_coefficients`: J x K matrix back to the coefficient array."""
    proxy = np.asarray(proxy, dtype=np.complex128)
    if proxy.shape != (params.J, params.K):
        raise ShapeMismatchError(f"expected a {params.J} x {params.K} matrix, got {proxy.shape}")
    return proxy.reshape(2 * params.K1 + 1, 2 * params.K2 + 1, params.K).transpose(2, 0, 1)


def from_coefficients(params: BandlimitParams, values: npt.ArrayLike) -> PeriodicBandlimitedVideo:
    """Wrap a conjugate-symmetric coefficient array as a real video."""
    return PeriodicBandlimitedVideo(CoefficientTensor(params, np.asarray(values), real_flag=True))


def from_frames(frames: npt.ArrayLike, T: float = 1.0, D1: float = 1.0, D2: float = 1.0) -> PeriodicBandlimitedVideo:
    """Fit the critically sampled periodic bandlimited video through a frame cube.

    ``frames[p, q, r]`` is the intensity at d1 = p D1/n1, d2 = q D2/n2,
    t = r T/nt.  Every dimension must be odd so that n = 2K+1 per axis.
    """
    cube = np.asarray(frames, dtype=np.float64)
    if cube.ndim != 3:
        raise ShapeMismatchError(f"frames must be a 3D array, got {cube.ndim} dimensions")
    if not np.all(np.isfinite(cube)):
        raise NonFiniteError("frames contain NaN or infinite values")
    n1, n2, nt = cube.shape
    if any(n % 2 == 0 for n in cube.shape):
        raise EvenDimensionError(f"frame cube dimensions must all be odd, got {n1}x{n2}x{nt}")

    params = BandlimitParams(K0=(nt - 1) // 2, K1=(n1 - 1) // 2, K2=(n2 - 1) // 2, T=T, D1=D1, D2=D2)
    spectrum = np.fft.fftshift(np.fft.fftn(cube)) / cube.size
    logger.debug("Fitted frame cube", extra={"shape": f"{n1}x{n2}x{nt}"})
    return from_coefficients(params, hermitian_part(spectrum.transpose(2, 0, 1)))


def render(
    video: PeriodicBandlimitedVideo,
    n1: int | None = None,
    n2: int | None = None,
    nt: int | None = None,
) -> FloatArray:
    """Sample the video on a uniform n1 x n2 x nt grid (frame-cube layout).

    Defaults to the critical grid 2K+1 per axis, the inverse of :func:`from_frames`.
    """
    p = video.params
    n1 = 2 * p.K1 + 1 if n1 is None else n1
    n2 = 2 * p.K2 + 1 if n2 is None else n2
    nt = 2 * p.K0 + 1 if nt is None else nt
    frames = np.einsum(
        "abc,pb,qc,ra->pqr",
        video.coefficients.values,
        _exponentials(p.K1, np.arange(n1) * p.D1 / n1, p.D1),
        _exponentials(p.K2, np.arange(n2) * p.D2 / n2, p.D2),
        _exponentials(p.K0, np.arange(nt) * p.T / nt, p.T),
    )
    return np.asarray(discard_imaginary(frames), dtype=np.float64)


def random_video(params: BandlimitParams, seed: int) -> PeriodicBandlimitedVideo:
    """Draw a random real video, deterministic per seed.

    The non-redundant half is i.i.d. complex Gaussian with standard deviation
    1/sqrt(K J), the DC coefficient is real Gaussian with the same deviation,
    and the other half is mirrored by conjugation.
    """
    rng = np.random.default_rng(seed)
    n = params.n_coefficients
    theta = rng.standard_normal(n) / np.sqrt(n)
    return from_coefficients(params, from_real_parameters(theta, params.shape))
