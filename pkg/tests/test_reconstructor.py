"""Tests for measurement assembly and coefficient recovery."""

from __future__ import annotations

import numpy as np
import pytest

from scipy.integrate import quad

from sample_data import FORWARD_INTERVAL, FORWARD_PLUS_ONE, FORWARD_ZERO_FREQ
from tem_video.errors import (
    DegenerateIntervalError,
    DivisionByZeroError,
    InsufficientDataError,
    ShapeMismatchError,
)
from tem_video.reconstructor import (
    LinearSystem,
    assemble_system,
    coefficient_mse,
    forward_block,
    measurements_from_spikes,
    reconstruct,
    solve,
    video_mse,
)
from tem_video.sensor_array import IndexMap, build_mixing, uniform_grid
from tem_video.tem_encoder import SpikeTrain, TemParams, calibrated_params, encode_array
from tem_video.video_model import (
    BandlimitParams,
    CoefficientTensor,
    from_coefficients,
    pixel_signal,
    proxy_coefficients,
    random_video,
)


def _encode(video, n1, n2, spikes):
    grid = uniform_grid(n1, n2, video.params)
    params = calibrated_params(video, grid, spikes)
    return grid, encode_array(video, grid, params), params


# ---------------------------------------------------------------------------
# Measurements and forward blocks
# ---------------------------------------------------------------------------


class TestMeasurements:
    def test_direct_formula(self):
        train = SpikeTrain(sensor_id=2, times=[0.1, 0.15], window=(0.0, 1.0))
        (m,) = measurements_from_spikes(train, TemParams(kappa=1.0, delta=0.1, beta=2.0))
        assert m.sensor_id == 2
        assert m.interval == (0.1, 0.15)
        assert m.b == pytest.approx(0.1)

    def test_zero_signal_gives_zero(self):
        train = SpikeTrain(sensor_id=0, times=[0.1, 0.2, 0.3, 0.4], window=(0.0, 1.0))
        ms = measurements_from_spikes(train, TemParams(kappa=1.0, delta=0.05, beta=1.0))
        assert len(ms) == 3
        assert all(abs(m.b) < 1e-12 for m in ms)

    def test_fewer_than_two_spikes(self):
        train = SpikeTrain(sensor_id=0, times=[0.5], window=(0.0, 1.0))
        assert measurements_from_spikes(train, TemParams(1.0, 0.1, 1.0)) == []

    def test_matches_quadrature(self, small_video):
        grid, trains, params = _encode(small_video, 3, 3, 5)
        for train, p, d in zip(trains, params, grid.directions, strict=True):
            sig = pixel_signal(small_video, d.d1, d.d2)
            for m in measurements_from_spikes(train, p):
                measured, _ = quad(lambda u, s=sig: float(s.evaluate(u)), *m.interval, epsabs=1e-14)
                assert m.b == pytest.approx(measured, abs=1e-9)


class TestForwardBlock:
    def test_examples(self):
        block = forward_block(*FORWARD_INTERVAL, K0=1, T=1.0)
        assert block.entries[1] == pytest.approx(FORWARD_ZERO_FREQ)
        assert block.entries[2] == pytest.approx(FORWARD_PLUS_ONE, abs=1e-6)
        assert block.interval == FORWARD_INTERVAL

    def test_full_period(self):
        block = forward_block(0.3, 2.3, K0=3, T=2.0)
        expected = np.zeros(7)
        expected[3] = 2.0
        np.testing.assert_allclose(block.entries, expected, atol=1e-14)

    def test_conjugate_pairs(self):
        block = forward_block(0.17, 0.61, K0=4, T=1.3)
        np.testing.assert_allclose(block.entries[::-1], np.conj(block.entries), atol=1e-15)

    def test_matches_quadrature(self):
        block = forward_block(0.2, 0.9, K0=2, T=1.5)
        for m, k in enumerate(range(-2, 3)):
            re, _ = quad(lambda u, k=k: np.cos(2 * np.pi * k * u / 1.5), 0.2, 0.9)
            im, _ = quad(lambda u, k=k: np.sin(2 * np.pi * k * u / 1.5), 0.2, 0.9)
            assert block.entries[m] == pytest.approx(complex(re, im), abs=1e-12)

    def test_degenerate(self):
        with pytest.raises(DegenerateIntervalError):
            forward_block(0.5, 0.5, K0=1, T=1.0)


# ---------------------------------------------------------------------------
# assemble_system
# ---------------------------------------------------------------------------


class TestAssembleSystem:
    def test_forward_consistency(self):
        for seed in range(100):
            params = BandlimitParams(K0=1 + seed % 3, K1=1, K2=seed % 2)
            video = random_video(params, seed)
            grid, trains, tem = _encode(video, 3, 2, 6)
            system = assemble_system(build_mixing(grid), trains, tem, params)
            truth = proxy_coefficients(video, IndexMap.for_params(params)).ravel()
            scale = max(1.0, float(np.max(np.abs(system.rhs))))
            np.testing.assert_allclose(system.rows @ truth, system.rhs, atol=1e-9 * scale)

    def test_row_count_and_provenance(self, small_video):
        grid, trains, tem = _encode(small_video, 3, 3, 5)
        system = assemble_system(build_mixing(grid), trains, tem, small_video.params)
        assert system.m == sum(t.n_spikes - 1 for t in trains)
        assert system.rows.shape == (system.m, 27)
        assert (system.n_sensors, system.J, system.K) == (9, 9, 3)
        assert list(np.unique(system.row_sensor_ids)) == list(range(9))

    def test_row_is_rank_one(self, small_video):
        grid, trains, tem = _encode(small_video, 3, 3, 4)
        mixing = build_mixing(grid)
        system = assemble_system(mixing, trains, tem, small_video.params)
        t = trains[4].times
        block = forward_block(t[0], t[1], K0=1, T=1.0)
        row = np.flatnonzero(system.row_sensor_ids == 4)[0]
        np.testing.assert_allclose(
            system.rows[row], np.outer(mixing.entries[4], block.entries).ravel(), atol=1e-15
        )

    def test_single_sensor_is_classic_system(self):
        params = BandlimitParams(K0=3, K1=0, K2=0)
        video = random_video(params, seed=1)
        grid, trains, tem = _encode(video, 1, 1, 9)
        system = assemble_system(build_mixing(grid), trains, tem, params)
        t = trains[0].times
        expected = np.array([forward_block(a, b, 3, 1.0).entries for a, b in zip(t[:-1], t[1:], strict=True)])
        np.testing.assert_allclose(system.rows, expected, atol=1e-15)

    def test_zero_trains(self, small_params):
        mixing = build_mixing(uniform_grid(3, 3, small_params))
        system = assemble_system(mixing, [], [], small_params)
        assert system.m == 0
        assert system.rows.shape == (0, 27)

    def test_short_trains_skipped(self, small_params):
        mixing = build_mixing(uniform_grid(1, 1, small_params))
        train = SpikeTrain(sensor_id=0, times=[0.5], window=(0.0, 1.0))
        assert assemble_system(mixing, [train], [TemParams(1.0, 0.1, 1.0)], small_params).m == 0

    def test_shape_mismatches(self, small_params, k4_params):
        mixing = build_mixing(uniform_grid(3, 3, small_params))
        with pytest.raises(ShapeMismatchError):
            assemble_system(mixing, [], [], k4_params)
        train = SpikeTrain(sensor_id=0, times=[0.1, 0.5], window=(0.0, 1.0))
        with pytest.raises(ShapeMismatchError):
            assemble_system(mixing, [train], [], small_params)
        stray = SpikeTrain(sensor_id=9, times=[0.1, 0.5], window=(0.0, 1.0))
        with pytest.raises(ShapeMismatchError):
            assemble_system(mixing, [stray], [TemParams(1.0, 0.1, 1.0)], small_params)


# ---------------------------------------------------------------------------
# solve / reconstruct
# ---------------------------------------------------------------------------


class TestSolve:
    def test_small_scale_roundtrip(self, small_video):
        grid, trains, tem = _encode(small_video, 3, 3, 5)
        report = reconstruct(grid, trains, tem, truth=small_video.coefficients)
        assert report.full_rank
        assert report.rank == 27
        assert report.relative_coeff_mse < 1e-10
        assert report.residual_norm < 1e-9

    def test_single_sensor_recovery(self):
        params = BandlimitParams(K0=4, K1=0, K2=0)
        video = random_video(params, seed=3)
        grid, trains, tem = _encode(video, 1, 1, 10)
        report = reconstruct(grid, trains, tem, truth=video.coefficients)
        assert report.rank == 9
        assert report.relative_coeff_mse < 1e-10

    def test_nine_by_nine_exact_recovery(self, k4_params):
        video = random_video(k4_params, seed=0)
        grid, trains, tem = _encode(video, 9, 9, 10)
        report = reconstruct(grid, trains, tem, truth=video.coefficients)
        assert report.rank == 729
        assert report.relative_coeff_mse < 1e-8

    def test_random_exact_recovery(self):
        for seed in range(100):
            params = BandlimitParams(K0=1 + seed % 2, K1=1, K2=seed % 2)
            video = random_video(params, seed)
            grid, trains, tem = _encode(video, 3, 3, 2 * params.K0 + 3)
            report = reconstruct(grid, trains, tem, truth=video.coefficients)
            if report.full_rank:
                assert report.relative_coeff_mse < 1e-8

    def test_undersampled_grid(self, k4_params):
        video = random_video(k4_params, seed=1)
        for spikes in (2, 10, 21):
            grid, trains, tem = _encode(video, 9, 5, spikes)
            report = reconstruct(grid, trains, tem, truth=video.coefficients)
            assert report.rank < 729
            assert not report.full_rank
            assert report.relative_coeff_mse > 1e-2

    def test_zero_rhs_gives_zero_estimate(self, small_params):
        mixing = build_mixing(uniform_grid(3, 3, small_params))
        train = SpikeTrain(sensor_id=0, times=[0.1, 0.2, 0.3, 0.4], window=(0.0, 1.0))
        system = assemble_system(mixing, [train], [TemParams(1.0, 0.05, 1.0)], small_params)
        system = LinearSystem(
            rows=system.rows,
            rhs=np.zeros(system.m),
            n_sensors=9,
            J=9,
            K=3,
            row_sensor_ids=system.row_sensor_ids,
        )
        report = solve(system, small_params, rcond=1e-10)
        np.testing.assert_array_equal(report.estimate.values, np.zeros((3, 3, 3)))

    def test_more_measurements_never_lower_rank(self, small_video):
        grid, trains, tem = _encode(small_video, 3, 3, 5)
        mixing = build_mixing(grid)
        ranks = []
        for n in range(1, 10):
            system = assemble_system(mixing, trains[:n], tem[:n], small_video.params)
            ranks.append(solve(system, small_video.params).rank)
        assert ranks == sorted(ranks)

    def test_estimate_is_real_video(self, small_video):
        grid, trains, tem = _encode(small_video, 3, 3, 3)
        report = reconstruct(grid, trains, tem)
        values = report.estimate.values
        assert report.estimate.real_flag
        assert np.array_equal(values, np.conj(values[::-1, ::-1, ::-1]))
        assert report.relative_coeff_mse is None

    def test_rank_bounded_by_rows(self, small_video):
        grid, trains, tem = _encode(small_video, 3, 3, 2)
        report = reconstruct(grid, trains, tem)
        assert report.measurements == sum(t.n_spikes - 1 for t in trains)
        assert report.rank <= min(report.measurements, report.unknowns)

    def test_default_rcond_from_settings(self, small_video, monkeypatch):
        monkeypatch.setenv("TEM_VIDEO_RCOND", "0.5")
        grid, trains, tem = _encode(small_video, 3, 3, 5)
        loose = reconstruct(grid, trains, tem)
        strict = reconstruct(grid, trains, tem, rcond=1e-10)
        assert loose.rank < strict.rank

    def test_empty_system(self, small_params):
        mixing = build_mixing(uniform_grid(3, 3, small_params))
        with pytest.raises(InsufficientDataError):
            solve(assemble_system(mixing, [], [], small_params), small_params)


# ---------------------------------------------------------------------------
# Error metrics
# ---------------------------------------------------------------------------


class TestErrorMetrics:
    def test_identical(self, small_video):
        c = small_video.coefficients
        assert coefficient_mse(c, c) == 0.0

    def test_zero_estimate(self, small_video):
        zero = CoefficientTensor(small_video.params, np.zeros(small_video.params.shape))
        assert coefficient_mse(zero, small_video.coefficients) == pytest.approx(1.0)

    def test_single_entry_perturbation(self, small_video):
        truth = small_video.coefficients
        perturbed = truth.values.copy()
        perturbed[1, 1, 1] += 0.01
        estimate = CoefficientTensor(truth.params, perturbed)
        reference = np.sum(np.abs(truth.values) ** 2)
        assert coefficient_mse(estimate, truth) == pytest.approx(1e-4 / reference)

    def test_all_zero_truth(self, small_params):
        zero = CoefficientTensor(small_params, np.zeros(small_params.shape))
        with pytest.raises(DivisionByZeroError):
            coefficient_mse(zero, zero)

    def test_shape_mismatch(self, small_video, k4_params):
        other = random_video(k4_params, seed=0).coefficients
        with pytest.raises(ShapeMismatchError):
            coefficient_mse(small_video.coefficients, other)

    def test_video_mse_matches_coefficient_mse(self, small_video):
        """Parseval: on the critical grid both errors agree."""
        truth = small_video.coefficients
        values = truth.values.copy()
        values[2, 0, 1] += 0.05
        values[0, 2, 1] += 0.05
        estimate = from_coefficients(truth.params, values).coefficients
        assert video_mse(estimate, truth) == pytest.approx(coefficient_mse(estimate, truth), rel=1e-10)
