"""Tests for grid-size x spike-pair sweeps."""

from __future__ import annotations

import math

from unittest.mock import patch

import numpy as np
import pytest

from sample_data import SWEEP_HEADER_LINE
from tem_video.errors import ConfigError
from tem_video.reconstructor import reconstruct
from tem_video.sensor_array import uniform_grid
from tem_video.sweep import (
    DEFAULT_PARAMS,
    PRESETS,
    SweepConfig,
    SweepMode,
    run_cell,
    run_sweep,
)
from tem_video.tem_encoder import calibrated_params, encode_array
from tem_video.video_model import BandlimitParams, random_video


SMALL = BandlimitParams(K0=1, K1=1, K2=1)


def _by_cell(records):
    return {(r.grid_n1, r.grid_n2, r.spike_pairs_target): r for r in records}


class TestSweepConfig:
    def test_presets(self):
        grids, targets = PRESETS[SweepMode.SPIKES]
        assert grids == ((9, 5), (9, 9), (9, 15))
        assert targets == tuple(range(1, 16))
        grids, targets = PRESETS[SweepMode.TEMS]
        assert grids[0] == (5, 5)
        assert grids[-1] == (15, 15)
        assert targets == (5, 9, 15)

    def test_preset_constructor(self):
        config = SweepConfig.preset("sweep_tems", seed=3)
        assert config.mode is SweepMode.TEMS
        assert config.seed == 3
        assert config.params == DEFAULT_PARAMS
        assert config.n_cells == 33

    @pytest.mark.parametrize(
        "overrides",
        [
            {"grids": ()},
            {"targets": ()},
            {"targets": (0,)},
            {"grids": ((0, 3),)},
            {"workers": 0},
        ],
    )
    def test_rejects_invalid(self, overrides):
        kwargs = {"mode": SweepMode.SPIKES, "grids": ((3, 3),), "targets": (1,), **overrides}
        with pytest.raises(ConfigError):
            SweepConfig(**kwargs)

    def test_video_params_must_match(self):
        with pytest.raises(ConfigError):
            SweepConfig(
                mode=SweepMode.SPIKES,
                grids=((3, 3),),
                targets=(1,),
                params=SMALL,
                video=random_video(DEFAULT_PARAMS, seed=0),
            )


class TestRunSweep:
    def _config(self, **overrides):
        base = {
            "mode": SweepMode.SPIKES,
            "grids": ((3, 1), (3, 3)),
            "targets": (1, 2, 4),
            "params": SMALL,
            "seed": 5,
            "timing": False,
        }
        return SweepConfig(**{**base, **overrides})

    def test_record_count_and_order(self):
        records = run_sweep(self._config())
        assert len(records) == 6
        assert [(r.grid_n1, r.grid_n2, r.spike_pairs_target) for r in records] == [
            (3, 1, 1),
            (3, 1, 2),
            (3, 1, 4),
            (3, 3, 1),
            (3, 3, 2),
            (3, 3, 4),
        ]

    def test_feasible_cell_recovers(self):
        cell = _by_cell(run_sweep(self._config()))[(3, 3, 4)]
        assert cell.useful_pairs == 27
        assert cell.condition_met_nonstrict
        assert cell.rank == 27
        assert cell.relative_mse < 1e-8

    def test_undersampled_grid_never_recovers(self):
        for (n1, n2, _), r in _by_cell(run_sweep(self._config())).items():
            if (n1, n2) == (3, 1):
                assert r.rank < 27
                assert r.relative_mse > 1e-2

    def test_csv_is_deterministic(self, tmp_path):
        first = tmp_path / "a.csv"
        second = tmp_path / "b.csv"
        run_sweep(self._config(output=first))
        run_sweep(self._config(output=second, workers=3))
        assert first.read_bytes() == second.read_bytes()
        assert first.read_text().splitlines()[0] == SWEEP_HEADER_LINE

    def test_timing_recorded(self):
        records = run_sweep(self._config(timing=True, targets=(1,)))
        assert all(r.wall_time_s > 0 for r in records)

    def test_single_cell_matches_direct_pipeline(self):
        config = self._config(grids=((3, 3),), targets=(3,))
        (record,) = run_sweep(config)
        video = random_video(SMALL, seed=5)
        grid = uniform_grid(3, 3, SMALL)
        params = calibrated_params(video, grid, 4)
        report = reconstruct(grid, encode_array(video, grid, params), params, truth=video.coefficients)
        assert record.rank == report.rank
        assert record.relative_mse == report.relative_coeff_mse

    def test_supplied_video(self):
        video = random_video(SMALL, seed=99)
        config = self._config(grids=((3, 3),), targets=(3,), video=video)
        (record,) = run_sweep(config)
        assert record.relative_mse < 1e-8

    def test_failed_cell_is_recorded(self):
        video = random_video(SMALL, seed=1)
        config = self._config(beta=-10.0)
        record = run_cell(video, 3, 3, 2, config)
        assert record.rank == 0
        assert math.isnan(record.relative_mse)
        assert record.useful_pairs == 0
        assert record.error is not None
        assert "sensor 0" in record.error

    @patch("tem_video.sweep.reconstruct")
    def test_svd_failure_is_recorded(self, mock_reconstruct):
        mock_reconstruct.side_effect = np.linalg.LinAlgError("SVD did not converge")
        records = run_sweep(self._config(targets=(2,)))
        assert len(records) == 2
        for record in records:
            assert record.rank == 0
            assert math.isnan(record.relative_mse)
            assert record.error == "SVD did not converge"
            assert record.useful_pairs > 0


@pytest.mark.slow
class TestFullScaleSweeps:
    def test_spikes_sweep_shape(self):
        config = SweepConfig.preset(SweepMode.SPIKES, seed=0, timing=False, workers=4)
        cells = _by_cell(run_sweep(config))

        for t in range(1, 16):
            r = cells[(9, 5, t)]
            assert r.rank < 729
            assert r.relative_mse > 1e-2
            assert not r.condition_met_nonstrict

        # 81 sensors reach 729 useful pairs at 9 pairs each; 135 sensors at 6.
        # One pair short of the crossing the minimum-norm error is already
        # below 1e-1 (about 0.097 for 9x9, 0.065 for 9x15), so the large-error
        # side is checked two pairs short.
        for n2, crossing in ((9, 9), (15, 6)):
            assert cells[(9, n2, crossing - 2)].relative_mse > 1e-1
            for t in range(crossing + 1, 16):
                assert cells[(9, n2, t)].relative_mse < 1e-8

    def test_tems_sweep_shape(self):
        config = SweepConfig.preset(SweepMode.TEMS, seed=0, timing=False, workers=4)
        cells = _by_cell(run_sweep(config))

        def crossing(target: int) -> int:
            return min(n for n in range(5, 16) if cells[(n, n, target)].relative_mse < 1e-8)

        for n in range(5, 16):
            r = cells[(n, n, 5)]
            if r.useful_pairs >= 729:
                assert r.relative_mse < 1e-8
        assert crossing(15) >= crossing(9)
        assert cells[(5, 5, 15)].relative_mse > 1e-2

    def test_undersampled_grid_with_many_spikes(self):
        config = SweepConfig(mode=SweepMode.SPIKES, grids=((9, 5),), targets=(16, 18, 20), timing=False)
        for r in run_sweep(config):
            assert r.rank < 729
            assert r.relative_mse > 1e-2
