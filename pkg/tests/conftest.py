"""Shared fixtures for tem-video tests."""

from __future__ import annotations

import pytest


@pytest.fixture(autouse=True)
def _clean_settings():
    """Reset cached settings before each test so env var changes take effect."""
    from tem_video.config import reset_settings

    reset_settings()
    yield
    reset_settings()


@pytest.fixture(autouse=True)
def _set_default_env(monkeypatch: pytest.MonkeyPatch):
    """Ensure a known baseline of env vars for all tests."""
    monkeypatch.setenv("TEM_VIDEO_RCOND", "1e-10")
    monkeypatch.setenv("TEM_VIDEO_KAPPA", "1.0")
    monkeypatch.setenv("TEM_VIDEO_SEED", "0")
    monkeypatch.setenv("TEM_VIDEO_WORKERS", "1")
    # Logging defaults for tests.
    monkeypatch.setenv("LOG_LEVEL", "WARNING")
    monkeypatch.setenv("LOG_FORMAT", "text")


@pytest.fixture(autouse=True)
def _reset_package_logger():
    """Drop handlers installed by ``main()`` so they never outlive capsys."""
    import logging

    yield
    pkg_logger = logging.getLogger("tem_video")
    pkg_logger.handlers.clear()
    pkg_logger.propagate = True
    pkg_logger.setLevel(logging.NOTSET)


@pytest.fixture
def small_params():
    """K0 = K1 = K2 = 1: 27 coefficients, J = 9, K = 3."""
    from tem_video.video_model import BandlimitParams

    return BandlimitParams(K0=1, K1=1, K2=1)


@pytest.fixture
def small_video(small_params):
    from tem_video.video_model import random_video

    return random_video(small_params, seed=7)


@pytest.fixture
def k4_params():
    """K0 = K1 = K2 = 4: 729 coefficients, J = 81, K = 9."""
    from tem_video.video_model import BandlimitParams

    return BandlimitParams(K0=4, K1=4, K2=4)
