"""Configuration loading from environment variables."""

from __future__ import annotations

import os

from dataclasses import dataclass

from dotenv import load_dotenv

from .errors import ConfigError


# Load .env once at import time.  Existing environment variables take
# precedence over values defined in .env (the python-dotenv default).
load_dotenv()


def _parse_float(name: str, default: float) -> float:
    raw = os.environ.get(name)
    if raw is None or not raw.strip():
        return default
    try:
        return float(raw)
    except ValueError as e:
        raise ConfigError(f"{name} must be a number, got {raw!r}") from e


def _parse_int(name: str, default: int, *, minimum: int | None = None) -> int:
    raw = os.environ.get(name)
    if raw is None or not raw.strip():
        return default
    try:
        value = int(raw)
    except ValueError as e:
        raise ConfigError(f"{name} must be an integer, got {raw!r}") from e
    if minimum is not None and value < minimum:
        raise ConfigError(f"{name} must be >= {minimum}, got {value}")
    return value


@dataclass(frozen=True)
class Settings:
    """Application settings loaded from environment variables."""

    rcond: float
    kappa: float
    seed: int
    workers: int
    log_level: str
    log_format: str


_settings: Settings | None = None


def get_settings() -> Settings:
    """Load settings from environment variables (cached after first call)."""
    global _settings
    if _settings is not None:
        return _settings

    rcond = _parse_float("TEM_VIDEO_RCOND", 1e-10)
    if not 0.0 < rcond < 1.0:
        raise ConfigError(f"TEM_VIDEO_RCOND must lie in (0, 1), got {rcond}")
    kappa = _parse_float("TEM_VIDEO_KAPPA", 1.0)
    if kappa <= 0.0:
        raise ConfigError(f"TEM_VIDEO_KAPPA must be positive, got {kappa}")

    _settings = Settings(
        rcond=rcond,
        kappa=kappa,
        seed=_parse_int("TEM_VIDEO_SEED", 0),
        workers=_parse_int("TEM_VIDEO_WORKERS", 1, minimum=1),
        log_level=os.environ.get("LOG_LEVEL", "INFO"),
        log_format=os.environ.get("LOG_FORMAT", "auto"),
    )
    return _settings


def reset_settings() -> None:
    """Reset cached settings (useful for testing)."""
    global _settings
    _settings = None
