"""Configuration management for the certification toolkit."""

import os
from fractions import Fraction
from typing import List, Optional

from dotenv import load_dotenv

from .types import Config

_TRUE_VALUES = {"1", "true", "yes", "on"}


def get_required_env_var(name: str) -> str:
    """Get a required environment variable."""
    value = os.getenv(name)
    if not value:
        raise ValueError(f"Required environment variable {name} is not set")
    return value


def get_optional_env_var(name: str, default: str) -> str:
    """Get an optional environment variable with a default value."""
    return os.getenv(name, default)


def _parse_bool(name: str, raw: str) -> bool:
    return raw.strip().lower() in _TRUE_VALUES


def _parse_fraction(name: str, raw: str) -> Fraction:
    try:
        return Fraction(raw.strip())
    except (ValueError, ZeroDivisionError) as error:
        raise ValueError(f"Environment variable {name} is not a rational number: {raw!r}") from error


def _parse_int(name: str, raw: str) -> int:
    try:
        return int(raw.strip())
    except ValueError as error:
        raise ValueError(f"Environment variable {name} is not an integer: {raw!r}") from error


def _parse_float(name: str, raw: str) -> float:
    try:
        return float(raw.strip())
    except ValueError as error:
        raise ValueError(f"Environment variable {name} is not a number: {raw!r}") from error


def load_config() -> Config:
    """Load configuration from environment variables."""
    # Load environment variables from .env file if it exists
    load_dotenv()

    config = Config(
        numeric=Config.Numeric(
            tolerance=_parse_float("RNP_TOLERANCE", get_optional_env_var("RNP_TOLERANCE", "1e-9")),
            lp_tolerance=_parse_float(
                "RNP_LP_TOLERANCE", get_optional_env_var("RNP_LP_TOLERANCE", "1e-6")
            ),
        ),
        limits=Config.Limits(
            vertex_cap=_parse_int("RNP_VERTEX_CAP", get_optional_env_var("RNP_VERTEX_CAP", "10000000")),
            enumeration_limit=_parse_int(
                "RNP_ENUMERATION_LIMIT", get_optional_env_var("RNP_ENUMERATION_LIMIT", "1000")
            ),
        ),
        construction=Config.Construction(
            include_root_pair=_parse_bool(
                "RNP_INCLUDE_ROOT_PAIR", get_optional_env_var("RNP_INCLUDE_ROOT_PAIR", "true")
            ),
            laakso_threshold=_parse_fraction(
                "RNP_LAAKSO_THRESHOLD", get_optional_env_var("RNP_LAAKSO_THRESHOLD", "1/2")
            ),
            delta=_parse_fraction("RNP_DELTA", get_optional_env_var("RNP_DELTA", "2")),
        ),
        run=Config.Run(
            seed=_parse_int("RNP_SEED", get_optional_env_var("RNP_SEED", "0")),
            samples=_parse_int("RNP_SAMPLES", get_optional_env_var("RNP_SAMPLES", "10000")),
            log_level=get_optional_env_var("RNP_LOG_LEVEL", "INFO").upper(),
            include_timings=_parse_bool(
                "RNP_INCLUDE_TIMINGS", get_optional_env_var("RNP_INCLUDE_TIMINGS", "false")
            ),
        ),
    )

    return config


def validate_config(config: Config) -> None:
    """Validate that every configured value is in range."""
    checks = [
        (config.numeric.tolerance >= 0, "RNP_TOLERANCE"),
        (config.numeric.lp_tolerance >= 0, "RNP_LP_TOLERANCE"),
        (config.limits.vertex_cap > 0, "RNP_VERTEX_CAP"),
        (config.limits.enumeration_limit >= 0, "RNP_ENUMERATION_LIMIT"),
        (0 < config.construction.laakso_threshold < 1, "RNP_LAAKSO_THRESHOLD"),
        (config.construction.delta >= 1, "RNP_DELTA"),
        (config.run.samples >= 0, "RNP_SAMPLES"),
        (config.run.log_level in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}, "RNP_LOG_LEVEL"),
    ]

    invalid_fields: List[str] = [name for ok, name in checks if not ok]

    if invalid_fields:
        raise ValueError(f"Invalid configuration values: {', '.join(invalid_fields)}")


# Global config instance
config: Optional[Config] = None


def get_config() -> Config:
    """Get the global configuration instance."""
    global config
    if config is None:
        config = load_config()
        validate_config(config)
    return config


def set_config(new_config: Optional[Config]) -> None:
    """Install a configuration (CLI overrides); ``None`` forces a reload."""
    global config
    if new_config is not None:
        validate_config(new_config)
    config = new_config
