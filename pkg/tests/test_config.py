"""Tests for configuration module."""

import pytest
import os
from fractions import Fraction
from unittest.mock import patch
from src.config import (
    get_config,
    get_optional_env_var,
    get_required_env_var,
    load_config,
    set_config,
    validate_config,
)
from src.types import Config


def make_config(**overrides):
    config = Config(
        numeric=Config.Numeric(),
        limits=Config.Limits(),
        construction=Config.Construction(),
        run=Config.Run(),
    )
    for path, value in overrides.items():
        section, name = path.split("__")
        setattr(getattr(config, section), name, value)
    return config


class TestEnvironmentVariables:
    """Test environment variable handling."""

    def test_get_required_env_var_exists(self):
        """Test getting a required env var that exists."""
        with patch.dict(os.environ, {'TEST_VAR': 'test_value'}):
            result = get_required_env_var('TEST_VAR')
            assert result == 'test_value'

    def test_get_required_env_var_missing(self):
        """Test getting a required env var that doesn't exist."""
        with patch.dict(os.environ, {}, clear=True):
            with pytest.raises(ValueError, match="Required environment variable MISSING_VAR is not set"):
                get_required_env_var('MISSING_VAR')

    def test_get_optional_env_var_exists(self):
        """Test getting an optional env var that exists."""
        with patch.dict(os.environ, {'OPTIONAL_VAR': 'custom_value'}):
            result = get_optional_env_var('OPTIONAL_VAR', 'default_value')
            assert result == 'custom_value'

    def test_get_optional_env_var_missing(self):
        """Test getting an optional env var that doesn't exist returns default."""
        with patch.dict(os.environ, {}, clear=True):
            result = get_optional_env_var('MISSING_VAR', 'default_value')
            assert result == 'default_value'


class TestLoadConfig:
    """Test configuration loading."""

    def test_load_config_defaults(self):
        """Test loading config with no environment variables set."""
        with patch.dict(os.environ, {}, clear=True), patch("src.config.load_dotenv"):
            config = load_config()

        assert config.numeric.tolerance == 1e-9
        assert config.numeric.lp_tolerance == 1e-6
        assert config.limits.vertex_cap == 10_000_000
        assert config.limits.enumeration_limit == 1000
        assert config.construction.include_root_pair is True
        assert config.construction.laakso_threshold == Fraction(1, 2)
        assert config.construction.delta == Fraction(2)
        assert config.run.seed == 0
        assert config.run.samples == 10_000
        assert config.run.log_level == 'INFO'
        assert config.run.include_timings is False

    def test_load_config_with_overrides(self):
        """Test loading config with custom values."""
        env_vars = {
            'RNP_LAAKSO_THRESHOLD': '1/3',
            'RNP_VERTEX_CAP': '500',
            'RNP_INCLUDE_ROOT_PAIR': 'false',
            'RNP_LOG_LEVEL': 'debug',
            'RNP_INCLUDE_TIMINGS': 'yes',
            'RNP_SEED': '42',
        }

        with patch.dict(os.environ, env_vars, clear=True), patch("src.config.load_dotenv"):
            config = load_config()

        assert config.construction.laakso_threshold == Fraction(1, 3)
        assert config.limits.vertex_cap == 500
        assert config.construction.include_root_pair is False
        assert config.run.log_level == 'DEBUG'
        assert config.run.include_timings is True
        assert config.run.seed == 42

    def test_load_config_malformed_integer(self):
        """Test a non-numeric cap is rejected with the variable name."""
        with patch.dict(os.environ, {'RNP_VERTEX_CAP': 'many'}, clear=True), patch("src.config.load_dotenv"):
            with pytest.raises(ValueError, match="RNP_VERTEX_CAP is not an integer"):
                load_config()

    def test_load_config_malformed_fraction(self):
        """Test a threshold that is not a rational is rejected."""
        with patch.dict(os.environ, {'RNP_LAAKSO_THRESHOLD': '1/0'}, clear=True), patch("src.config.load_dotenv"):
            with pytest.raises(ValueError, match="RNP_LAAKSO_THRESHOLD is not a rational number"):
                load_config()


class TestValidateConfig:
    """Test configuration validation."""

    def test_validate_config_valid(self):
        """Test validating a valid config."""
        # Should not raise any exception
        validate_config(make_config())

    def test_validate_config_threshold_out_of_range(self):
        """Test a Laakso threshold outside (0, 1) is rejected."""
        config = make_config(construction__laakso_threshold=Fraction(1))

        with pytest.raises(ValueError, match="Invalid configuration values: RNP_LAAKSO_THRESHOLD"):
            validate_config(config)

    def test_validate_config_multiple_invalid_fields(self):
        """Test every offending variable is named."""
        config = make_config(limits__vertex_cap=0, numeric__tolerance=-1.0, construction__delta=Fraction(1, 2))

        with pytest.raises(ValueError, match="RNP_TOLERANCE, RNP_VERTEX_CAP, RNP_DELTA"):
            validate_config(config)


class TestGlobalConfig:
    """Test the global configuration instance."""

    def test_set_config_installs_overrides(self):
        """Test an installed config is returned by get_config."""
        config = make_config(run__seed=7)
        set_config(config)

        assert get_config() is config
        assert get_config().run.seed == 7

    def test_set_config_rejects_invalid(self):
        """Test installing an invalid config raises."""
        with pytest.raises(ValueError, match="RNP_SAMPLES"):
            set_config(make_config(run__samples=-1))

    def test_get_config_reloads_after_reset(self):
        """Test resetting to None reloads from the environment."""
        with patch.dict(os.environ, {'RNP_SEED': '11'}, clear=True), patch("src.config.load_dotenv"):
            set_config(None)
            assert get_config().run.seed == 11
