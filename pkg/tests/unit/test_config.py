"""Unit tests for config module."""

import logging

import pytest

from pmlaplacian.lib.config import SECTIONS, convert_value, load_config, resolve


class TestConvertValue:
    """Tests for the convert_value function."""

    @pytest.mark.parametrize("raw", ["true", "True", "yes", "on"])
    def test_true_values(self, raw):
        """Test that truthy strings become True."""
        assert convert_value(raw) is True

    @pytest.mark.parametrize("raw", ["false", "NO", "off"])
    def test_false_values(self, raw):
        """Test that falsy strings become False."""
        assert convert_value(raw) is False

    def test_integer(self):
        """Test that integer strings become ints, negative ones included."""
        assert convert_value("42") == 42
        assert convert_value("-10") == -10
        assert isinstance(convert_value("7"), int)

    def test_float(self):
        """Test that decimal and scientific strings become floats."""
        assert convert_value("0.25") == 0.25
        assert convert_value("1e-8") == 1e-8
        assert convert_value("-inf") == float("-inf")

    def test_comma_list(self):
        """Test that comma-separated values become a list of converted items."""
        assert convert_value("-10, -1, 0.5") == [-10, -1, 0.5]

    def test_comma_list_of_strings(self):
        """Test that non-numeric list items stay strings."""
        assert convert_value("power_mean,agg") == ["power_mean", "agg"]

    def test_plain_string(self):
        """Test that other strings are returned stripped."""
        assert convert_value("  case2 ") == "case2"

    def test_non_string_passthrough(self):
        """Test that non-string values are returned unchanged."""
        assert convert_value(3) == 3
        assert convert_value(None) is None


class TestLoadConfig:
    """Tests for the load_config function."""

    def test_none_gives_empty_sections(self):
        """Test that no path yields every section, empty."""
        config = load_config(None)
        assert set(config) == set(SECTIONS)
        assert all(values == {} for values in config.values())

    def test_reads_and_converts(self, tmp_path):
        """Test that values are converted and dashes in option names become underscores."""
        path = tmp_path / "pml.ini"
        path.write_text(
            "[experiment]\nseed = 5\np = -10,-1,1\nmethods = power_mean,agg\n"
            "[solver]\nouter-tol = 1e-9\nsingle_thread = yes\n"
        )
        config = load_config(str(path))
        assert config["experiment"]["seed"] == 5
        assert config["experiment"]["p"] == [-10, -1, 1]
        assert config["experiment"]["methods"] == ["power_mean", "agg"]
        assert config["solver"]["outer_tol"] == 1e-9
        assert config["solver"]["single_thread"] is True

    def test_unknown_section_warns(self, tmp_path, caplog):
        """Test that an unknown section is skipped with a warning."""
        path = tmp_path / "pml.ini"
        path.write_text("[plotting]\ncolor = red\n[case2]\np_in = 0.2\n")
        with caplog.at_level(logging.WARNING):
            config = load_config(str(path))
        assert "plotting" not in config
        assert config["case2"]["p_in"] == 0.2
        assert "Ignoring unknown config section [plotting]" in caplog.text

    def test_missing_file(self, tmp_path):
        """Test that a missing file raises FileNotFoundError."""
        with pytest.raises(FileNotFoundError, match="Config file not found"):
            load_config(str(tmp_path / "absent.ini"))

    def test_unparseable_file(self, tmp_path):
        """Test that a malformed file raises ValueError."""
        path = tmp_path / "broken.ini"
        path.write_text("seed = 1\n")
        with pytest.raises(ValueError, match="Could not parse"):
            load_config(str(path))


class TestResolve:
    """Tests for the resolve function."""

    def test_flag_wins(self):
        """Test that an explicit flag beats file and default."""
        assert resolve(3, 2, 1) == 3

    def test_file_beats_default(self):
        """Test that a file value is used when no flag is given."""
        assert resolve(None, 2, 1) == 2

    def test_default_last(self):
        """Test that the default is used when nothing else is set."""
        assert resolve(None, None, 1) == 1

    def test_falsy_flag_still_wins(self):
        """Test that 0 counts as an explicit flag."""
        assert resolve(0, 2, 1) == 0
