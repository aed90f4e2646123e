"""Declarative INI configuration for experiments."""

from __future__ import annotations

import configparser
import logging
import os
from typing import Any

SECTIONS = ("experiment", "solver", "case1", "case2", "case3", "benchmark")


def convert_value(val: Any) -> Any:
    """Convert a config value string to the appropriate Python type.

    Args:
        val: Value to convert (typically a string read from the INI file).

    Returns:
        Converted value: bool, int, float, a list of converted values for
        comma-separated input, or the original string.
    """
    if not isinstance(val, str):
        return val

    val = val.strip()
    if "," in val:
        return [convert_value(item) for item in val.split(",") if item.strip()]
    val_lower = val.lower()
    if val_lower in ("true", "yes", "on"):
        return True
    elif val_lower in ("false", "no", "off"):
        return False
    elif val.lstrip("-").isdigit():
        return int(val)
    try:
        return float(val)
    except ValueError:
        return val


def load_config(path: str | None) -> dict[str, dict[str, Any]]:
    """Read an experiment config file.

    Args:
        path: INI file path, or None for no file.

    Returns:
        Mapping section -> option -> converted value. Unknown sections are
        ignored with a warning.

    Raises:
        FileNotFoundError: If path is given but does not exist.
        ValueError: If the file cannot be parsed.
    """
    settings: dict[str, dict[str, Any]] = {section: {} for section in SECTIONS}
    if path is None:
        return settings
    if not os.path.isfile(path):
        raise FileNotFoundError(f"Config file not found: {path}")

    parser = configparser.ConfigParser()
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as e:
        raise ValueError(f"Could not parse config file {path}: {e}") from e

    for section in parser.sections():
        if section not in settings:
            logging.warning(f"Ignoring unknown config section [{section}] in {path}")
            continue
        for option, raw in parser.items(section):
            settings[section][option.replace("-", "_")] = convert_value(raw)
    logging.debug(f"Loaded config {path}: {settings}")
    return settings


def resolve(flag: Any, file_value: Any, default: Any) -> Any:
    """Pick a setting: an explicitly given flag, then the config file, then the default."""
    if flag is not None:
        return flag
    if file_value is not None:
        return file_value
    return default
