"""
Utility functions shared by the detectors and the command line front end
"""

from pathlib import Path
import math
import platform
import re
from typing import Iterable

_NUMBER_CHUNK = re.compile(r"(\d+)")


def get_resource_path(relative_path: str) -> Path:
    """
    Get the absolute path to a bundled resource file.
    Works both from a source checkout and from an installed package.

    Args:
        relative_path (str): Path relative to the resources directory

    Returns:
        Path: Absolute path to the resource file
    """
    return Path(__file__).parent / "resources" / relative_path


def natural_key(identifier: str) -> tuple:
    """
    Sort key that orders dotted ids numerically ("7.2" before "7.11").

    Args:
        identifier (str): Component, DA or node id

    Returns:
        tuple: Comparable key; digit runs compare as integers
    """
    parts = _NUMBER_CHUNK.split(str(identifier))
    return tuple((0, int(p), "") if p.isdigit() else (1, 0, p) for p in parts if p != "")


def natural_sorted(identifiers: Iterable[str]) -> list[str]:
    """Return ids sorted with natural_key."""
    return sorted(identifiers, key=natural_key)


def round_half_away(value: float) -> int:
    """Round to the nearest integer, halves away from zero (2.5 -> 3, -2.5 -> -3)."""
    return int(math.copysign(math.floor(abs(value) + 0.5), value))


def clamp(value: float, low: float | None, high: float | None) -> float:
    """Clamp value into [low, high]; a None bound is open."""
    if low is not None and value < low:
        return low
    if high is not None and value > high:
        return high
    return value


def filename_with_suffix(filename: str, suffix: str) -> str:
    """
    Append suffix to filename unless already present

    Args:
        filename (str): Original filename
        suffix (str): Suffix to append ("csv" or ".csv")

    Returns:
        str: Filename ending with the suffix
    """
    if not suffix.startswith("."):
        suffix = "." + suffix

    if filename.endswith(suffix):
        return filename

    return filename + suffix


def get_system_info() -> dict:
    """
    Get system information for debug logging

    Returns:
        dict: Dictionary with system information
    """
    return {
        "system": platform.system(),
        "release": platform.release(),
        "machine": platform.machine(),
        "python_version": platform.python_version(),
    }
