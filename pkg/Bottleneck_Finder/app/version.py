"""
Version retrieval for Bottleneck Finder.

Order of resolution:
1. _version.py written by setuptools-scm at install time
2. `git describe` for source checkouts
3. "unknown"
"""

import logging
from pathlib import Path

logger = logging.getLogger("BottleneckFinder.version")

_version_source: str = "unknown"
_version_details: list[str] = []


def _get_version_from_scm_file() -> str | None:
    """Try the setuptools-scm generated module."""
    try:
        from . import _version
        _version_details.append(f"setuptools-scm version: {_version.version}")
        return _version.version
    except ImportError as e:
        _version_details.append(f"setuptools-scm _version.py not found: {e}")
        return None


def _find_git_root(start: Path) -> Path | None:
    current = start.resolve()
    while True:
        if (current / ".git").exists():
            return current
        if current.parent == current:
            return None
        current = current.parent


def _get_version_from_git() -> str | None:
    """Try `git describe` from the enclosing checkout."""
    import subprocess  # development only

    git_dir = _find_git_root(Path(__file__).parent)
    if git_dir is None:
        _version_details.append("no .git directory above the package")
        return None

    try:
        result = subprocess.run(
            ["git", "describe", "--tags", "--always"],
            cwd=git_dir,
            capture_output=True,
            text=True,
            timeout=5,
        )
    except (subprocess.SubprocessError, OSError) as e:
        _version_details.append(f"git describe failed: {e}")
        return None

    if result.returncode != 0:
        _version_details.append(f"git describe returned {result.returncode}: {result.stderr.strip()}")
        return None

    version = result.stdout.strip().removeprefix("v")
    _version_details.append(f"git version: {version}")
    return version


def get_version() -> str:
    """Get the application version.

    Returns:
        Version string from setuptools-scm, git, or "unknown".
    """
    global _version_source

    for source, resolver in (("setuptools-scm", _get_version_from_scm_file),
                             ("git", _get_version_from_git)):
        version = resolver()
        if version:
            _version_source = source
            return version

    _version_source = "fallback"
    return "unknown"


def log_version_info() -> None:
    """Log how the version was resolved. Call after logging is configured."""
    logger.debug(f"Version resolution source: {_version_source}")
    for detail in _version_details:
        logger.debug(f"  {detail}")

    if _version_source == "fallback":
        logger.debug(f"Version is '{__version__}' (could not determine from git or setuptools-scm)")
    else:
        logger.info(f"Version resolved from {_version_source}: {__version__}")


__version__ = get_version()
