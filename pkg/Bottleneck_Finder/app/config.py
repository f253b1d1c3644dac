"""
Configuration management for the detectors
"""

from dataclasses import dataclass, field, asdict, fields
import json
import logging
from pathlib import Path
from typing import Any

from app.utils import get_resource_path
from app.version import __version__

logger = logging.getLogger("BottleneckFinder.config")

OUTPUT_FORMATS = ("text", "csv", "json-report")


def _default_calibration_file() -> str:
    return str(get_resource_path("electre_calibration.json"))


@dataclass
class DetectorConfig:
    """Limits and defaults shared by every detector run.

    Values come from the dataclass defaults, then an optional JSON file,
    then explicit command line flags (see `override`).
    """

    enumeration_budget: int = 1_000_000
    mlst_exact_limit: int = 10
    cds_exact_limit: int = 10
    htnd_exact_limit: int = 8
    calibration_file: str = field(default_factory=_default_calibration_file)
    output_format: str = "text"
    workers: int = 1
    seed: int = 0

    # Non-persisted
    _config_file: Path | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self._config_file is not None:
            object.__setattr__(self, '_config_file', Path(self._config_file))
            self._load_config()
        self.check()

    @classmethod
    def load(cls, path: str | Path | None = None) -> "DetectorConfig":
        """Build a config from defaults plus an optional JSON file."""
        return cls(_config_file=Path(path) if path is not None else None)

    def check(self) -> None:
        """Validate field ranges.

        Raises:
            ValueError: if a limit is not positive or the format is unknown
        """
        for name in ("enumeration_budget", "mlst_exact_limit", "cds_exact_limit",
                     "htnd_exact_limit", "workers"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.output_format not in OUTPUT_FORMATS:
            raise ValueError(f"output_format must be one of {OUTPUT_FORMATS}, got {self.output_format!r}")

    def override(self, **values: Any) -> None:
        """Apply explicit settings; None values are ignored."""
        for key, value in values.items():
            if value is None:
                continue
            if key.startswith('_') or not hasattr(self, key):
                raise ValueError(f"unknown config field {key!r}")
            setattr(self, key, value)
        self.check()

    def _load_config(self) -> None:
        """Load configuration from the JSON file"""
        if not self._config_file.exists():
            raise FileNotFoundError(f"config file not found: {self._config_file}")

        logger.debug(f"Loading config from: {self._config_file}")
        with open(self._config_file, 'r', encoding='utf-8') as f:
            loaded_config = json.load(f)

        known = {f.name for f in fields(self) if not f.name.startswith('_')}
        for key, value in loaded_config.items():
            if key in known:
                object.__setattr__(self, key, value)
            elif key != 'app_version':
                logger.warning(f"Ignoring unknown config key: {key}")
        logger.debug(f"Config loaded successfully, {len(loaded_config)} keys")

    def to_dict(self) -> dict:
        """Public fields only."""
        return {k: v for k, v in asdict(self).items() if not k.startswith('_')}

    def save_config(self, path: str | Path | None = None) -> Path:
        """Save configuration to a JSON file.

        Args:
            path: Destination; defaults to the file the config was loaded from

        Returns:
            Path written
        """
        target = Path(path) if path is not None else self._config_file
        if target is None:
            raise ValueError("no config file to save to")
        target.parent.mkdir(parents=True, exist_ok=True)

        config_dict = self.to_dict()
        config_dict['app_version'] = __version__

        with open(target, 'w', encoding='utf-8') as f:
            json.dump(config_dict, f, indent=4)

        logger.debug(f"Config saved to: {target}")
        return target
