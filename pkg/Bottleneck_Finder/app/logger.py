"""
Logging module for Bottleneck Finder using Python's built-in logging.
Provides a ListHandler that keeps one detector run's log in memory so the
command line front end can mirror warnings and save the run next to its
reports.
"""
import logging
from collections import Counter
from datetime import datetime
from pathlib import Path
from typing import Any, Callable, List, Mapping

ROOT_LOGGER_NAME = "BottleneckFinder"


class ListHandler(logging.Handler):
    """Stores the records of one detector run.

    Callbacks see every record as it arrives; the saved log opens with a
    header describing the run (command, inputs, parameters, outcome).
    """

    def __init__(self, level: int = logging.DEBUG):
        super().__init__(level)
        self._records: List[logging.LogRecord] = []
        self._callbacks: List[Callable[[logging.LogRecord], None]] = []

        self.setFormatter(logging.Formatter(
            "[%(asctime)s] %(levelname)-7s [%(name)s] %(message)s",
            datefmt="%Y-%m-%d %H:%M:%S"
        ))

    @property
    def entries(self) -> List[str]:
        """Formatted log entries as strings."""
        return [self.format(record) for record in self._records]

    def level_counts(self) -> Counter:
        """Number of records per level name."""
        return Counter(record.levelname for record in self._records)

    def emit(self, record: logging.LogRecord) -> None:
        self._records.append(record)

        for callback in self._callbacks:
            try:
                callback(record)
            except Exception:
                pass  # a failing callback must not break logging

    def add_callback(self, callback: Callable[[logging.LogRecord], None]) -> None:
        """Register a callback to be notified of new log records."""
        self._callbacks.append(callback)

    def save(self, filepath: Path, app_version: str = "unknown",
             run_info: Mapping[str, Any] | None = None) -> Path:
        """Save the run log to a text file.

        Args:
            filepath: Path to save the log file
            app_version: Application version to include in header
            run_info: Ordered header fields describing the run, e.g.
                {"Command": "morph solve", "Inputs": "...", "Exit status": 0}

        Returns:
            Path to the saved log file
        """
        filepath = Path(filepath)
        filepath.parent.mkdir(parents=True, exist_ok=True)
        counts = self.level_counts()

        with open(filepath, 'w', encoding='utf-8') as f:
            f.write(f"Bottleneck Finder Log - Saved: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}\n")
            f.write(f"Application Version: {app_version}\n")
            for key, value in (run_info or {}).items():
                f.write(f"{key}: {value}\n")
            f.write(f"Warnings: {counts['WARNING']}, Errors: {counts['ERROR'] + counts['CRITICAL']}\n")
            f.write("=" * 60 + "\n\n")

            for entry in self.entries:
                f.write(entry + "\n")

        return filepath


def setup_logger(name: str = ROOT_LOGGER_NAME, level: int = logging.INFO) -> tuple[logging.Logger, ListHandler]:
    """Attach a fresh ListHandler to the named logger.

    Returns:
        Tuple of (logger, handler)
    """
    logger = logging.getLogger(name)
    logger.setLevel(level)

    # one run, one handler
    for handler in logger.handlers[:]:
        if isinstance(handler, ListHandler):
            logger.removeHandler(handler)

    handler = ListHandler(level)
    logger.addHandler(handler)

    return logger, handler
