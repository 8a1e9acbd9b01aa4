"""
Data Service Layer - Cached access to saved run and sweep outputs.

This service layer provides:
- Discovery of run directories (telemetry.csv) and sweep directories
  (summary.csv + rate_table.txt) below an output root
- Cached loading of telemetry, run summaries and sweep tables
- Automatic cache invalidation when a source file's content changes
"""

import hashlib
import os
from typing import Dict, List, Tuple

import pandas as pd

from ..config.logging_config import get_logger
from ..models.telemetry import TELEMETRY_COLUMNS
from .simulation_controller import SUMMARY_FILE, TELEMETRY_FILE

# Set up logger for this module
logger = get_logger(__name__)


class RunDataService:
    """Loads run outputs for the dashboard, keyed by file content hash."""

    def __init__(self, output_root: str = "runs"):
        self.output_root = output_root
        self._data_cache: Dict[str, Tuple[str, pd.DataFrame]] = {}

    def _get_file_hash(self, filepath: str) -> str:
        """Get file hash for cache invalidation"""
        if not os.path.exists(filepath):
            return "nonexistent"

        with open(filepath, "rb") as f:
            return hashlib.md5(f.read()).hexdigest()

    def _load_csv(self, filepath: str) -> pd.DataFrame:
        if not os.path.exists(filepath):
            raise FileNotFoundError(f"Expected output file at {filepath}. Run a scenario first.")
        file_hash = self._get_file_hash(filepath)
        cached = self._data_cache.get(filepath)
        if cached is not None and cached[0] == file_hash:
            return cached[1]
        data = pd.read_csv(filepath)
        self._data_cache[filepath] = (file_hash, data)
        logger.debug(f"Loaded {filepath} ({len(data)} rows)")
        return data

    def _walk(self, marker: str) -> List[str]:
        found = []
        if not os.path.isdir(self.output_root):
            return found
        for dirpath, _, filenames in os.walk(self.output_root):
            if marker in filenames:
                found.append(os.path.relpath(dirpath, self.output_root))
        return sorted(found)

    def list_runs(self) -> List[str]:
        return self._walk(TELEMETRY_FILE)

    def list_sweeps(self) -> List[str]:
        return self._walk("rate_table.txt")

    def get_telemetry(self, run: str) -> pd.DataFrame:
        data = self._load_csv(os.path.join(self.output_root, run, TELEMETRY_FILE))
        missing = [c for c in TELEMETRY_COLUMNS if c not in data.columns]
        if missing:
            raise ValueError(f"Telemetry for run '{run}' lacks columns {missing}")
        return data

    def get_run_summary(self, run: str) -> pd.DataFrame:
        return self._load_csv(os.path.join(self.output_root, run, SUMMARY_FILE))

    def get_sweep_runs(self, sweep: str) -> pd.DataFrame:
        return self._load_csv(os.path.join(self.output_root, sweep, "runs.csv"))

    def get_success_rates(self, sweep: str) -> pd.DataFrame:
        return self._load_csv(os.path.join(self.output_root, sweep, "success_rates.csv"))

    def get_rate_table(self, sweep: str) -> str:
        path = os.path.join(self.output_root, sweep, "rate_table.txt")
        if not os.path.exists(path):
            logger.error(f"Rate table not found: {path}")
            return ""
        with open(path, "r", encoding="utf-8") as f:
            return f.read()
