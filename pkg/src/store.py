import csv
import fcntl
import io
import json
import logging
import os
from pathlib import Path
from typing import Dict, Iterable, List, Optional

from .config import settings
from .models import ExperimentConfig, ExperimentRecord

logger = logging.getLogger(__name__)

CSV_COLUMNS = [
    "family", "n", "f", "d", "m_colors", "s_steps", "estimate", "exact", "abs_error", "bound", "ratio", "seconds",
    "task", "coloring", "norm", "bound_kind", "bound_label", "oracle_skipped", "nnz", "schema",
]


def format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, complex):
        if value.imag == 0:
            return f"{value.real:.17g}"
        return f"{value.real:.17g}{value.imag:+.17g}j"
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def record_row(record: ExperimentRecord) -> List[str]:
    data = record.model_dump()
    data["schema"] = settings.CSV_SCHEMA_VERSION
    return [format_value(data[col]) for col in CSV_COLUMNS]


def render_csv(records: Iterable[ExperimentRecord], header: bool = True) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if header:
        writer.writerow(CSV_COLUMNS)
    for record in records:
        writer.writerow(record_row(record))
    return buf.getvalue()


class ResultStore:
    """Atomic CSV / JSON persistence of experiment results."""

    def __init__(self, path: str):
        self.path = Path(path)
        self.read_only = False

    def load_rows(self) -> List[Dict[str, str]]:
        if not self.path.exists():
            logger.info(f"No results file found at {self.path}")
            return []
        try:
            with open(self.path, "r", newline="") as f:
                return list(csv.DictReader(f))
        except (OSError, csv.Error) as e:
            logger.error(f"Failed to load results from {self.path}: {e}", exc_info=True)
            return []

    def _atomic_write(self, target: Path, text: str) -> bool:
        if not settings.PERSIST_ENABLED or self.read_only:
            return False

        tmp_path = target.with_suffix(target.suffix + ".tmp")
        try:
            target.parent.mkdir(parents=True, exist_ok=True)
            with open(tmp_path, "w", newline="") as f:
                try:
                    fcntl.flock(f, fcntl.LOCK_EX | fcntl.LOCK_NB)
                except BlockingIOError:
                    logger.warning(f"Could not acquire lock for {target}. Skipping write.")
                    return False

                try:
                    f.write(text)
                    f.flush()
                    os.fsync(f.fileno())
                finally:
                    fcntl.flock(f, fcntl.LOCK_UN)

            os.rename(tmp_path, target)
            return True

        except OSError as e:
            logger.error(f"Failed to write {target}: {e}")
            self.read_only = True
            return False

    def write_records(self, records: Iterable[ExperimentRecord]) -> bool:
        return self._atomic_write(self.path, render_csv(records))

    def write_manifest(self, config: ExperimentConfig, n_records: int, extra: Optional[dict] = None) -> bool:
        manifest = {
            "schema": settings.CSV_SCHEMA_VERSION,
            "label": config.label or settings.RUN_LABEL,
            "records": n_records,
            "config": config.model_dump(mode="json"),
        }
        if extra:
            manifest.update(extra)
        return self._atomic_write(self.path.with_suffix(".json"), json.dumps(manifest, indent=2))
