"""
Atomic artifact writers.

Every file is written to a temporary sibling first and renamed into place, so
a failed run never leaves a partial artifact behind.
"""
import logging
import os
import tempfile
from pathlib import Path

import pandas as pd

logger = logging.getLogger(__name__)


def write_text_atomic(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.remove(tmp_name)
        raise
    logger.debug(f"Wrote {path}")
    return path


def write_csv_atomic(path: Path, frame: pd.DataFrame, schema: str) -> Path:
    """Write frame as CSV with a '# schema: ...' comment as the first row."""
    body = frame.to_csv(index=False, lineterminator="\n")
    return write_text_atomic(path, f"# schema: {schema}\n{body}")


def read_csv_artifact(path: Path) -> pd.DataFrame:
    """Read a CSV artifact back, skipping the schema comment."""
    return pd.read_csv(path, comment="#", dtype=str, keep_default_na=False)
