# ============================================================================
# TABLES
# File: src/orchestrator/tables.py
# Purpose: Delimited data tables with a column-schema header, and their reader
# ============================================================================

import json
import logging
from pathlib import Path
from typing import Any, Dict, List

import pandas as pd

logger = logging.getLogger(__name__)

SCHEMA_PREFIX = "# schema: "


def _schema(frame: pd.DataFrame) -> str:
    # column names may hold commas and colons (sweep keys, measure names)
    dtypes = {str(col): str(dtype) for col, dtype in frame.dtypes.items()}
    # newer pandas infers "str" for text columns
    return json.dumps({col: "object" if dtype in ("str", "string") else dtype for col, dtype in dtypes.items()})


def write_table(path: str | Path, rows: List[Dict[str, Any]]) -> Path:
    """Write rows as CSV preceded by one '# schema: {"col": "dtype", ...}' JSON line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(rows)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(SCHEMA_PREFIX + _schema(frame) + "\n")
        frame.to_csv(f, index=False, float_format="%.17g")
    logger.debug(f"wrote table {path} ({len(frame)} rows)")
    return path


def read_table(path: str | Path) -> pd.DataFrame:
    """Read a table written by write_table, restoring the recorded dtypes."""
    path = Path(path)
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().rstrip("\n")
        if not header.startswith(SCHEMA_PREFIX):
            raise ValueError(f"{path} has no schema header")
        try:
            dtypes = json.loads(header[len(SCHEMA_PREFIX):])
        except json.JSONDecodeError as e:
            raise ValueError(f"{path} has a malformed schema header: {e}") from None
        if not dtypes:
            return pd.DataFrame()
        text_columns = {col: str for col, dtype in dtypes.items() if dtype == "object"}
        frame = pd.read_csv(f, dtype=text_columns, keep_default_na=False, na_values=["", "nan", "NaN"])
    for col, dtype in dtypes.items():
        if dtype == "object":
            continue
        elif dtype == "bool":
            frame[col] = frame[col].astype(str).str.lower().map({"true": True, "false": False})
        else:
            frame[col] = frame[col].astype(dtype)
    return frame
