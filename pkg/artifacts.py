#!/usr/bin/env python3
"""
CSV and JSON artifact writers.

Files are written to a temporary sibling and moved into place, so a reader
never sees a half-written artifact. Floats are written with repr() and JSON
keys in insertion order, which keeps repeated runs byte-identical.
"""

import csv
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Union

import numpy as np

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def format_value(value: Any) -> str:
    """Deterministic text for one CSV cell."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    return str(value)


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else str(value)
    return value


def write_csv(path: PathLike, headers: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """Write a table; returns the final path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    temp_path = path.with_suffix(path.suffix + ".tmp")
    count = 0
    try:
        with open(temp_path, 'w', newline='', encoding='utf-8') as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(list(headers))
            for row in rows:
                writer.writerow([format_value(v) for v in row])
                count += 1
        temp_path.replace(path)
    except Exception as e:
        logger.error(f"Failed to write {path}: {e}")
        temp_path.unlink(missing_ok=True)
        raise
    logger.info(f"Wrote {count} rows to {path}")
    return path


def read_csv(path: PathLike) -> List[Dict[str, str]]:
    with open(path, 'r', newline='', encoding='utf-8') as f:
        return list(csv.DictReader(f))


def write_json(path: PathLike, document: Dict[str, Any]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    temp_path = path.with_suffix(path.suffix + ".tmp")
    try:
        with open(temp_path, 'w', encoding='utf-8') as f:
            json.dump(_jsonable(document), f, indent=2)
            f.write("\n")
        temp_path.replace(path)
    except Exception as e:
        logger.error(f"Failed to write {path}: {e}")
        temp_path.unlink(missing_ok=True)
        raise
    logger.info(f"Wrote report {path}")
    return path
