#!/usr/bin/env python3

import json
import logging
import math
from enum import Enum
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np
import pandas as pd

from ring_dynamics.errors import IoError

logger = logging.getLogger(__name__)

CSV_DIGITS = 17


def ensure_dir(path: Path) -> Path:
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise IoError(f"cannot create output directory {path}: {e}")
    return path


def write_table(path: Path, header: Sequence[str], columns: Sequence[Any], digits: int = CSV_DIGITS) -> Path:
    """Fixed-format CSV: '%.<digits>g', ',' separator, '\\n' newlines, NaN as empty cell"""
    if len(header) != len(columns):
        raise ValueError(f"{len(header)} column names for {len(columns)} columns")
    for name, column in zip(header, columns):
        if np.iscomplexobj(column):
            raise ValueError(f"column '{name}' is complex; split it into _re/_im columns")

    frame = pd.DataFrame({name: np.asarray(column) for name, column in zip(header, columns)})
    path = Path(path)
    ensure_dir(path.parent)
    try:
        frame.to_csv(path, index=False, float_format=f"%.{digits}g", na_rep="", lineterminator="\n")
    except OSError as e:
        raise IoError(f"cannot write {path}: {e}")
    logger.debug(f"Wrote {len(frame)} rows to {path}")
    return path


def write_mapping(path: Path, table: Mapping[str, Any], digits: int = CSV_DIGITS) -> Path:
    return write_table(path, list(table.keys()), list(table.values()), digits)


def to_plain(value: Any) -> Any:
    """numpy, Path, Enum and complex values converted to JSON-native types; NaN/inf become null"""
    if isinstance(value, Mapping):
        return {str(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_plain(value.tolist())
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        return {"re": to_plain(float(value.real)), "im": to_plain(float(value.imag))}
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def write_json(path: Path, payload: Any) -> Path:
    path = Path(path)
    ensure_dir(path.parent)
    try:
        with open(path, 'w', encoding="utf-8", newline="\n") as f:
            json.dump(to_plain(payload), f, indent=2, sort_keys=True)
            f.write("\n")
    except OSError as e:
        raise IoError(f"cannot write {path}: {e}")
    logger.debug(f"Wrote {path}")
    return path
