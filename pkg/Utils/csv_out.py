# Utils/csv_out.py
# =====================================================================
# Every CSV the workbench writes goes through here:
#   comma separated · header row · '.' decimals · 12 significant digits
#
# Public helpers:
#   write_csv(DataFrame, path)        -> Path
#   read_csv(path)                    -> DataFrame
#   vector_columns(n) / frame_vectors(df, n)
# =====================================================================

from __future__ import annotations

from pathlib import Path

import numpy as np
import pandas as pd

FLOAT_FORMAT = "%.12g"


def write_csv(df: pd.DataFrame, path: Path | str) -> Path:
    """Write `df` with the fixed CSV dialect; parent folders are created."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, sep=",", float_format=FLOAT_FORMAT)
    return path


def read_csv(path: Path | str) -> pd.DataFrame:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"{path} does not exist")
    return pd.read_csv(path)


# ---------------------------------------------------------------------
def vector_columns(n: int) -> list[str]:
    return [f"s{i}" for i in range(n)]


def frame_vectors(df: pd.DataFrame) -> np.ndarray:
    """Stack the s0…s{n-1} columns of a states file into an (rows, n) array."""
    cols = [c for c in df.columns if c.startswith("s") and c[1:].isdigit()]
    cols.sort(key=lambda c: int(c[1:]))
    if not cols:
        raise ValueError("states file has no s0…sN columns")
    return df[cols].to_numpy(dtype=np.float64)
