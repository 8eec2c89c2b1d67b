# NN/Persistence.py
# ======================================================================
# Parameter files: a single .npz archive holding
#   __format__   "contract-workbench/params"
#   __version__  integer header
#   __meta__     JSON document (architecture, config, training summary)
#   <name>       one float64 array per parameter, shapes self-describing
# ======================================================================

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Mapping

import numpy as np

FORMAT = "contract-workbench/params"
VERSION = 1
_RESERVED = ("__format__", "__version__", "__meta__")


def save_params(path: Path | str, arrays: Mapping[str, np.ndarray],
                meta: Mapping[str, Any] | None = None) -> Path:
    path = Path(path)
    clash = set(arrays) & set(_RESERVED)
    if clash:
        raise ValueError(f"reserved parameter names: {sorted(clash)}")
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {name: np.asarray(value, dtype=np.float64) for name, value in arrays.items()}
    payload["__format__"] = np.array(FORMAT)
    payload["__version__"] = np.array(VERSION)
    payload["__meta__"] = np.array(json.dumps(dict(meta or {}), sort_keys=True))
    with path.open("wb") as fh:                 # keeps the exact file name
        np.savez(fh, **payload)
    return path


def load_params(path: Path | str) -> tuple[dict[str, np.ndarray], dict[str, Any]]:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"{path} does not exist")
    with np.load(path, allow_pickle=False) as archive:
        if "__format__" not in archive.files or str(archive["__format__"]) != FORMAT:
            raise ValueError(f"{path} is not a parameter file")
        version = int(archive["__version__"])
        if version != VERSION:
            raise ValueError(f"{path}: unsupported version {version} (expected {VERSION})")
        meta = json.loads(str(archive["__meta__"]))
        arrays = {name: archive[name] for name in archive.files if name not in _RESERVED}
    return arrays, meta
