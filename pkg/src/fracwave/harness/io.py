"""CSV emission.  Every file has a header row and 17 significant digits."""

from __future__ import annotations

import os
import tempfile
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

FMT = "%.17g"


def write_csv(path: str | Path, columns: Mapping[str, Sequence]) -> Path:
    """Write equal-length columns to ``path`` atomically (temp file + rename)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(columns)
    data = np.column_stack([np.asarray(columns[c], dtype=float) for c in names]) if names else np.empty((0, 0))
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(",".join(names) + "\n")
            for row in data:
                fh.write(",".join(FMT % x for x in row) + "\n")
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise
    return path


def read_csv(path: str | Path) -> dict[str, np.ndarray]:
    with open(path) as fh:
        names = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return {name: data[:, i] for i, name in enumerate(names)}


def write_snapshot(path, x, v, sigma) -> Path:
    return write_csv(path, {"x": x, "v": v, "sigma": sigma})


def write_station(path, t, v, sigma) -> Path:
    return write_csv(path, {"t": t, "v": v, "sigma": sigma})


def snapshot_name(t: float) -> str:
    return f"snapshot_t{t * 1e3:.2f}ms.csv"
