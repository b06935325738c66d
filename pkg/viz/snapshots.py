"""Snapshot CSV loading with strict header validation."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

EXPECTED_HEADER = ("x,n_plus,ux_plus,uy_plus,uz_plus,"
                   "n_minus,ux_minus,uy_minus,uz_minus,v_int,v_total,t")
COLUMNS = EXPECTED_HEADER.split(",")


class SnapshotFormatError(Exception):
    pass


@dataclass(frozen=True)
class SnapshotFrame:
    """Parsed columns of one snapshot file."""

    path: Path
    t: float
    x: np.ndarray
    n_plus: np.ndarray
    ux_plus: np.ndarray
    uy_plus: np.ndarray
    uz_plus: np.ndarray
    n_minus: np.ndarray
    ux_minus: np.ndarray
    uy_minus: np.ndarray
    uz_minus: np.ndarray
    v_int: np.ndarray
    v_total: np.ndarray

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])


def load_frame(path: Path) -> SnapshotFrame:
    """Parse one snapshot; the header must match the producer contract exactly."""
    lines = path.read_text().splitlines()
    if not lines:
        raise SnapshotFormatError(f"{path}: empty file")
    header = lines[0].split(",")
    if header != COLUMNS:
        for want in COLUMNS:
            if want not in header:
                raise SnapshotFormatError(f"{path}: missing column '{want}'")
        raise SnapshotFormatError(f"{path}: header does not match '{EXPECTED_HEADER}'")
    try:
        data = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
    except ValueError as exc:
        raise SnapshotFormatError(f"{path}: malformed row: {exc}") from None
    if data.ndim != 2 or data.shape[1] != len(COLUMNS) or data.shape[0] < 2:
        raise SnapshotFormatError(f"{path}: expected >=2 rows of {len(COLUMNS)} columns")
    cols = {name: data[:, k] for k, name in enumerate(COLUMNS)}
    t = cols.pop("t")
    return SnapshotFrame(path=path, t=float(t[0]), **cols)


def load_run(directory: Path) -> list[SnapshotFrame]:
    """All snap_*.csv frames of a run directory ordered by filename index."""
    files = sorted(directory.glob("snap_*.csv"))
    if not files:
        raise SnapshotFormatError(f"{directory}: no snap_*.csv files")
    return [load_frame(f) for f in files]
