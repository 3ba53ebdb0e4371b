"""Snapshot persistence.

Binary snapshots use a small fixed header followed by the two density
arrays in row-major float64, always little-endian so files written on
any host read back identically everywhere. Writers go through a
`.partial` rename so a crash never leaves a truncated file under the
final name.
"""

from __future__ import annotations

import os
import struct
import tempfile

import numpy as np

from .dynamics import SimState
from .errors import SnapshotError
from .grid import Grid, GridSpec, make_grid

__all__ = ["MAGIC", "write_snapshot", "read_snapshot", "write_profile_csv", "atomic_write"]

MAGIC = b"BDF1"

# magic, dimension, cells per axis, reserved, half-width, time
_HEADER = struct.Struct("<4sIIIdd")

assert _HEADER.size == 32


def atomic_write(path: str, payload: bytes) -> None:
    """Write bytes to path via a same-directory temp file and rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".partial")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_snapshot(path: str, state: SimState, grid: Grid) -> None:
    header = _HEADER.pack(
        MAGIC, grid.dimension, grid.cells, 0, grid.half_width, state.t
    )
    u = np.ascontiguousarray(state.u, dtype="<f8")
    v = np.ascontiguousarray(state.v, dtype="<f8")
    if u.shape != grid.shape or v.shape != grid.shape:
        raise SnapshotError(
            f"snapshot shape {u.shape}/{v.shape} does not match grid {grid.shape}"
        )
    atomic_write(path, header + u.tobytes() + v.tobytes())


def read_snapshot(path: str) -> tuple:
    """Read a snapshot; returns (state, grid)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise SnapshotError(f"{path}: truncated header ({len(raw)} bytes)")
    magic, dimension, cells, _, half_width, t = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise SnapshotError(f"{path}: bad magic {magic!r}")
    grid = make_grid(GridSpec(dimension=dimension, half_width=half_width, cells=cells))
    count = cells**dimension
    expect = _HEADER.size + 2 * 8 * count
    if len(raw) != expect:
        raise SnapshotError(f"{path}: expected {expect} bytes, found {len(raw)}")
    flat = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size, count=2 * count)
    u = flat[:count].reshape(grid.shape).astype(np.float64)
    v = flat[count:].reshape(grid.shape).astype(np.float64)
    return SimState(t=t, u=u, v=v), grid


def write_profile_csv(path: str, state: SimState, grid: Grid) -> None:
    """Plain-text 1d profile: index, center coordinate, u, v, total."""
    if grid.dimension != 1:
        raise SnapshotError("csv profile export is defined for 1d grids only")
    x = grid.centers[0]
    lines = [f"# t = {state.t!r}", "i,x,u,v,total"]
    for i in range(grid.cells):
        # plain floats: numpy scalars repr as np.float64(...) since 2.0
        u, v = float(state.u[i]), float(state.v[i])
        lines.append(f"{i},{float(x[i])!r},{u!r},{v!r},{u + v!r}")
    atomic_write(path, ("\n".join(lines) + "\n").encode())
