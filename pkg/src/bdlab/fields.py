"""Cell-centered fields and the discrete calculus built on them.

A field is a plain ndarray shaped like ``grid.shape``.  A face field
stacks one array per axis, ``(d, *grid.shape)``; entry ``[a, i]`` lives
on the face between cell ``i`` and cell ``i+1`` along axis ``a``
(periodic wrap).  Gradients are face-centered forward differences and
divergence is the adjoint backward difference, so summation by parts is
exact and their composition is the classical 3/5-point Laplacian.
"""

from __future__ import annotations

import math

import numpy as np

from .grid import Grid

__all__ = [
    "pressure_field",
    "gradient",
    "divergence",
    "laplacian",
    "integrate",
    "lq_norm",
    "lq_spacetime_norm",
    "second_moment",
    "shift_modulus",
]


def pressure_field(u: np.ndarray, v: np.ndarray, gamma: float) -> np.ndarray:
    """Power-law pressure p = (u + v)**gamma.

    Both densities must be nonnegative; a negative entry is reported
    with its cell index since it always indicates an upstream bug.
    """
    for name, f in (("u", u), ("v", v)):
        bad = f < 0
        if bad.any():
            idx = tuple(int(i) for i in np.unravel_index(int(np.argmax(bad)), f.shape))
            raise ValueError(f"negative density {name}[{idx}] = {f[idx]}")
    return (u + v) ** gamma


def gradient(f: np.ndarray, grid: Grid) -> np.ndarray:
    """Face-centered forward difference, one layer per axis."""
    out = np.empty((grid.dimension,) + grid.shape)
    for a in range(grid.dimension):
        out[a] = (np.roll(f, -1, axis=a) - f) / grid.dx
    return out


def divergence(faces: np.ndarray, grid: Grid) -> np.ndarray:
    """Cell-centered divergence, the negative adjoint of :func:`gradient`."""
    out = np.zeros(grid.shape)
    for a in range(grid.dimension):
        fa = faces[a]
        out += (fa - np.roll(fa, 1, axis=a)) / grid.dx
    return out


def laplacian(f: np.ndarray, grid: Grid) -> np.ndarray:
    """divergence(gradient(f)): the package's canonical discrete Laplacian."""
    return divergence(gradient(f, grid), grid)


def integrate(f: np.ndarray, grid: Grid) -> float:
    """Midpoint quadrature over the whole box."""
    return float(np.sum(f) * grid.cell_volume)


def lq_norm(f: np.ndarray, grid: Grid, q: float) -> float:
    """Discrete L^q norm; q = inf gives the max norm."""
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    if math.isinf(q):
        return float(np.max(np.abs(f))) if f.size else 0.0
    return float((np.sum(np.abs(f) ** q) * grid.cell_volume) ** (1.0 / q))


def lq_spacetime_norm(fields, dt: float, grid: Grid, q: float) -> float:
    """Space-time L^q norm of a uniformly sampled time series of fields.

    Parameters
    ----------
    fields : sequence of ndarray
        One field per output time, all on `grid`.
    dt : float
        Uniform spacing of the output times.
    q : float
        Exponent, q >= 1; q = inf returns the overall max.
    """
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    if math.isinf(q):
        return max((float(np.max(np.abs(f))) for f in fields), default=0.0)
    acc = 0.0
    for f in fields:
        acc += float(np.sum(np.abs(f) ** q))
    return float((acc * grid.cell_volume * dt) ** (1.0 / q))


def second_moment(f: np.ndarray, grid: Grid) -> float:
    """Integral of f(x) |x|^2; f must be nonnegative."""
    if (f < 0).any():
        raise ValueError("second_moment expects a nonnegative field")
    return float(np.sum(f * grid.center_r2) * grid.cell_volume)


def shift_modulus(pressures, shift, grid: Grid, dt: float) -> float:
    """Translation-continuity modulus of a pressure time series.

    Sums dt * dx^d * |p(t, x + y) - p(t, x)| over the whole box and all
    snapshots, with y = shift * dx per axis (periodic wrap).  The whole
    box is a superset of any compact evaluation window, so smallness
    here is the stronger statement.

    `shift` is an integer cell count, or one per axis in 2d; each
    component must be smaller than N/2 in magnitude so the wrapped
    translation is unambiguous.
    """
    if np.isscalar(shift):
        shifts = (int(shift),) * grid.dimension
    else:
        shifts = tuple(int(s) for s in shift)
    if len(shifts) != grid.dimension:
        raise ValueError(f"expected {grid.dimension} shift components, got {len(shifts)}")
    half = grid.cells // 2
    for s in shifts:
        if abs(s) >= half:
            raise ValueError(f"|shift| must be < N/2 = {half}, got {s}")
    acc = 0.0
    for p in pressures:
        moved = p
        for a, s in enumerate(shifts):
            if s:
                moved = np.roll(moved, -s, axis=a)
        acc += float(np.sum(np.abs(moved - p)))
    return acc * grid.cell_volume * dt
