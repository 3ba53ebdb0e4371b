"""Periodic uniform Cartesian grids on the box [-L, L]^d.

The box is a computational stand-in for free space: experiments keep the
data supported in the inner half of the box so the periodic wrap stays
inert, and the runner monitors how much mass ever reaches the boundary
zone.  Cell centers sit at x_i = -L + (i + 1/2) dx with dx = 2L / N, and
every quadrature in the package uses the midpoint weight dx^d.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["GridSpec", "Grid", "make_grid"]


@dataclass(frozen=True)
class GridSpec:
    """Geometry request: dimension, half-width and cells per axis."""

    dimension: int
    half_width: float
    cells: int


@dataclass(frozen=True)
class Grid:
    """Realized grid with cached centers and quadrature weight.

    Attributes
    ----------
    spec : GridSpec
        The validated request this grid was built from.
    dx : float
        Cell width, identical on every axis.
    shape : tuple of int
        Array shape of a cell-centered field, (N,) or (N, N).
    cell_volume : float
        Midpoint quadrature weight dx**d.
    centers : tuple of ndarray
        One 1d array of cell-center coordinates per axis.
    center_r2 : ndarray
        |x|^2 evaluated at every cell center, shaped like a field.
    """

    spec: GridSpec
    dx: float
    shape: tuple
    cell_volume: float
    centers: tuple
    center_r2: np.ndarray = field(repr=False)

    @property
    def dimension(self) -> int:
        return self.spec.dimension

    @property
    def half_width(self) -> float:
        return self.spec.half_width

    @property
    def cells(self) -> int:
        return self.spec.cells


def make_grid(spec: GridSpec) -> Grid:
    """Validate a :class:`GridSpec` and build the grid.

    N must be even (the spectral solver needs a clean Nyquist mode) and
    at least 16; d is 1 or 2; L is positive.
    """
    d, L, N = spec.dimension, spec.half_width, spec.cells
    if d not in (1, 2):
        raise ValueError(f"dimension must be 1 or 2, got {d}")
    if not (np.isfinite(L) and L > 0):
        raise ValueError(f"half-width must be positive, got {L}")
    if N < 16:
        raise ValueError(f"cells per axis must be >= 16, got {N}")
    if N % 2 != 0:
        raise ValueError(f"cells per axis must be even for the spectral solver, got {N}")

    dx = 2.0 * L / N
    axis = -L + (np.arange(N) + 0.5) * dx
    centers = tuple(axis.copy() for _ in range(d))
    shape = (N,) * d
    if d == 1:
        r2 = axis**2
    else:
        r2 = axis[:, None] ** 2 + axis[None, :] ** 2
    return Grid(
        spec=spec,
        dx=dx,
        shape=shape,
        cell_volume=dx**d,
        centers=centers,
        center_r2=r2,
    )
