"""Initial-condition presets.

All presets produce nonnegative species supported (where applicable)
in the inner half of the box, with the initial pressure never above
the homeostatic value, so every run they seed starts admissible.
"""

from __future__ import annotations

import numpy as np

from .dynamics import ModelParams, SimState
from .grid import Grid

__all__ = ["PRESET_IDS", "PRESET_DEFAULTS", "bump_profile", "build_initial_state"]

PRESET_IDS = ("vacuum", "homeostatic", "gaussian-pair", "separated-bumps")

# resolved parameter defaults; empty for the parameter-free presets
PRESET_DEFAULTS = {
    "vacuum": {},
    "homeostatic": {},
    "gaussian-pair": {"width": 0.7, "separation": 1.0, "peak_fraction": 0.8},
    "separated-bumps": {"width": 0.5, "separation": 3.0, "peak_fraction": 0.6},
}

# support radius of a bump in units of its width
SUPPORT_FACTOR = 3.0


def bump_profile(grid: Grid, center, width: float) -> np.ndarray:
    """Gaussian-like compactly supported bump with unit peak.

    exp(-(r^2 / 2 w^2) / (1 - (r/R)^2)) inside r < R = 3w and zero
    outside: a Gaussian core that shuts off smoothly at finite radius,
    so the field is exactly zero near the periodic seam.
    """
    if width <= 0:
        raise ValueError(f"bump width must be > 0, got {width}")
    if np.isscalar(center):
        center = (center,) * grid.dimension
    R = SUPPORT_FACTOR * width
    if grid.dimension == 1:
        r2 = (grid.centers[0] - center[0]) ** 2
    else:
        r2 = (grid.centers[0] - center[0])[:, None] ** 2 + (
            grid.centers[1] - center[1]
        )[None, :] ** 2
    out = np.zeros(grid.shape)
    s2 = r2 / R**2
    inside = s2 < 1.0
    out[inside] = np.exp(-(r2[inside] / (2.0 * width**2)) / (1.0 - s2[inside]))
    return out


def _check_support(preset: str, grid: Grid, offset: float, width: float) -> None:
    reach = abs(offset) + SUPPORT_FACTOR * width
    if reach > 0.5 * grid.half_width + 1e-12:
        raise ValueError(
            f"preset {preset!r} reaches |x| = {reach}, outside the inner half-box "
            f"of half-width {0.5 * grid.half_width}; enlarge L or shrink the bumps"
        )


def build_initial_state(
    preset: str,
    grid: Grid,
    params: ModelParams,
    width: float | None = None,
    separation: float | None = None,
    peak_fraction: float | None = None,
) -> SimState:
    """Construct the initial species pair for a named preset.

    gaussian-pair places one bump per species at -separation/2 and
    +separation/2 on the first axis; separated-bumps is the same shape
    with defaults far enough apart that the supports are disjoint.
    peak_fraction sets max p0 = peak_fraction * p_H and must not
    exceed 1, since admissible data cannot start above p_H.
    """
    zeros = np.zeros(grid.shape)
    if preset == "vacuum":
        return SimState(t=0.0, u=zeros, v=zeros.copy())
    if preset == "homeostatic":
        level = 0.5 * params.p_H ** (1.0 / params.gamma)
        return SimState(t=0.0, u=np.full(grid.shape, level), v=np.full(grid.shape, level))
    if preset not in ("gaussian-pair", "separated-bumps"):
        raise ValueError(f"unknown preset {preset!r}; choose one of {PRESET_IDS}")

    defaults = PRESET_DEFAULTS[preset]
    width = defaults["width"] if width is None else width
    separation = defaults["separation"] if separation is None else separation
    peak_fraction = defaults["peak_fraction"] if peak_fraction is None else peak_fraction

    if not 0 < peak_fraction <= 1.0:
        raise ValueError(
            f"preset {preset!r}: peak_fraction {peak_fraction} would give "
            f"max p0 = {peak_fraction} * p_H, violating the bound p0 <= p_H"
        )
    if separation < 0:
        raise ValueError(f"separation must be >= 0, got {separation}")
    _check_support(preset, grid, 0.5 * separation, width)

    fu = bump_profile(grid, -0.5 * separation, width)
    fv = bump_profile(grid, +0.5 * separation, width)
    peak_total = float(np.max(fu + fv))
    amplitude = (peak_fraction * params.p_H) ** (1.0 / params.gamma) / peak_total
    return SimState(t=0.0, u=amplitude * fu, v=amplitude * fv)
