"""Experiment configuration: flat key=value text with [section] headers.

Parsing is all-or-nothing and reports every violation at once, so a
config can be repaired in a single edit instead of error by error.
The effective (fully defaulted) form of a parsed config can be
rendered back to text; the runners drop that next to their outputs so
any artifact directory is reproducible on its own.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass

from .dynamics import ModelParams, SimState, _REACTIONS
from .errors import ConfigError
from .grid import Grid, GridSpec, make_grid
from .presets import PRESET_DEFAULTS, PRESET_IDS, build_initial_state

__all__ = [
    "InitSpec",
    "RegSpec",
    "OutputSpec",
    "ExperimentConfig",
    "parse_config",
    "DEFAULT_CONFIG",
]

_SECTIONS = ("grid", "model", "init", "time", "regularized", "output")

_KEYS = {
    "grid": {"dimension", "cells", "half_width"},
    "model": {"gamma", "p_H", "alpha", "sigma", "sigma_list", "reaction"},
    "init": {"preset", "width", "separation", "peak_fraction"},
    "time": {"T", "output_every", "c_cfl"},
    "regularized": {"sigma", "epsilon", "epsilon_list", "delta", "delta_list"},
    "output": {"directory", "plots", "q_list", "formats"},
}

_FORMATS = ("bdf1", "csv")


@dataclass(frozen=True)
class InitSpec:
    preset: str
    width: float | None = None
    separation: float | None = None
    peak_fraction: float | None = None

    def resolved(self) -> dict:
        out = dict(PRESET_DEFAULTS[self.preset])
        for key in ("width", "separation", "peak_fraction"):
            val = getattr(self, key)
            if val is not None:
                out[key] = val
        return out


@dataclass(frozen=True)
class RegSpec:
    sigma: float
    epsilons: tuple
    deltas: tuple


@dataclass(frozen=True)
class OutputSpec:
    directory: str = "out"
    plots: bool = False
    q_list: tuple = (1.0, 2.0)
    formats: tuple = ("bdf1",)


@dataclass(frozen=True)
class ExperimentConfig:
    grid_spec: GridSpec
    gamma: float
    p_H: float
    alpha: float
    reaction: str
    sigma: float | None
    sigma_list: tuple | None
    init: InitSpec
    T: float
    output_every: float
    c_cfl: float
    reg: RegSpec | None
    out: OutputSpec

    def grid(self) -> Grid:
        return make_grid(self.grid_spec)

    def model_params(self, sigma: float | None = None) -> ModelParams:
        if sigma is None:
            sigma = self.single_sigma()
        return ModelParams(
            gamma=self.gamma, p_H=self.p_H, sigma=sigma,
            alpha=self.alpha, reaction=self.reaction,
        )

    def single_sigma(self) -> float:
        if self.sigma is None:
            raise ConfigError(
                ["model.sigma: a single run needs a scalar sigma, not sigma_list"]
            )
        return self.sigma

    def sweep_sigmas(self) -> tuple:
        return self.sigma_list if self.sigma_list is not None else (self.sigma,)

    def initial_state(self, grid: Grid) -> SimState:
        return build_initial_state(
            self.init.preset, grid, self.model_params(sigma=0.0),
            width=self.init.width, separation=self.init.separation,
            peak_fraction=self.init.peak_fraction,
        )

    def render(self) -> str:
        """Effective config text with every default spelled out."""
        buf = io.StringIO()
        g = self.grid_spec
        buf.write("[grid]\n")
        buf.write(f"dimension = {g.dimension}\n")
        buf.write(f"cells = {g.cells}\n")
        buf.write(f"half_width = {g.half_width!r}\n\n")
        buf.write("[model]\n")
        buf.write(f"gamma = {self.gamma!r}\n")
        buf.write(f"p_H = {self.p_H!r}\n")
        buf.write(f"alpha = {self.alpha!r}\n")
        if self.sigma_list is not None:
            buf.write(f"sigma_list = {', '.join(repr(s) for s in self.sigma_list)}\n")
        else:
            buf.write(f"sigma = {self.sigma!r}\n")
        buf.write(f"reaction = {self.reaction}\n\n")
        buf.write("[init]\n")
        buf.write(f"preset = {self.init.preset}\n")
        for key, val in sorted(self.init.resolved().items()):
            buf.write(f"{key} = {val!r}\n")
        buf.write("\n[time]\n")
        buf.write(f"T = {self.T!r}\n")
        buf.write(f"output_every = {self.output_every!r}\n")
        buf.write(f"c_cfl = {self.c_cfl!r}\n")
        if self.reg is not None:
            buf.write("\n[regularized]\n")
            buf.write(f"sigma = {self.reg.sigma!r}\n")
            buf.write(f"epsilon_list = {', '.join(repr(e) for e in self.reg.epsilons)}\n")
            buf.write(f"delta_list = {', '.join(repr(d) for d in self.reg.deltas)}\n")
        buf.write("\n[output]\n")
        buf.write(f"directory = {self.out.directory}\n")
        buf.write(f"plots = {'true' if self.out.plots else 'false'}\n")
        buf.write(f"q_list = {', '.join(repr(q) for q in self.out.q_list)}\n")
        buf.write(f"formats = {', '.join(self.out.formats)}\n")
        return buf.getvalue()


class _Reader:
    """Typed key extraction that records problems instead of raising."""

    def __init__(self, parser: configparser.ConfigParser, violations: list):
        self.parser = parser
        self.violations = violations

    def get(self, section, key, cast, default=None, required=False):
        if not self.parser.has_option(section, key):
            if required:
                self.violations.append(f"{section}.{key}: missing required key")
            return default
        raw = self.parser.get(section, key).strip()
        try:
            return cast(raw)
        except (ValueError, TypeError):
            self.violations.append(f"{section}.{key}: cannot parse {raw!r}")
            return default


def _bool(raw: str) -> bool:
    lowered = raw.lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise ValueError(raw)


def _float_list(raw: str) -> tuple:
    items = [piece.strip() for piece in raw.split(",") if piece.strip()]
    if not items:
        raise ValueError(raw)
    return tuple(float(piece) for piece in items)


def _str_list(raw: str) -> tuple:
    return tuple(piece.strip() for piece in raw.split(",") if piece.strip())


def parse_config(text: str) -> ExperimentConfig:
    """Parse and fully validate experiment configuration text.

    Raises :class:`ConfigError` carrying the complete list of
    violations; returns the validated config otherwise.
    """
    violations: list[str] = []
    parser = configparser.ConfigParser(interpolation=None, strict=True)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"syntax: {exc}"]) from None

    for section in parser.sections():
        if section not in _SECTIONS:
            violations.append(f"[{section}]: unknown section")
            continue
        for key in parser.options(section):
            if key not in _KEYS[section]:
                violations.append(f"{section}.{key}: unknown key")
    for section in ("grid", "model", "init", "time"):
        if not parser.has_section(section):
            violations.append(f"[{section}]: missing required section")
    if violations:
        raise ConfigError(violations)

    r = _Reader(parser, violations)

    dimension = r.get("grid", "dimension", int, required=True)
    cells = r.get("grid", "cells", int, required=True)
    half_width = r.get("grid", "half_width", float, required=True)

    gamma = r.get("model", "gamma", float, required=True)
    p_H = r.get("model", "p_H", float, default=1.0)
    alpha = r.get("model", "alpha", float, default=1.0)
    reaction = r.get("model", "reaction", str, default="linear")
    sigma = r.get("model", "sigma", float)
    sigma_list = r.get("model", "sigma_list", _float_list)

    preset = r.get("init", "preset", str, required=True)
    width = r.get("init", "width", float)
    separation = r.get("init", "separation", float)
    peak_fraction = r.get("init", "peak_fraction", float)

    T = r.get("time", "T", float, required=True)
    output_every = r.get("time", "output_every", float, required=True)
    c_cfl = r.get("time", "c_cfl", float, default=0.4)

    directory = r.get("output", "directory", str, default="out") if parser.has_section("output") else "out"
    plots = r.get("output", "plots", _bool, default=False) if parser.has_section("output") else False
    q_list = r.get("output", "q_list", _float_list, default=(1.0, 2.0)) if parser.has_section("output") else (1.0, 2.0)
    formats = r.get("output", "formats", _str_list, default=("bdf1",)) if parser.has_section("output") else ("bdf1",)

    # cross-field validation; every check appends instead of raising
    grid_spec = None
    if None not in (dimension, cells, half_width):
        try:
            grid_spec = GridSpec(dimension=dimension, half_width=half_width, cells=cells)
            make_grid(grid_spec)
        except ValueError as exc:
            grid_spec = None
            violations.append(f"grid: {exc}")

    if gamma is not None and not gamma > 1.0:
        violations.append(f"model.gamma: must be > 1 (got {gamma})")
    if p_H is not None and not p_H > 0:
        violations.append(f"model.p_H: must be > 0 (got {p_H})")
    if alpha is not None and alpha < 0:
        violations.append(f"model.alpha: must be >= 0 (got {alpha})")
    if reaction is not None and reaction not in _REACTIONS:
        violations.append(f"model.reaction: unknown form {reaction!r}")
    if sigma is not None and sigma_list is not None:
        violations.append("model: give exactly one of sigma or sigma_list, not both")
    if sigma is None and sigma_list is None:
        violations.append("model: give exactly one of sigma or sigma_list")
    if sigma is not None and sigma < 0:
        violations.append(f"model.sigma: must be >= 0 (got {sigma})")
    if sigma_list is not None:
        for s in sigma_list:
            if s < 0:
                violations.append(f"model.sigma_list: entries must be >= 0 (got {s})")

    if preset is not None and preset not in PRESET_IDS:
        violations.append(f"init.preset: unknown preset {preset!r}; choose one of {PRESET_IDS}")
    if preset in ("vacuum", "homeostatic"):
        for key, val in (("width", width), ("separation", separation), ("peak_fraction", peak_fraction)):
            if val is not None:
                violations.append(f"init.{key}: not used by preset {preset!r}")

    if T is not None and not T > 0:
        violations.append(f"time.T: must be > 0 (got {T})")
    if output_every is not None and not output_every > 0:
        violations.append(f"time.output_every: must be > 0 (got {output_every})")
    if T is not None and output_every is not None and T > 0 and output_every > 0:
        n = round(T / output_every)
        if n < 1 or abs(n * output_every - T) > 1e-9 * output_every:
            violations.append(
                f"time: T={T} must be an integer multiple of output_every={output_every}"
            )
    if c_cfl is not None and not 0 < c_cfl <= 1.0:
        violations.append(f"time.c_cfl: must lie in (0, 1] (got {c_cfl})")

    for q in q_list or ():
        if q < 1:
            violations.append(f"output.q_list: exponents must be >= 1 (got {q})")
    for fmt in formats or ():
        if fmt not in _FORMATS:
            violations.append(f"output.formats: unknown format {fmt!r}; choose from {_FORMATS}")
    if formats and "csv" in formats and dimension not in (None, 1):
        violations.append("output.formats: csv snapshot export is 1d only")

    reg = None
    if parser.has_section("regularized"):
        reg_sigma = r.get("regularized", "sigma", float)
        eps = r.get("regularized", "epsilon", float)
        eps_list = r.get("regularized", "epsilon_list", _float_list)
        dlt = r.get("regularized", "delta", float)
        dlt_list = r.get("regularized", "delta_list", _float_list)
        if eps is not None and eps_list is not None:
            violations.append("regularized: give exactly one of epsilon or epsilon_list")
        if dlt is not None and dlt_list is not None:
            violations.append("regularized: give exactly one of delta or delta_list")
        epsilons = eps_list if eps_list is not None else ((eps,) if eps is not None else None)
        deltas = dlt_list if dlt_list is not None else ((dlt,) if dlt is not None else None)
        if epsilons is None:
            violations.append("regularized.epsilon: missing (epsilon or epsilon_list)")
        if deltas is None:
            violations.append("regularized.delta: missing (delta or delta_list)")
        if epsilons is not None and deltas is not None and len(epsilons) != len(deltas):
            violations.append(
                "regularized: epsilon and delta lists must pair up "
                f"({len(epsilons)} vs {len(deltas)} entries)"
            )
        for name, values in (("epsilon", epsilons), ("delta", deltas)):
            for val in values or ():
                if val < 0:
                    violations.append(f"regularized.{name}: must be >= 0 (got {val})")
        if reg_sigma is None:
            reg_sigma = sigma if sigma is not None else None
        if reg_sigma is None or reg_sigma <= 0:
            violations.append(
                f"regularized.sigma: must be > 0 (got {reg_sigma}); "
                "the relaxation term divides by sigma"
            )
        if not violations:
            reg = RegSpec(sigma=reg_sigma, epsilons=epsilons, deltas=deltas)

    init = InitSpec(
        preset=preset or "vacuum", width=width,
        separation=separation, peak_fraction=peak_fraction,
    )
    if grid_spec is not None and not violations and gamma is not None:
        try:
            params = ModelParams(gamma=gamma, p_H=p_H, alpha=alpha, reaction=reaction)
            build_initial_state(
                init.preset, make_grid(grid_spec), params,
                width=width, separation=separation, peak_fraction=peak_fraction,
            )
        except ValueError as exc:
            violations.append(f"init: {exc}")

    if violations:
        raise ConfigError(violations)

    return ExperimentConfig(
        grid_spec=grid_spec,
        gamma=gamma, p_H=p_H, alpha=alpha, reaction=reaction,
        sigma=sigma, sigma_list=sigma_list,
        init=init, T=T, output_every=output_every, c_cfl=c_cfl,
        reg=reg,
        out=OutputSpec(directory=directory, plots=plots, q_list=q_list, formats=formats),
    )


DEFAULT_CONFIG = """\
[grid]
dimension = 1
cells = 512
half_width = 6.0

[model]
gamma = 2.0
p_H = 1.0
alpha = 1.0
sigma_list = 0.1, 0.01, 0.001, 0.0001
reaction = linear

[init]
preset = gaussian-pair
width = 0.7
separation = 1.0
peak_fraction = 0.8

[time]
T = 0.5
output_every = 0.05
c_cfl = 0.4

[regularized]
sigma = 0.05
epsilon_list = 0.1, 0.01, 0.001
delta_list = 0.1, 0.01, 0.001

[output]
directory = out
plots = false
q_list = 1, 2
formats = bdf1
"""
