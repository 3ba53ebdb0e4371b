"""Experiment runners: wire parsed configs to simulations and artifacts.

Each runner owns one output directory, drops the fully resolved config
next to its outputs, and returns the artifact paths it wrote.  Sweep
members get private subdirectories so concurrent members never share a
file.
"""

from __future__ import annotations

import os

from .config import ExperimentConfig
from .diagnostics import ConvergenceReport, apriori_monitor, energy_ledger, sigma_sweep
from .dynamics import Trajectory, run
from .errors import ConfigError
from .regularized import regularization_sweep
from .reporting import (
    energy_csv,
    manifest_csv,
    monitor_csv,
    regsweep_csv,
    report_csv,
    shift_csv,
    svg_loglog,
    write_text,
)
from .snapio import write_profile_csv, write_snapshot

__all__ = [
    "ENV_OUT",
    "resolve_out_root",
    "run_experiment",
    "sweep_experiment",
    "regsweep_experiment",
]

ENV_OUT = "BDLAB_OUT"


def resolve_out_root(cfg: ExperimentConfig, override: str | None = None) -> str:
    """Output root: explicit flag, then BDLAB_OUT, then the config value."""
    if override:
        return override
    env = os.environ.get(ENV_OUT)
    if env:
        return env
    return cfg.out.directory


def _member_dir(root: str, label: str) -> str:
    path = os.path.join(root, "members", label)
    os.makedirs(path, exist_ok=True)
    return path


def _write_member(cfg: ExperimentConfig, directory: str, traj: Trajectory) -> list:
    """Light per-member artifacts: step manifest plus the final state."""
    written = []
    path = os.path.join(directory, "manifest.csv")
    write_text(path, manifest_csv(traj))
    written.append(path)
    if "bdf1" in cfg.out.formats:
        path = os.path.join(directory, "final.bdf1")
        write_snapshot(path, traj.states[-1], traj.grid)
        written.append(path)
    if "csv" in cfg.out.formats:
        path = os.path.join(directory, "final.csv")
        write_profile_csv(path, traj.states[-1], traj.grid)
        written.append(path)
    return written


def run_experiment(cfg: ExperimentConfig, out_dir: str, plots: bool = False) -> dict:
    """Single simulation: snapshots, step manifest, ledger and monitor.

    Needs a scalar model.sigma; a config written for sweeps (sigma_list)
    is rejected up front rather than silently picking an entry.
    """
    os.makedirs(out_dir, exist_ok=True)
    grid = cfg.grid()
    params = cfg.model_params()
    s0 = cfg.initial_state(grid)
    traj = run(s0, params, cfg.T, cfg.output_every, grid, law="brinkman", c_cfl=cfg.c_cfl)

    artifacts = {"out_dir": out_dir, "snapshots": []}
    write_text(os.path.join(out_dir, "effective_config.ini"), cfg.render())
    snap_dir = os.path.join(out_dir, "snapshots")
    os.makedirs(snap_dir, exist_ok=True)
    for i, state in enumerate(traj.states):
        if "bdf1" in cfg.out.formats:
            path = os.path.join(snap_dir, f"snap_{i:04d}.bdf1")
            write_snapshot(path, state, grid)
            artifacts["snapshots"].append(path)
        if "csv" in cfg.out.formats:
            path = os.path.join(snap_dir, f"snap_{i:04d}.csv")
            write_profile_csv(path, state, grid)
            artifacts["snapshots"].append(path)

    artifacts["manifest"] = os.path.join(out_dir, "manifest.csv")
    write_text(artifacts["manifest"], manifest_csv(traj))
    artifacts["energy"] = os.path.join(out_dir, "energy.csv")
    write_text(artifacts["energy"], energy_csv(energy_ledger(traj)))
    artifacts["monitor"] = os.path.join(out_dir, "monitor.csv")
    write_text(artifacts["monitor"], monitor_csv(apriori_monitor(traj)))
    artifacts["max_boundary_fraction"] = traj.max_boundary_fraction
    return artifacts


def _sweep_plots(report: ConvergenceReport, grid_dx: float, out_dir: str) -> list:
    written = []
    sigmas = [row.sigma for row in report.rows]
    columns = {}
    for i in range(len(report.q_list)):
        columns[f"e_p_q{i + 1}"] = [row.e_p[i] for row in report.rows]
    columns["e_grad"] = [row.e_grad for row in report.rows]
    columns["e_lap"] = [row.e_lap for row in report.rows]
    columns["e_norm"] = [row.e_norm for row in report.rows]
    columns["trace_gap"] = [row.trace_gap for row in report.rows]
    series = {
        name: list(zip(sigmas, values)) for name, values in columns.items()
    }
    path = os.path.join(out_dir, "report.svg")
    write_text(path, svg_loglog("errors vs sigma", "sigma", series))
    written.append(path)

    shift_series = {
        f"sigma={curve.sigma!r}": [
            (s * grid_dx, w) for s, w in zip(curve.shifts, curve.omegas)
        ]
        for curve in report.shift_curves
    }
    path = os.path.join(out_dir, "shift_modulus.svg")
    write_text(path, svg_loglog("shift modulus", "shift y", shift_series))
    written.append(path)
    return written


def sweep_experiment(
    cfg: ExperimentConfig, out_dir: str, jobs: int = 1, plots: bool = False
) -> dict:
    """Sigma sweep against the same-grid Darcy reference."""
    os.makedirs(out_dir, exist_ok=True)
    grid = cfg.grid()
    base = cfg.model_params(sigma=0.0)
    s0 = cfg.initial_state(grid)

    artifacts = {"out_dir": out_dir, "members": []}

    def on_reference(traj: Trajectory) -> None:
        artifacts["members"].extend(
            _write_member(cfg, _member_dir(out_dir, "reference"), traj)
        )

    def on_member(sigma: float, traj: Trajectory) -> None:
        artifacts["members"].extend(
            _write_member(cfg, _member_dir(out_dir, f"sigma_{sigma!r}"), traj)
        )

    report = sigma_sweep(
        s0, base, cfg.sweep_sigmas(), cfg.T, cfg.output_every, grid,
        q_list=cfg.out.q_list, jobs=jobs, c_cfl=cfg.c_cfl,
        member_callback=on_member, reference_callback=on_reference,
    )

    write_text(os.path.join(out_dir, "effective_config.ini"), cfg.render())
    artifacts["report"] = os.path.join(out_dir, "report.csv")
    write_text(artifacts["report"], report_csv(report))
    artifacts["shift"] = os.path.join(out_dir, "shift_modulus.csv")
    write_text(artifacts["shift"], shift_csv(report))
    if plots:
        artifacts["plots"] = _sweep_plots(report, grid.dx, out_dir)
    artifacts["rows"] = len(report.rows)
    return artifacts


def regsweep_experiment(
    cfg: ExperimentConfig, out_dir: str, plots: bool = False
) -> dict:
    """Regularized-vs-direct consistency table over (epsilon, delta)."""
    if cfg.reg is None:
        raise ConfigError(["regularized: section required for a regularization sweep"])
    os.makedirs(out_dir, exist_ok=True)
    grid = cfg.grid()
    model = cfg.model_params(sigma=cfg.reg.sigma)
    s0 = cfg.initial_state(grid)
    pairs = list(zip(cfg.reg.epsilons, cfg.reg.deltas))
    rows = regularization_sweep(s0, model, pairs, cfg.T, cfg.output_every, grid, c_cfl=cfg.c_cfl)

    artifacts = {"out_dir": out_dir}
    write_text(os.path.join(out_dir, "effective_config.ini"), cfg.render())
    artifacts["table"] = os.path.join(out_dir, "regsweep.csv")
    write_text(artifacts["table"], regsweep_csv(rows))
    if plots:
        series = {"l1_gap": [(r.epsilon, r.l1_gap) for r in rows]}
        path = os.path.join(out_dir, "regsweep.svg")
        write_text(path, svg_loglog("consistency gap vs epsilon", "epsilon", series))
        artifacts["plots"] = [path]
    artifacts["rows"] = len(rows)
    return artifacts
