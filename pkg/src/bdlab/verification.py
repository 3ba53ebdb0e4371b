"""Built-in acceptance suite: ten numbered behavioral guarantees.

Each criterion is a function that either returns a detail string or
raises CriterionFailure with the measured numbers.  The suite shares
one sigma sweep across the criteria that need it, so a full pass stays
within a desk-scale time budget.  `run_acceptance` never raises for a
failing criterion; crashes are converted to failures so one broken
criterion cannot mask the others.
"""

from __future__ import annotations

import filecmp
import math
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from .config import parse_config
from .diagnostics import apriori_monitor, energy_ledger, sigma_sweep
from .dynamics import ModelParams, run
from .elliptic import BrinkmanSolver, DiscreteKernel, kernel_k_sigma
from .experiments import regsweep_experiment, run_experiment, sweep_experiment
from .fields import laplacian
from .grid import GridSpec, make_grid
from .presets import build_initial_state
from .regularized import regularization_sweep

__all__ = ["CriterionResult", "CriterionFailure", "run_acceptance", "format_result"]

SWEEP_SIGMAS = (1e-1, 1e-2, 1e-3, 1e-4)

# small but complete pipeline config for the determinism criterion
_PIPELINE_CONFIG = """\
[grid]
dimension = 1
cells = 256
half_width = 6.0

[model]
gamma = 2.0
sigma = 0.05

[init]
preset = gaussian-pair

[time]
T = 0.2
output_every = 0.1

[regularized]
epsilon_list = 0.1, 0.01
delta_list = 0.1, 0.01

[output]
formats = bdf1, csv
plots = true
"""


class CriterionFailure(Exception):
    pass


def _check(cond: bool, msg: str) -> None:
    if not cond:
        raise CriterionFailure(msg)


@dataclass(frozen=True)
class CriterionResult:
    index: int
    name: str
    passed: bool
    detail: str


def format_result(r: CriterionResult) -> str:
    status = "PASS" if r.passed else "FAIL"
    return f"criterion {r.index:2d} {r.name:<26s} {status}  {r.detail}"


class _Context:
    """Shared state: default grid, one sweep, a positivity audit."""

    def __init__(self, jobs: int = 1):
        self.jobs = jobs
        self.grid = make_grid(GridSpec(dimension=1, half_width=6.0, cells=512))
        self.min_density = math.inf
        self.audited_runs = 0
        self._sweep = None

    def note(self, traj) -> None:
        self.audited_runs += 1
        for r in traj.records:
            self.min_density = min(self.min_density, r.min_u, r.min_v)

    def initial(self, gamma: float, grid=None):
        g = self.grid if grid is None else grid
        params = ModelParams(gamma=gamma, p_H=1.0, alpha=1.0)
        return build_initial_state("gaussian-pair", g, params)

    def sweep(self):
        if self._sweep is None:
            members = []

            def on_member(sig, traj):
                members.append((sig, traj))
                self.note(traj)

            s0 = self.initial(2.0)
            base = ModelParams(gamma=2.0, p_H=1.0, sigma=0.0, alpha=1.0)
            report = sigma_sweep(
                s0, base, SWEEP_SIGMAS, 0.5, 0.05, self.grid,
                q_list=(1, 2), jobs=self.jobs, c_cfl=0.4,
                member_callback=on_member, reference_callback=lambda t: self.note(t),
            )
            self._sweep = (report, members)
        return self._sweep


def _c1_elliptic_residual(ctx: _Context) -> str:
    rng = np.random.default_rng(20240001)
    worst = 0.0
    grids = (ctx.grid, make_grid(GridSpec(dimension=2, half_width=6.0, cells=64)))
    for grid in grids:
        solvers = {s: BrinkmanSolver(grid, s) for s in (1e-4, 1e-2, 1.0)}
        for _ in range(50):
            p = rng.random(grid.shape)
            for sigma, solver in solvers.items():
                w = solver.solve(p)
                resid = -sigma * laplacian(w, grid) + w - p
                rel = float(np.max(np.abs(resid))) / float(np.max(np.abs(p)))
                worst = max(worst, rel)
    _check(worst <= 1e-12, f"max relative residual {worst:.3g} > 1e-12")
    return f"max relative residual {worst:.3g} over 100 fields x 3 sigmas"


def _c2_kernel_facts(ctx: _Context) -> str:
    sigmas = (1e-4, 1e-2, 1.0)
    worst_min, worst_mass = 0.0, 0.0
    for cells in (256, 512, 1024):
        grid = make_grid(GridSpec(dimension=1, half_width=4.0, cells=cells))
        for sigma in sigmas:
            k = kernel_k_sigma(grid, sigma)
            worst_min = min(worst_min, k.min_entry())
            worst_mass = max(worst_mass, abs(k.mass() - 1.0))
    _check(worst_min >= -1e-14, f"kernel min entry {worst_min:.3g} < -1e-14")
    _check(worst_mass <= 1e-12, f"kernel mass error {worst_mass:.3g} > 1e-12")

    # first-order convergence to the analytic fundamental solution,
    # measured at sigma = 1e-2 where the kernel is grid-resolved and
    # the periodization tail is far below the discretization error
    sigma = 1e-2
    root = math.sqrt(sigma)
    errors = []
    for cells in (256, 512, 1024):
        grid = make_grid(GridSpec(dimension=1, half_width=4.0, cells=cells))
        k = kernel_k_sigma(grid, sigma)
        x = grid.centers[0]
        analytic = np.exp(-np.abs(x) / root) / (2.0 * root)
        errors.append(float(np.sum(np.abs(k.values - analytic)) * grid.dx))
    ratios = [errors[i] / errors[i + 1] for i in range(2)]
    for r in ratios:
        _check(1.5 <= r <= 2.5, f"L1 error halving ratio {r:.3g} outside [1.5, 2.5]")
    return (
        f"min {worst_min:.2g}, mass err {worst_mass:.2g}, "
        f"halving ratios {ratios[0]:.3g}, {ratios[1]:.3g}"
    )


def _c3_max_principle(ctx: _Context) -> str:
    worst = 0.0
    for gamma in (1.5, 2.0, 4.0):
        s0 = ctx.initial(gamma)
        for sigma in (1e-1, 1e-3):
            params = ModelParams(gamma=gamma, p_H=1.0, sigma=sigma, alpha=1.0)
            traj = run(s0, params, 1.0, 0.25, ctx.grid, law="brinkman")
            ctx.note(traj)
            worst = max(worst, max(r.max_p for r in traj.records))
    _check(worst <= 1.0 + 1e-8, f"max pressure {worst!r} > p_H (1 + 1e-8)")
    return f"max pressure over 6 runs {worst!r} <= 1 + 1e-8"


def _c4_energy_identity(ctx: _Context) -> str:
    params = ModelParams(gamma=2.0, p_H=1.0, sigma=1e-2, alpha=1.0)
    s0 = ctx.initial(2.0)
    coarse = run(s0, params, 0.5, 0.05, ctx.grid, c_cfl=0.4)
    ctx.note(coarse)
    fine_grid = make_grid(GridSpec(dimension=1, half_width=6.0, cells=1024))
    fine = run(ctx.initial(2.0, fine_grid), params, 0.5, 0.025, fine_grid, c_cfl=0.2)
    ctx.note(fine)
    r_coarse = float(np.max(np.abs(energy_ledger(coarse).residual)))
    r_fine = float(np.max(np.abs(energy_ledger(fine).residual)))
    ratio = r_coarse / r_fine
    _check(ratio >= 1.5, f"residual refinement ratio {ratio:.3g} < 1.5")

    frozen = ModelParams(gamma=2.0, p_H=1.0, sigma=1e-2, alpha=0.0)
    traj = run(s0, frozen, 0.5, 0.05, ctx.grid, c_cfl=0.4)
    ctx.note(traj)
    ledger = energy_ledger(traj)
    max_s = float(np.max(np.abs(ledger.source)))
    _check(max_s == 0.0, f"alpha=0 source not identically zero: {max_s:.3g}")
    min_d = float(np.min(ledger.dissipation))
    _check(min_d >= 0.0, f"dissipation went negative: {min_d:.3g}")
    P = ledger.pressure_integral
    rise = float(np.max(P[1:] - P[:-1]))
    _check(
        rise <= 1e-10 * max(1.0, P[0]),
        f"alpha=0 pressure mass increased by {rise:.3g}",
    )
    return f"refinement ratio {ratio:.3g}, S=0, max mass rise {rise:.3g}"


_COLS = ("e_p_q1", "e_p_q2", "e_grad", "e_lap", "e_norm", "trace_gap")


def _row_values(row) -> dict:
    return {
        "e_p_q1": row.e_p[0], "e_p_q2": row.e_p[1], "e_grad": row.e_grad,
        "e_lap": row.e_lap, "e_norm": row.e_norm, "trace_gap": row.trace_gap,
    }


def _c5_inviscid_limit(ctx: _Context) -> str:
    report, _ = ctx.sweep()
    rows = report.rows
    _check(len(rows) == len(SWEEP_SIGMAS), f"expected {len(SWEEP_SIGMAS)} rows")
    for col in ("e_p_q2", "e_lap", "e_norm", "trace_gap"):
        vals = [_row_values(r)[col] for r in rows]
        for a, b in zip(vals, vals[1:]):
            _check(b < a, f"{col} not strictly decreasing: {a!r} -> {b!r}")
    ratios = {}
    for col in _COLS:
        first = _row_values(rows[0])[col]
        last = _row_values(rows[-1])[col]
        ratios[col] = last / first
        _check(
            last <= 0.2 * first,
            f"{col}: smallest-sigma row {last:.3g} > 20% of largest {first:.3g}",
        )
    worst = max(ratios, key=ratios.get)
    return f"all columns decreasing, worst last/first ratio {ratios[worst]:.3g} ({worst})"


def _c6_uniform_bounds(ctx: _Context) -> str:
    report, members = ctx.sweep()
    b_vals, c_vals = [], []
    for _, traj in members:
        mon = apriori_monitor(traj)
        b_vals.append(float(mon.grad_w_sq_cum[-1]))
        c_vals.append(float(mon.sigma_lap_sq_cum[-1]))
    b_ratio = max(b_vals) / b_vals[0]
    c_ratio = max(c_vals) / c_vals[0]
    _check(b_ratio <= 2.0, f"flow energy varies by {b_ratio:.3g}x > 2x")
    _check(c_ratio <= 2.0, f"sigma-weighted curvature varies by {c_ratio:.3g}x > 2x")
    worst_m = max(w for _, w in report.moment_checks)
    _check(
        worst_m <= 1.0 + 1e-9,
        f"second moment exceeded its envelope by factor {worst_m!r}",
    )
    return f"B ratio {b_ratio:.3g}, C ratio {c_ratio:.3g}, moment/envelope {worst_m:.6g}"


def _c7_shift_modulus(ctx: _Context) -> str:
    report, _ = ctx.sweep()
    first_cell = []
    for curve in report.shift_curves:
        om = curve.omegas
        for a, b in zip(om, om[1:]):
            _check(b >= a, f"omega not nondecreasing at sigma={curve.sigma}: {a!r} -> {b!r}")
        _check(
            om[0] <= 0.25 * om[-1],
            f"sigma={curve.sigma}: omega(dx) {om[0]:.3g} > 0.25 omega(8dx) {om[-1]:.3g}",
        )
        first_cell.append(om[0])
    spread = max(first_cell) / min(first_cell)
    _check(spread <= 5.0, f"omega(dx) spread across sigma {spread:.3g} > 5")
    return f"monotone curves, omega(dx)/omega(8dx) ok, cross-sigma spread {spread:.3g}"


def _c8_regularized_consistency(ctx: _Context) -> str:
    model = ModelParams(gamma=2.0, p_H=1.0, sigma=5e-2, alpha=1.0)
    s0 = ctx.initial(2.0)
    pairs = [(e, e) for e in (1e-1, 1e-2, 1e-3)]
    rows = regularization_sweep(s0, model, pairs, 0.5, 0.05, ctx.grid)
    gaps = [r.l1_gap for r in rows]
    for a, b in zip(gaps, gaps[1:]):
        _check(b < a, f"L1 gap not strictly decreasing: {a!r} -> {b!r}")
    active = sum(r.q_active_steps for r in rows)
    _check(active == 0, f"truncation activated on {active} steps despite p0 <= p_H")
    floor = min(r.min_density for r in rows)
    ctx.min_density = min(ctx.min_density, floor)
    ctx.audited_runs += len(rows)
    return f"gaps {', '.join(f'{g:.3g}' for g in gaps)}, truncation inactive"


def _c9_conservation_positivity(ctx: _Context) -> str:
    params = ModelParams(gamma=2.0, p_H=1.0, sigma=1e-3, alpha=0.0)
    s0 = ctx.initial(2.0)
    traj = run(s0, params, 1.5, 0.1, ctx.grid)
    ctx.note(traj)
    steps = len(traj.records) - 1
    _check(steps >= 1000, f"only {steps} steps; need >= 1000 for the drift claim")
    masses = [r.mass_u + r.mass_v for r in traj.records]
    drift = max(abs(m - masses[0]) for m in masses) / masses[0]
    _check(drift <= 1e-12, f"relative mass drift {drift:.3g} > 1e-12")
    _check(
        ctx.min_density >= 0.0,
        f"density went negative ({ctx.min_density!r}) in an audited run",
    )
    return (
        f"drift {drift:.3g} over {steps} steps, "
        f"min density {ctx.min_density!r} across {ctx.audited_runs} audited runs"
    )


def _pipeline(root: str) -> None:
    cfg = parse_config(_PIPELINE_CONFIG)
    run_experiment(cfg, os.path.join(root, "run"), plots=False)
    sweep_experiment(cfg, os.path.join(root, "sweep"), jobs=1, plots=True)
    regsweep_experiment(cfg, os.path.join(root, "regsweep"), plots=True)


def _c10_determinism(ctx: _Context) -> str:
    with tempfile.TemporaryDirectory(prefix="bdlab-verify-") as tmp:
        a, b = os.path.join(tmp, "a"), os.path.join(tmp, "b")
        _pipeline(a)
        _pipeline(b)
        files_a, files_b = [], []
        for root, files in ((a, files_a), (b, files_b)):
            for dirpath, _, names in os.walk(root):
                for name in sorted(names):
                    files.append(os.path.relpath(os.path.join(dirpath, name), root))
        files_a.sort()
        files_b.sort()
        _check(files_a == files_b, "the two runs produced different file sets")
        differing = []
        for rel in files_a:
            if not filecmp.cmp(os.path.join(a, rel), os.path.join(b, rel), shallow=False):
                differing.append(rel)
        _check(not differing, f"byte mismatch in {differing}")
        total = sum(os.path.getsize(os.path.join(a, rel)) for rel in files_a)
    return f"{len(files_a)} artifacts bitwise identical ({total} bytes)"


_CRITERIA = (
    (1, "elliptic-residual", _c1_elliptic_residual),
    (2, "kernel-facts", _c2_kernel_facts),
    (3, "max-principle", _c3_max_principle),
    (4, "energy-identity", _c4_energy_identity),
    (5, "inviscid-limit", _c5_inviscid_limit),
    (6, "uniform-bounds", _c6_uniform_bounds),
    (7, "shift-modulus", _c7_shift_modulus),
    (8, "regularized-consistency", _c8_regularized_consistency),
    (9, "conservation-positivity", _c9_conservation_positivity),
    (10, "determinism", _c10_determinism),
)


def run_acceptance(jobs: int = 1, report=None) -> list:
    """Run all criteria in order; never raises on a failing criterion.

    `report`, when given, is called with each CriterionResult as it
    completes, so callers can stream progress lines.
    """
    ctx = _Context(jobs=jobs)
    results = []
    for index, name, fn in _CRITERIA:
        try:
            detail = fn(ctx)
            result = CriterionResult(index=index, name=name, passed=True, detail=detail)
        except CriterionFailure as exc:
            result = CriterionResult(index=index, name=name, passed=False, detail=str(exc))
        except Exception as exc:
            result = CriterionResult(
                index=index, name=name, passed=False,
                detail=f"{type(exc).__name__}: {exc}",
            )
        results.append(result)
        if report is not None:
            report(result)
    return results
