"""Monitored estimates: energy ledger, uniform bounds, sigma sweeps.

Everything here is computed from trajectory snapshots after the fact.
The ledger discretizes the pressure balance

    d/dt int p + (gamma-1) int (|grad W|^2 + sigma |lap W|^2) = source

whose residual is the single most sensitive consistency probe of the
scheme, and the sweep quantifies how the Brinkman runs approach the
Darcy reference as sigma drops.
"""

from __future__ import annotations

import concurrent.futures
import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import ModelParams, Trajectory, reaction, reaction_rate_bound, run
from .elliptic import BrinkmanSolver
from .errors import BdlabError, DiagnosticsError
from .fields import gradient, laplacian, lq_spacetime_norm, second_moment, shift_modulus
from .grid import Grid

__all__ = [
    "EnergyLedger",
    "energy_ledger",
    "AprioriReport",
    "apriori_monitor",
    "gronwall_mass_envelope",
    "gronwall_moment_envelope",
    "smooth_test_bump",
    "ConvergenceRow",
    "ShiftCurve",
    "ConvergenceReport",
    "sigma_sweep",
    "SHIFT_CELLS",
]

SHIFT_CELLS = (1, 2, 3, 4, 5, 6, 7, 8)


def _potentials(traj: Trajectory):
    """Solver potential per snapshot; identity for Darcy trajectories."""
    pressures = traj.pressures()
    if traj.law == "darcy" or traj.params.sigma == 0.0:
        return pressures, [p.copy() for p in pressures]
    solver = BrinkmanSolver(traj.grid, traj.params.sigma)
    return pressures, [solver.solve(p) for p in pressures]


@dataclass(frozen=True)
class EnergyLedger:
    times: np.ndarray
    pressure_integral: np.ndarray
    dissipation: np.ndarray
    source: np.ndarray
    residual: np.ndarray  # one entry per output interval


def energy_ledger(traj: Trajectory) -> EnergyLedger:
    """Discrete pressure-balance ledger over the output times.

    R(t_n) = (P(t_{n+1}) - P(t_n)) / dt + D(t_n) - S(t_n), with D
    evaluated from the solver identity sigma lap W = W - p.  Both ways
    of computing the sigma |lap W|^2 term (stencil and identity) must
    agree to 1e-12; a mismatch means the elliptic contract is broken,
    so it raises rather than returning a quietly wrong ledger.
    """
    grid, params = traj.grid, traj.params
    gamma, sigma = params.gamma, params.sigma
    vol = grid.cell_volume
    dt = traj.output_every
    pressures, potentials = _potentials(traj)

    P, D, S = [], [], []
    for state, p, W in zip(traj.states, pressures, potentials):
        gW = gradient(W, grid)
        grad_sq = float(np.sum(gW * gW) * vol)
        if sigma > 0 and traj.law != "darcy":
            lap_sq_identity = float(np.sum((W - p) ** 2) * vol) / sigma**2
            lap_stencil = laplacian(W, grid)
            lap_sq_stencil = float(np.sum(lap_stencil**2) * vol)
            scale = max(1.0, abs(lap_sq_identity), abs(lap_sq_stencil))
            if abs(lap_sq_identity - lap_sq_stencil) > 1e-12 * scale:
                raise DiagnosticsError(
                    "solver identity sigma lap W = W - p failed: "
                    f"{lap_sq_stencil} vs {lap_sq_identity}"
                )
            lap_term = sigma * lap_sq_identity
        else:
            lap_term = 0.0
        F, G = reaction(p, params)
        total = state.u + state.v
        P.append(float(np.sum(p) * vol))
        D.append((gamma - 1.0) * (grad_sq + lap_term))
        S.append(float(gamma * np.sum((state.u * F + state.v * G) * total ** (gamma - 1.0)) * vol))

    P, D, S = np.array(P), np.array(D), np.array(S)
    residual = (P[1:] - P[:-1]) / dt + D[:-1] - S[:-1]
    return EnergyLedger(
        times=np.array(traj.times),
        pressure_integral=P,
        dissipation=D,
        source=S,
        residual=residual,
    )


def gronwall_mass_envelope(p0_integral: float, params: ModelParams, t: float) -> float:
    """Upper envelope int p(t) <= int p(0) exp(C t), C = gamma max|F,G|."""
    C = params.gamma * reaction_rate_bound(params)
    return p0_integral * math.exp(C * t)


def gronwall_moment_envelope(
    m0: float, b_total: float, params: ModelParams, t: float
) -> float:
    """Envelope for the total second moment from the measured flow energy.

    Comes from d/dt m <= 2 sqrt(m) sqrt(p_H^(1/gamma)) |grad W|_2
    + F_max m and Cauchy-Schwarz in time on the measured
    b_total = int_0^T |grad W|^2 dt.
    """
    fmax = reaction_rate_bound(params)
    root = math.sqrt(max(m0, 0.0)) + params.p_H ** (0.5 / params.gamma) * math.sqrt(
        max(t, 0.0) * max(b_total, 0.0)
    )
    return math.exp(fmax * t) * root**2


@dataclass(frozen=True)
class AprioriReport:
    """Time series of every uniformly bounded quantity we can compute."""

    times: np.ndarray
    p_l1: np.ndarray
    p_linf: np.ndarray
    w_l1: np.ndarray
    w_linf: np.ndarray
    grad_w_sq_cum: np.ndarray    # int_0^t |grad W|^2
    sigma_lap_sq_cum: np.ndarray  # sigma int_0^t |lap W|^2
    pressure_moment: np.ndarray
    moment_u: np.ndarray
    moment_v: np.ndarray
    max_dp_rate: float  # max |p(t+dt)-p(t)|_inf / dt, a time-derivative proxy


def apriori_monitor(traj: Trajectory) -> AprioriReport:
    """Evaluate the monitored bounds along a trajectory.

    Also asserts the mass-pressure Gronwall envelope
    int p(t) <= int p(0) e^{Ct}; a violation is a genuine scheme bug,
    never a tolerance nuisance, hence an exception rather than a flag.
    """
    grid, params = traj.grid, traj.params
    vol = grid.cell_volume
    dt = traj.output_every
    pressures, potentials = _potentials(traj)

    p_l1, p_linf, w_l1, w_linf = [], [], [], []
    grad_cum, lap_cum = [0.0], [0.0]
    p_mom, mom_u, mom_v = [], [], []
    for state, p, W in zip(traj.states, pressures, potentials):
        p_l1.append(float(np.sum(np.abs(p)) * vol))
        p_linf.append(float(np.max(np.abs(p))))
        w_l1.append(float(np.sum(np.abs(W)) * vol))
        w_linf.append(float(np.max(np.abs(W))))
        gW = gradient(W, grid)
        grad_cum.append(grad_cum[-1] + float(np.sum(gW * gW) * vol) * dt)
        if params.sigma > 0 and traj.law != "darcy":
            lap_cum.append(
                lap_cum[-1] + float(np.sum((W - p) ** 2) * vol) / params.sigma * dt
            )
        else:
            lap_cum.append(0.0)
        p_mom.append(float(np.sum(p * grid.center_r2) * vol))
        mom_u.append(second_moment(state.u, grid))
        mom_v.append(second_moment(state.v, grid))

    max_rate = 0.0
    for a, b in zip(pressures[:-1], pressures[1:]):
        max_rate = max(max_rate, float(np.max(np.abs(b - a))) / dt)

    P0 = p_l1[0]
    for t, Pt in zip(traj.times, p_l1):
        cap = gronwall_mass_envelope(P0, params, t)
        if Pt > cap * (1.0 + 1e-9) + 1e-12 * max(1.0, P0):
            raise DiagnosticsError(
                f"mass-pressure envelope violated at t={t}: int p = {Pt} > {cap}"
            )

    return AprioriReport(
        times=np.array(traj.times),
        p_l1=np.array(p_l1),
        p_linf=np.array(p_linf),
        w_l1=np.array(w_l1),
        w_linf=np.array(w_linf),
        grad_w_sq_cum=np.array(grad_cum[1:]),
        sigma_lap_sq_cum=np.array(lap_cum[1:]),
        pressure_moment=np.array(p_mom),
        moment_u=np.array(mom_u),
        moment_v=np.array(mom_v),
        max_dp_rate=max_rate,
    )


def smooth_test_bump(grid: Grid) -> np.ndarray:
    """Fixed smooth witness for weak-trace gaps: bump of radius L/2."""
    R = 0.5 * grid.half_width
    s2 = grid.center_r2 / R**2
    out = np.zeros(grid.shape)
    inside = s2 < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - s2[inside]))
    return out


@dataclass(frozen=True)
class ConvergenceRow:
    sigma: float
    e_p: tuple          # one entry per requested q, same order as q_list
    e_grad: float
    e_lap: float
    e_norm: float
    trace_gap: float


@dataclass(frozen=True)
class ShiftCurve:
    sigma: float
    shifts: tuple       # in cells
    omegas: tuple


@dataclass
class ConvergenceReport:
    q_list: tuple
    rows: list = field(default_factory=list)
    shift_curves: list = field(default_factory=list)
    reference_b: float = 0.0
    moment_checks: list = field(default_factory=list)  # (sigma, max m/envelope)


def _b_energy(potentials, grid: Grid, dt: float) -> float:
    acc = 0.0
    for W in potentials:
        g = gradient(W, grid)
        acc += float(np.sum(g * g))
    return acc * grid.cell_volume * dt


def sigma_sweep(
    s0,
    params: ModelParams,
    sigmas,
    T: float,
    output_every: float,
    grid: Grid,
    q_list=(1, 2),
    jobs: int = 1,
    c_cfl: float = 0.4,
    member_callback=None,
    reference_callback=None,
) -> ConvergenceReport:
    """Convergence table of Brinkman runs against the same-grid Darcy run.

    All members share the grid, initial data and horizon.  Rows are
    sorted by decreasing sigma.  Each member contributes its error
    columns and a shift-modulus curve over 1..8 cell translations.
    Members run concurrently up to `jobs`; assembly order is fixed by
    the sorted sigma list, so the report is deterministic regardless
    of scheduling.  The callbacks, when given, receive the reference
    trajectory and each (sigma, trajectory) pair during the
    single-threaded assembly pass; runners use them to write
    per-member artifacts without a second simulation.
    """
    sigmas = sorted(set(float(s) for s in sigmas), reverse=True)
    ref_params = dataclasses.replace(params, sigma=0.0)
    reference = run(s0, ref_params, T, output_every, grid, law="darcy", c_cfl=c_cfl)
    if reference_callback is not None:
        reference_callback(reference)
    p_ref = reference.pressures()
    gp_ref = [gradient(p, grid) for p in p_ref]
    b_ref = _b_energy(p_ref, grid, output_every)
    ref_total_T = reference.states[-1].u + reference.states[-1].v
    phi = smooth_test_bump(grid)
    vol = grid.cell_volume

    def member(sig: float) -> Trajectory:
        mp = dataclasses.replace(params, sigma=sig)
        try:
            return run(s0, mp, T, output_every, grid, law="brinkman", c_cfl=c_cfl)
        except Exception as exc:
            raise BdlabError(f"sweep member sigma={sig} failed: {exc}") from exc

    if jobs > 1 and len(sigmas) > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
            trajs = list(pool.map(member, sigmas))
    else:
        trajs = [member(s) for s in sigmas]

    report = ConvergenceReport(q_list=tuple(q_list), reference_b=b_ref)
    for sig, traj in zip(sigmas, trajs):
        if member_callback is not None:
            member_callback(sig, traj)
        pressures, potentials = _potentials(traj)
        diffs = [pm - pr for pm, pr in zip(pressures, p_ref)]
        e_p = tuple(lq_spacetime_norm(diffs, output_every, grid, q) for q in q_list)
        grad_gap = 0.0
        for W, gr in zip(potentials, gp_ref):
            g = gradient(W, grid) - gr
            grad_gap += float(np.sum(g * g))
        e_grad = math.sqrt(grad_gap * vol * output_every)
        # sigma lap W = W - p exactly, so e_lap needs no stencil
        e_lap = lq_spacetime_norm(
            [W - p for W, p in zip(potentials, pressures)], output_every, grid, 2
        )
        e_norm = abs(_b_energy(potentials, grid, output_every) - b_ref)
        total_T = traj.states[-1].u + traj.states[-1].v
        trace = abs(float(np.sum((total_T - ref_total_T) * phi) * vol))
        report.rows.append(
            ConvergenceRow(
                sigma=sig, e_p=e_p, e_grad=e_grad, e_lap=e_lap,
                e_norm=e_norm, trace_gap=trace,
            )
        )
        report.shift_curves.append(
            ShiftCurve(
                sigma=sig,
                shifts=SHIFT_CELLS,
                omegas=tuple(
                    shift_modulus(pressures, s, grid, output_every) for s in SHIFT_CELLS
                ),
            )
        )
        b_member = _b_energy(potentials, grid, output_every)
        m0 = second_moment(s0.u, grid) + second_moment(s0.v, grid)
        worst = 0.0
        for t, state in zip(traj.times, traj.states):
            m = second_moment(state.u, grid) + second_moment(state.v, grid)
            env = gronwall_moment_envelope(m0, b_member, traj.params, t)
            if env > 0:
                worst = max(worst, m / env)
            elif m > 0:
                worst = math.inf
        report.moment_checks.append((sig, worst))
    return report
