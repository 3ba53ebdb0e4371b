import numpy as np
import pytest

from bdlab.dynamics import ModelParams, SimState
from bdlab.errors import StabilityError
from bdlab.grid import GridSpec, make_grid
from bdlab.presets import build_initial_state
from bdlab.regularized import (
    RegParams,
    diffusive_dt,
    q_truncate,
    regularization_sweep,
    regularized_max_principle_probe,
    run_regularized,
    step_regularized,
)


# --- oracle ---------------------------------------------------------

def stencil_heat_step(rho, dt, epsilon, grid):
    """Explicit 3-point heat update, spelled out independently."""
    assert grid.dimension == 1
    lap = (np.roll(rho, -1) - 2.0 * rho + np.roll(rho, 1)) / grid.dx**2
    return rho + dt * epsilon * lap


def grid1(n=128, L=6.0):
    return make_grid(GridSpec(dimension=1, half_width=L, cells=n))


MODEL = ModelParams(gamma=2.0, p_H=1.0, sigma=0.05)


# --- truncation -----------------------------------------------------

def test_truncation_values():
    out = q_truncate(np.array([0.5, 2.0, 3.0]), p_H=1.0)
    assert list(out) == [0.5, 2.0, 2.0]


def test_truncation_idempotent_and_monotone():
    p = np.linspace(0.0, 5.0, 101)
    q = q_truncate(p, p_H=1.0)
    assert np.array_equal(q_truncate(q, p_H=1.0), q)
    assert np.all(np.diff(q) >= 0.0)
    assert np.all(np.abs(np.diff(q)) <= np.abs(np.diff(p)) + 1e-15)


def test_truncation_rejects_negative_pressure():
    with pytest.raises(ValueError, match="nonnegative"):
        q_truncate(np.array([-0.1]), p_H=1.0)


# --- parameter validation -------------------------------------------

def test_reg_params_need_positive_sigma():
    with pytest.raises(ValueError, match="sigma > 0"):
        RegParams(model=ModelParams(gamma=2.0, sigma=0.0), epsilon=0.1, delta=0.1)


def test_reg_params_reject_negative_knobs():
    with pytest.raises(ValueError, match="epsilon"):
        RegParams(model=MODEL, epsilon=-1.0, delta=0.1)
    with pytest.raises(ValueError, match="delta"):
        RegParams(model=MODEL, epsilon=0.1, delta=-1.0)


def test_diffusive_bound():
    g = grid1(n=120, L=6.0)  # dx = 0.1
    assert diffusive_dt(0.01, g) == pytest.approx(0.5)
    assert diffusive_dt(0.0, g) == np.inf
    g2 = make_grid(GridSpec(dimension=2, half_width=6.0, cells=120))
    assert diffusive_dt(0.01, g2) == pytest.approx(0.25)


# --- stepping -------------------------------------------------------

def test_step_rejects_dt_above_diffusive_bound():
    g = grid1()
    s = build_initial_state("gaussian-pair", g, MODEL)
    rp = RegParams(model=MODEL, epsilon=50.0, delta=0.01)
    with pytest.raises(StabilityError, match="diffusive"):
        step_regularized(s, rp, dt=0.9 * diffusive_dt(1.0, g), grid=g)


def test_step_rejects_dt_above_advective_bound():
    g = grid1()
    s = build_initial_state("gaussian-pair", g, MODEL)
    rp = RegParams(model=MODEL, epsilon=0.0, delta=0.01)
    with pytest.raises(StabilityError, match="CFL"):
        step_regularized(s, rp, dt=10.0, grid=g)


def test_homeostatic_split_stays_put():
    g = grid1()
    rng = np.random.default_rng(83)
    split = rng.random(g.shape)
    s = SimState(t=0.0, u=split.copy(), v=1.0 - split)  # total 1, p = p_H
    rp = RegParams(model=MODEL, epsilon=0.02, delta=0.05)
    out = step_regularized(s, rp, dt=0.05, grid=g)
    # the uniform total kills transport and relaxation; only the
    # epsilon heat term acts on each species
    expect_u = stencil_heat_step(s.u, 0.05, rp.epsilon, g)
    assert np.max(np.abs(out.u - expect_u)) <= 1e-12
    assert np.max(np.abs((out.u + out.v) - 1.0)) <= 1e-12


def test_pure_heat_spike_spreads_and_conserves_mass():
    g = grid1(n=128)
    u = np.zeros(g.shape)
    u[64] = 0.6
    s = SimState(t=0.0, u=u, v=0.8 - u)  # uniform total below p_H
    rp = RegParams(
        model=ModelParams(gamma=2.0, p_H=1.0, sigma=0.05, alpha=0.0),
        epsilon=0.05,
        delta=0.0,
    )
    dt = 0.4 * diffusive_dt(rp.epsilon, g)
    out = s
    for _ in range(20):
        out = step_regularized(out, rp, dt, grid=g)
    # transport and relaxation only leave FFT roundoff behind
    one = step_regularized(s, rp, dt, grid=g).u
    assert np.max(np.abs(one - stencil_heat_step(u, dt, rp.epsilon, g))) <= 1e-13
    assert out.u.max() < u.max()
    assert out.u[60] > 0.0  # spread past the immediate neighbors
    assert out.u.min() >= -1e-14
    assert np.sum(out.u) * g.cell_volume == pytest.approx(
        np.sum(u) * g.cell_volume, rel=1e-12
    )


# --- runs and probe -------------------------------------------------

def test_run_schedule_validation():
    g = grid1()
    s = build_initial_state("gaussian-pair", g, MODEL)
    rp = RegParams(model=MODEL, epsilon=0.01, delta=0.01)
    with pytest.raises(ValueError, match="T"):
        run_regularized(s, rp, T=0.0, output_every=0.1, grid=g)
    with pytest.raises(ValueError, match="output_every"):
        run_regularized(s, rp, T=0.1, output_every=0.2, grid=g)
    with pytest.raises(ValueError, match="integer multiple"):
        run_regularized(s, rp, T=0.5, output_every=0.3, grid=g)


def test_probe_quiet_below_homeostasis():
    g = grid1(n=128)
    s = build_initial_state("gaussian-pair", g, MODEL)
    rp = RegParams(model=MODEL, epsilon=0.01, delta=0.01)
    traj = run_regularized(s, rp, T=0.2, output_every=0.1, grid=g)
    report = regularized_max_principle_probe(traj)
    assert report.max_pressure < MODEL.p_H
    assert not report.exceeded
    assert not report.assumption_breach
    assert report.q_active_steps == 0


def test_probe_flags_super_homeostatic_seed():
    # start at p = 1.5 p_H: the admissibility assumption is breached
    # but the truncation never engages below 2 p_H
    g = grid1(n=128)
    total = np.full(g.shape, 1.5**0.5)
    s = SimState(t=0.0, u=0.5 * total, v=0.5 * total)
    rp = RegParams(model=MODEL, epsilon=0.01, delta=0.01)
    traj = run_regularized(s, rp, T=0.05, output_every=0.05, grid=g)
    report = regularized_max_principle_probe(traj)
    assert report.assumption_breach
    assert report.exceeded
    assert report.max_pressure == pytest.approx(1.5, rel=1e-12)
    assert report.q_active_steps == 0


def test_truncation_engages_above_twice_homeostasis():
    g = grid1(n=128)
    bump = np.exp(-g.centers[0] ** 2)
    total = (3.0 * bump) ** 0.5  # peak pressure 3 p_H
    s = SimState(t=0.0, u=0.5 * total, v=0.5 * total)
    rp = RegParams(model=MODEL, epsilon=0.02, delta=0.05)
    traj = run_regularized(s, rp, T=0.2, output_every=0.2, grid=g)
    assert traj.q_active_steps >= 1
    report = regularized_max_principle_probe(traj)
    assert report.assumption_breach and report.exceeded


def test_sweep_gap_shrinks_with_the_knobs():
    # needs the fine grid: at N=256 the donor-cell scheme's own
    # numerical viscosity is comparable to the middle epsilon and the
    # ordering washes out
    g = grid1(n=512)
    model = MODEL
    s = build_initial_state("gaussian-pair", g, model)
    rows = regularization_sweep(
        s, model, [(0.1, 0.1), (0.01, 0.01), (0.001, 0.001)],
        T=0.5, output_every=0.5, grid=g,
    )
    gaps = [r.l1_gap for r in rows]
    assert gaps[0] > gaps[1] > gaps[2]
    assert all(r.q_active_steps == 0 for r in rows)
    assert all(r.max_p <= model.p_H * (1.0 + 1e-6) for r in rows)
    assert all(r.min_density == 0.0 for r in rows)
