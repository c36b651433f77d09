"""Time stepper: fixed points, conservation order, damping, watchdog."""

import math

import numpy as np
import pytest

from waveplate.functionals import quadratic_energy, take_snapshot, total_energy
from waveplate.integrator import (
    _solve_damping,
    advance,
    energy_identity_residual,
    simulate,
)
from waveplate.mesh import State, build_mesh
from waveplate.params import build_params_unchecked, power_damping, validate_params


def smooth_state(mesh, amp=1.0, vel=0.0):
    X, Y = np.meshgrid(*mesh.axes, indexing="ij")
    u = amp * np.sin(np.pi * X) * Y**2
    ut = vel * np.sin(np.pi * X) * Y
    w = np.zeros(mesh.wall_shape)
    wt = np.zeros(mesh.wall_shape)
    u[mesh.gamma0_mask] = 0.0
    ut[mesh.gamma0_mask] = 0.0
    return State(u=u, ut=ut, w=w, wt=wt)


def test_zero_state_is_fixed_point(mesh17, params):
    st = State(u=np.zeros(mesh17.n), ut=np.zeros(mesh17.n),
               w=np.zeros(mesh17.wall_shape), wt=np.zeros(mesh17.wall_shape))
    new, rep = advance(st, 0.01, mesh17, params)
    assert np.all(new.u == 0.0) and np.all(new.ut == 0.0)
    assert np.all(new.w == 0.0) and np.all(new.wt == 0.0)
    assert rep.damping_dissipation == 0.0


def test_conservative_configuration_second_order(mesh17):
    # linear undamped: the per-step identity defect halves ~4x with dt/2
    params = build_params_unchecked(sources_on=False, damping_on=False)
    assert params.alpha == 0.0 and params.beta == 0.0
    st = smooth_state(mesh17, amp=0.3, vel=0.2)
    worst = []
    for dt in (0.02, 0.01, 0.005):
        rec = simulate(st.copy(), mesh17, params, dt=dt, t_end=0.5, stride=1,
                       residual_budget=math.inf)
        worst.append(max(s.residual for s in rec.snapshots))
    orders = [math.log2(worst[i] / worst[i + 1]) for i in range(2)]
    assert min(orders) > 1.9, (worst, orders)


def test_damping_dissipates(mesh17):
    params = build_params_unchecked(sources_on=False, damping_on=True)
    st = smooth_state(mesh17, amp=0.3, vel=1.0)
    e_prev = total_energy(st, mesh17, params)
    e0 = e_prev
    for _ in range(50):
        st, rep = advance(st, 0.01, mesh17, params)
        assert rep.damping_dissipation >= 0.0
        e_now = total_energy(st, mesh17, params)
        # decrease up to the scheme defect
        assert e_now <= e_prev + 1e-6 * (1.0 + e_prev)
        e_prev = e_now
    assert e_prev < 0.9 * e0


def test_moment_rate_matches_centered_difference(mesh17, params):
    errs = []
    for dt in (0.02, 0.01):
        rec = simulate(smooth_state(mesh17, amp=0.3, vel=0.2), mesh17, params,
                       dt=dt, t_end=0.4, stride=1)
        n = rec.column("moment")
        rate = rec.column("moment_rate")
        fd = (n[2:] - n[:-2]) / (2.0 * dt)
        errs.append(float(np.max(np.abs(fd - rate[1:-1]))))
    # the rate column is consistent with the sampled moment trajectory
    assert errs[0] < 1e-3
    assert errs[1] < 0.6 * errs[0], errs


def test_solve_damping_pointwise_equation():
    rng = np.random.default_rng(31)
    v = 3.0 * rng.standard_normal((40, 40))
    law = power_damping(2.0, 1.3)
    dt = 0.07
    x, iters = _solve_damping(v, dt, law)
    resid = x + dt * 1.3 * np.abs(x) * x - v
    assert np.max(np.abs(resid)) < 1e-12 * (1.0 + np.max(np.abs(v)))
    assert 0 < iters <= 60
    # damping shrinks and keeps sign
    assert np.all(np.sign(x) == np.sign(v))
    assert np.all(np.abs(x) <= np.abs(v))
    off, it0 = _solve_damping(v, dt, power_damping(2.0, 0.0))
    assert it0 == 0 and np.array_equal(off, v)


def test_energy_identity_residual_formula(mesh17, params):
    st = smooth_state(mesh17, amp=0.2, vel=0.1)
    before = take_snapshot(st, mesh17, params)
    new, rep = advance(st, 0.01, mesh17, params)
    after = take_snapshot(new, mesh17, params)
    got = energy_identity_residual(before, after, rep)
    raw = abs(after.total - before.total + rep.damping_dissipation)
    assert got == pytest.approx(raw / (1.0 + before.quad), rel=1e-15)
    assert got < 1e-5


def test_watchdog_halves_to_the_limit(mesh17, params):
    # small amplitude, no limiter clipping: an impossible budget must burn
    # all allowed halvings and mark the run
    rec = simulate(smooth_state(mesh17, amp=0.3, vel=0.2), mesh17, params,
                   dt=0.02, t_end=0.2, stride=1, residual_budget=1e-18,
                   max_halvings=3)
    assert rec.halvings == 3
    assert rec.dt_final == pytest.approx(0.02 / 8.0, rel=1e-12)
    assert rec.unreliable
    assert rec.termination == "t_end"


def test_clean_run_keeps_dt(mesh17, params):
    rec = simulate(smooth_state(mesh17, amp=0.3, vel=0.2), mesh17, params,
                   dt=0.01, t_end=0.3, stride=5)
    assert rec.halvings == 0
    assert not rec.unreliable
    assert rec.dt_final == rec.dt_base
    t = rec.times
    assert t[0] == 0.0
    assert t[-1] == pytest.approx(0.3, abs=1e-9)
    assert np.all(np.diff(t) > 0.0)
    assert max(s.residual for s in rec.snapshots) < 1e-3


def test_divergence_detection(mesh17, params):
    st = smooth_state(mesh17, amp=12.0)
    e0 = quadratic_energy(st, mesh17)
    rec = simulate(st, mesh17, params, dt=0.005, t_end=5.0, stride=2,
                   divergence_cap=50.0 * e0)
    assert rec.termination == "diverged"
    assert rec.t_blow is not None and 0.0 < rec.t_blow < 5.0
    assert rec.snapshots[-1].flag == "diverged"
    assert rec.step_stats["steps"] > 0


def test_wallclock_cutoff(mesh17, params):
    rec = simulate(smooth_state(mesh17, amp=0.3), mesh17, params,
                   dt=0.01, t_end=50.0, stride=10, wallclock=0.05)
    assert rec.termination == "wallclock"
    assert rec.times[-1] < 50.0
