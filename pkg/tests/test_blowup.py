"""Escape-scenario machinery: hypotheses, weight selection, growth fits."""

import math
from types import SimpleNamespace

import numpy as np
import pytest

from waveplate.blowup import (
    NEGATIVE,
    POSITIVE,
    _young_constant,
    analyze_record,
    check_hypotheses,
    comparison_lifespan,
    fit_inequality,
    monotonicity_report,
    select_epsilon,
)
from waveplate.mesh import State


def zero_state(mesh):
    return State(u=np.zeros(mesh.n), ut=np.zeros(mesh.n),
                 w=np.zeros(mesh.wall_shape), wt=np.zeros(mesh.wall_shape))


def test_young_constant_inequality():
    rng = np.random.default_rng(41)
    for expo in (1.5, 2.0, 3.0):
        for delta in (0.05, 0.7, 2.0):
            c = _young_constant(delta, expo)
            x = rng.uniform(0.0, 5.0, 4000)
            y = rng.uniform(0.0, 5.0, 4000)
            lhs = x * y
            rhs = delta * x ** (expo + 1.0) + c * y ** ((expo + 1.0) / expo)
            assert np.all(lhs <= rhs * (1.0 + 1e-12))


def test_young_constant_is_tight():
    # equality is attained where the split balances; scan for near-touching
    delta, expo = 0.3, 2.0
    c = _young_constant(delta, expo)
    x = np.linspace(1e-3, 5.0, 2000)
    for y in (0.1, 1.0, 3.0):
        gap = delta * x ** (expo + 1.0) + c * y ** ((expo + 1.0) / expo) - x * y
        assert gap.min() >= -1e-12
        assert gap.min() < 1e-3 * y  # the bound is nearly attained


def test_select_epsilon_candidates(mesh33, params):
    g0 = 0.7
    ch = select_epsilon(g0, -2.0, params, mesh33, scenario=NEGATIVE)
    assert ch.eps <= 1.0 + 1e-15
    assert ch.eps <= g0 + 1e-15
    assert ch.eps <= ch.rho_budget * (1.0 + 1e-15)
    assert ch.eps <= ch.sign_barrier * (1.0 + 1e-15)
    # starting value keeps at least half of the pure base term
    assert ch.floor_ok
    assert ch.y_start >= 0.5 * g0 ** (1.0 - params.a) * (1.0 - 1e-12)
    # sign barrier closed form
    expect = g0 ** (1.0 - params.a) / 4.0
    assert ch.sign_barrier == pytest.approx(expect, rel=1e-12)
    lines = "\n".join(ch.lines())
    assert "eps =" in lines and "sign barrier" in lines


def test_select_epsilon_nonnegative_rate_has_no_barrier(mesh33, params):
    ch = select_epsilon(0.7, 0.5, params, mesh33, scenario=NEGATIVE)
    assert math.isinf(ch.sign_barrier)
    assert ch.y_start > 0.7 ** (1.0 - params.a)


def test_select_epsilon_positive_scenario_halves_the_split(mesh33, params):
    neg = select_epsilon(0.7, -1.0, params, mesh33, scenario=NEGATIVE)
    pos = select_epsilon(0.7, -1.0, params, mesh33, scenario=POSITIVE)
    assert pos.delta1 == pytest.approx(0.5 * neg.delta1, rel=1e-12)
    assert pos.delta2 == pytest.approx(0.5 * neg.delta2, rel=1e-12)
    # smaller split -> larger Young constant -> tighter budget
    assert pos.rho_budget < neg.rho_budget


def test_select_epsilon_rejects(mesh33, params):
    with pytest.raises(ValueError, match="positive initial base"):
        select_epsilon(0.0, -1.0, params, mesh33)
    with pytest.raises(ValueError, match="scenario"):
        select_epsilon(1.0, -1.0, params, mesh33, scenario="sideways")


def synthetic_record(times, yvals, bases=None, quad=1.0, residual=1e-12):
    if bases is None:
        bases = np.ones_like(yvals)
    snaps = [SimpleNamespace(time=float(t), indicator=float(y),
                             deficit_or_headroom=float(b), quad=quad,
                             residual=residual)
             for t, y, b in zip(times, yvals, bases)]
    return SimpleNamespace(snapshots=snaps, dt_final=float(times[1] - times[0]))


def test_fit_inequality_recovers_power_law():
    # exact solution of y' = kappa * y^mu from y0 = 1
    kappa, mu = 2.0, 1.25
    tstar = 1.0 / (kappa * (mu - 1.0))
    t = np.linspace(0.0, 0.8 * tstar, 400)
    y = (1.0 - kappa * (mu - 1.0) * t) ** (-1.0 / (mu - 1.0))
    a = 1.0 - 1.0 / mu
    rec = synthetic_record(t, y)
    kfit, viol = fit_inequality(rec, eps=1.0, a=a)
    assert viol == 0.0
    # centered differences on a convex curve overshoot by O(h^2)
    assert kfit == pytest.approx(kappa, rel=5e-3)


def test_fit_inequality_flat_trajectory_gives_zero():
    t = np.linspace(0.0, 1.0, 50)
    rec = synthetic_record(t, np.ones_like(t))
    kfit, viol = fit_inequality(rec, eps=1.0, a=1.0 / 24.0)
    assert kfit == 0.0
    assert viol == 0.0


def test_fit_inequality_needs_samples():
    rec = synthetic_record(np.array([0.0, 0.1]), np.array([1.0, 1.1]))
    with pytest.raises(ValueError, match="three usable samples"):
        fit_inequality(rec, eps=1.0, a=1.0 / 24.0)


def test_comparison_lifespan_closed_forms():
    assert comparison_lifespan(1.0, 1.0, 2.0) == pytest.approx(1.0, rel=1e-14)
    assert comparison_lifespan(4.0, 1.0, 1.5) == pytest.approx(1.0, rel=1e-14)
    assert comparison_lifespan(1.0, 0.0, 2.0) == math.inf
    assert comparison_lifespan(1.0, -3.0, 2.0) == math.inf
    with pytest.raises(ValueError):
        comparison_lifespan(0.0, 1.0, 2.0)
    with pytest.raises(ValueError):
        comparison_lifespan(1.0, 1.0, 1.0)


def test_monotonicity_report_counts_violations():
    t = np.linspace(0.0, 1.0, 21)
    y = t.copy()
    y[10] = y[9] - 0.5  # one hard drop, well beyond any drift allowance
    rec = synthetic_record(t, y, bases=1.0 + t)
    rep = monotonicity_report(rec, tail_exclude=0.0)
    assert rep.n_pairs == 20
    assert rep.base_fraction_ok == 1.0
    assert rep.y_fraction_ok == pytest.approx(1.0 - 1.0 / 20.0)


def test_hypotheses_zero_state_fails_negative(mesh33, params, constants65):
    rep = check_hypotheses(zero_state(mesh33), constants65, mesh33, params,
                           NEGATIVE)
    items = {it.name: it for it in rep.items}
    assert not items["initial total energy is negative"].passed
    assert not rep.all_passed
    assert any("FAIL" in ln or "fail" in ln for ln in rep.lines())


def test_hypotheses_zero_state_fails_positive(mesh33, params, constants65):
    rep = check_hypotheses(zero_state(mesh33), constants65, mesh33, params,
                           POSITIVE)
    items = {it.name: it for it in rep.items}
    assert items["initial total energy is nonnegative"].passed
    assert not items["quadratic energy above the critical level"].passed
    assert not rep.all_passed


def test_analyze_negative_run(negative_run, params, constants65):
    res = negative_run["result"]
    verdict = res.record.verdict
    assert verdict is not None
    assert verdict.diverged
    assert verdict.kappa_fit > 0.0
    assert verdict.t_blow_observed is not None
    assert verdict.t_blow_observed <= 1.2 * verdict.T_comparison
    assert verdict.lifespan_ok
    assert verdict.monotonicity.base_fraction_ok >= 0.99
