"""Acceptance suite: ten go/no-go properties, one printed line each.

Every test registers a PASS/FAIL line (with its measured runtime against
the budget) before asserting, so the summary block always shows all ten
verdicts even on a red run.  Tolerances are pinned here on purpose; loosen
nothing without revisiting the derivations in the package docstrings.
"""

import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from waveplate.harness import _cumulative_allowance
from waveplate.integrator import simulate
from waveplate.mesh import State, build_mesh
from waveplate.params import build_params_unchecked, power_source, validate_params
from waveplate.wellconstants import (
    energy_cap_value,
    depth_lower_bound,
    solve_xnorm_peak,
    solve_y_crit,
    xnorm_barrier,
)


def register(num, name, ok, detail, elapsed, budget):
    mark = "PASS" if ok and elapsed < budget else "FAIL"
    ACCEPTANCE_LINES.append(
        f"criterion {num:2d} [{mark}] {name}: {detail}"
        f" ({elapsed:.2f}s, budget {budget:g}s)")
    return mark == "PASS"


def test_criterion_01_closed_form_anchors():
    t0 = time.perf_counter()
    tol = 1e-10
    y0 = solve_y_crit(1.0, 1.0, 1.0, 3.0, 3.0)
    d = depth_lower_bound(1.0, 1.0, 1.0, 3.0, 3.0, y0)
    cap = energy_cap_value(1.0, y0)
    xpk = solve_xnorm_peak(1.0, 1.0, 1.0, 3.0, 3.0)
    peak_val = xnorm_barrier(xpk, 1.0, 1.0, 1.0, 3.0, 3.0)
    errs = {
        "critical level": abs(y0 - 1.0 / 16.0),
        "depth": abs(d - 1.0 / 32.0),
        "energy cap": abs(cap - 1.0 / 224.0),
        "norm peak": abs(xpk - math.sqrt(1.0 / 8.0)),
        "barrier at peak": abs(peak_val - 1.0 / 32.0),
    }
    elapsed = time.perf_counter() - t0
    ok = max(errs.values()) < tol
    detail = f"worst closed-form error {max(errs.values()):.2e} < 1e-10"
    assert register(1, "unit-constant closed forms", ok, detail, elapsed, 1.0)


def test_criterion_02_depth_bracket(constants65_timed, params):
    wc = constants65_timed["constants"]
    elapsed = constants65_timed["elapsed"]
    ratio = min((params.p - 1.0) / (params.p + 1.0),
                (params.q - 1.0) / (params.q + 1.0))
    lower_anchor = wc.y_crit * ratio
    ok = (wc.depth_lb <= wc.depth_ub
          and wc.depth_lb >= lower_anchor * (1.0 - 1e-12)
          and "128 random directions" in wc.provenance["depth_ub"])
    detail = (f"certified {wc.depth_lb:.6g} <= sampled {wc.depth_ub:.6g}"
              f" over 128 directions; anchor {lower_anchor:.6g}")
    assert register(2, "well-depth bracket", ok, detail, elapsed, 60.0)
    assert wc.depth_lb <= wc.depth_ub
    assert wc.depth_lb >= lower_anchor * (1.0 - 1e-12)


def test_criterion_03_energy_identity(mesh65, params):
    t0 = time.perf_counter()
    # (a) linear undamped: per-step residual drops at order >= 1.9
    lin = build_params_unchecked(sources_on=False, damping_on=False)
    X, Y = np.meshgrid(*mesh65.axes, indexing="ij")
    u = 0.3 * np.sin(np.pi * X) * Y**2
    ut = 0.2 * np.sin(np.pi * X) * Y
    u[mesh65.gamma0_mask] = 0.0
    ut[mesh65.gamma0_mask] = 0.0
    st = State(u=u, ut=ut, w=np.zeros(mesh65.wall_shape),
               wt=np.zeros(mesh65.wall_shape))
    worst = []
    for dt in (0.02, 0.01, 0.005):
        rec = simulate(st.copy(), mesh65, lin, dt=dt, t_end=0.5, stride=1,
                       residual_budget=math.inf)
        worst.append(max(s.residual for s in rec.snapshots))
    orders = [math.log2(worst[i] / worst[i + 1]) for i in range(2)]

    # (b) damped nonlinear: normalized residual < 1e-3 outside the last 5%
    amp_u = 0.05 * np.sin(np.pi * X) ** 2 * np.sin(np.pi * Y) ** 2
    nl = State(u=amp_u, ut=np.zeros(mesh65.n), w=np.zeros(mesh65.wall_shape),
               wt=np.zeros(mesh65.wall_shape))
    rec = simulate(nl, mesh65, params, dt=0.01, t_end=2.0, stride=5)
    times = rec.times
    cut = times[0] + 0.95 * (times[-1] - times[0])
    res_head = max(s.residual for s in rec.snapshots if s.time <= cut)

    elapsed = time.perf_counter() - t0
    ok = min(orders) >= 1.9 and res_head < 1e-3
    detail = (f"refinement orders {orders[0]:.2f}/{orders[1]:.2f} >= 1.9;"
              f" damped residual {res_head:.2e} < 1e-3")
    assert register(3, "energy-identity residual", ok, detail, elapsed, 120.0)
    assert min(orders) >= 1.9, (worst, orders)
    assert res_head < 1e-3


def test_criterion_04_stable_regime(w1_run, params, constants65):
    res = w1_run["result"]
    elapsed = w1_run["elapsed"]
    rec = res.record
    total = rec.column("total")
    quad = rec.column("quad")
    c = min(params.c1, params.c3)
    bound = c * constants65.depth_ub / (c - 2.0) * 1.05
    allow = _cumulative_allowance(rec.snapshots, rec.dt_final)
    conds = {
        "precondition: initial total below half the depth estimate":
            total[0] < 0.5 * constants65.depth_ub,
        "ran to the final time": rec.termination == "t_end"
            and rec.times[-1] >= 20.0 - 1e-9,
        "stable classification at every sample":
            all(cl == "W1" for cl in res.classification),
        "quadratic energy bound": float(np.max(quad)) <= bound,
        "total energy never rises past its start":
            bool(np.all(total <= total[0] + allow)),
    }
    ok = all(conds.values())
    detail = (f"max E {np.max(quad):.4g} <= {bound:.4g}; "
              f"{len(rec.snapshots)} samples all W1; t_end 20")
    assert register(4, "stable-well global run", ok, detail, elapsed, 300.0)
    for name, good in conds.items():
        assert good, name


def test_criterion_05_unstable_set_invariance(positive_run, constants65):
    res = positive_run["result"]
    elapsed = positive_run["elapsed"]
    rec = res.record
    total0 = rec.snapshots[0].total
    pre = [cl for s, cl in zip(rec.snapshots, res.classification)
           if s.flag != "diverged"]
    conds = {
        "precondition: 0 <= initial total < certified depth":
            0.0 <= total0 < constants65.depth_lb,
        "run reached the divergence cap": rec.termination == "diverged",
        "unstable classification until divergence":
            all(cl == "W2" for cl in pre),
    }
    ok = all(conds.values())
    detail = (f"initial total {total0:.4g} in [0, {constants65.depth_lb:.4g});"
              f" {len(pre)} pre-divergence samples all W2")
    assert register(5, "unstable-set invariance", ok, detail, elapsed, 300.0)
    for name, good in conds.items():
        assert good, name


def test_criterion_06_negative_energy_escape(negative_run):
    res = negative_run["result"]
    elapsed = negative_run["elapsed"]
    rec = res.record
    v = res.verdict
    base = rec.column("deficit_or_headroom")
    src = rec.column("source")
    viol_start = float(np.mean(base < base[0] - 1e-12 * (1.0 + abs(base[0]))))
    conds = {
        "escape hypotheses hold": v.hypothesis_report.all_passed,
        "diverged at finite time": rec.termination == "diverged"
            and v.t_blow_observed is not None,
        "deficit non-decreasing (<= 1% violations)":
            v.monotonicity.base_fraction_ok >= 0.99,
        "deficit never drops below its start (<= 1% violations)":
            viol_start <= 0.01,
        "deficit bounded by the source potential":
            bool(np.all(base <= src + 1e-12 * (1.0 + np.abs(src)))),
        "fitted growth constant positive": v.kappa_fit > 0.0,
        "observed lifespan within 1.2x comparison":
            v.t_blow_observed <= 1.2 * v.T_comparison,
    }
    ok = all(conds.values())
    detail = (f"t_blow {v.t_blow_observed:.4g} <= 1.2 * {v.T_comparison:.4g};"
              f" kappa {v.kappa_fit:.4g}; monotone"
              f" {v.monotonicity.base_fraction_ok:.2%}")
    assert register(6, "negative-energy escape", ok, detail, elapsed, 600.0)
    for name, good in conds.items():
        assert good, name


def test_criterion_07_positive_energy_escape(positive_run):
    res = positive_run["result"]
    elapsed = positive_run["elapsed"]
    rec = res.record
    v = res.verdict
    items = {it.name: it.passed for it in v.hypothesis_report.items}
    pos = v.positive_report
    sample = {c.name: c.passed for c in pos.checks} if pos else {}
    conds = {
        "full hypothesis chain holds": v.hypothesis_report.all_passed,
        "chain confirms quadratic energy above critical":
            items.get("quadratic energy above the critical level", False),
        "diverged at finite time": rec.termination == "diverged"
            and v.t_blow_observed is not None,
        "headroom non-decreasing":
            v.monotonicity.base_fraction_ok >= 1.0,
        "quadratic energy above the floor at every sample":
            sample.get("quadratic energy stays above the floor level", False),
        "total energy above the barrier at every sample":
            sample.get("total energy dominates the barrier at the quadratic"
                       " energy", False),
    }
    ok = all(conds.values())
    detail = (f"t_blow {v.t_blow_observed:.4g}; floor {pos.energy_floor:.4g};"
              f" headroom monotone {v.monotonicity.base_fraction_ok:.2%}")
    assert register(7, "positive-energy escape", ok, detail, elapsed, 600.0)
    for name, good in conds.items():
        assert good, name


def test_criterion_08_pointwise_algebra():
    t0 = time.perf_counter()
    law = power_source(3.0)
    rng = np.random.default_rng(2024)
    u = rng.uniform(-30.0, 30.0, 10_000)
    scales = rng.uniform(0.05, 20.0, 10_000)
    euler = u * law.f(u) - 4.0 * law.antiderivative(u)
    euler_rel = np.max(np.abs(euler) / (1.0 + np.abs(u * law.f(u))))
    homo = law.antiderivative(scales * u) - scales**4 * law.antiderivative(u)
    homo_rel = np.max(np.abs(homo)
                      / (1.0 + np.abs(scales**4 * law.antiderivative(u))))
    elapsed = time.perf_counter() - t0
    ok = euler_rel < 1e-12 and homo_rel < 1e-12
    detail = (f"Euler defect {euler_rel:.2e}, homogeneity defect"
              f" {homo_rel:.2e}, 10^4 samples")
    assert register(8, "source-law pointwise algebra", ok, detail,
                    elapsed, 1.0)
    assert euler_rel < 1e-12 and homo_rel < 1e-12


def test_criterion_09_trace_inequality():
    t0 = time.perf_counter()
    slacks = []
    for n in (17, 33, 65):
        mesh = build_mesh(dim=2, n=n)
        rng = np.random.default_rng(900 + n)
        worst = -math.inf
        for _ in range(1000):
            u = rng.standard_normal(mesh.n)
            u[mesh.gamma0_mask] = 0.0
            tr = mesh.trace(u)
            lhs = mesh.inner_wall(tr, tr)
            rhs = mesh.inner_omega(u, u) + mesh.grad_norm_sq(u)
            worst = max(worst, lhs - rhs)
        slacks.append(worst)
    elapsed = time.perf_counter() - t0
    if max(slacks) <= 0.0:
        ok = True
        detail = ("no slack needed: worst margins "
                  + "/".join(f"{s:.3g}" for s in slacks))
    else:
        pos = [max(s, 1e-300) for s in slacks]
        orders = [math.log2(pos[i] / pos[i + 1]) for i in range(2)]
        ok = min(orders) >= 1.0
        detail = ("slack orders "
                  + "/".join(f"{o:.2f}" for o in orders) + " >= 1")
    assert register(9, "discrete trace inequality", ok, detail, elapsed, 60.0)
    assert ok


def test_criterion_10_exponent_bookkeeping():
    t0 = time.perf_counter()
    worst = 0.0
    ok = True
    for kw in (dict(), dict(p=4.0, q=3.5, m=2.5, r=1.25),
               dict(p=3.2, q=4.8, m=2.2, r=1.1)):
        prm = validate_params(dim=2, **kw)
        s1 = 1.0 - 2.0 / ((1.0 - 2.0 * prm.a) * (prm.p + 1.0))
        worst = max(worst, abs(prm.sigma1 - s1))
        bounds = (
            1.0 / (prm.m + 1.0) - 1.0 / (prm.p + 1.0),
            1.0 / (prm.r + 1.0) - 1.0 / (prm.q + 1.0),
            (prm.p - 1.0) / (2.0 * (prm.p + 1.0)),
            (prm.q - 1.0) / (2.0 * (prm.q + 1.0)),
        )
        ok = ok and abs(prm.sigma1 - s1) < 1e-14
        ok = ok and 1.0 < prm.mu < 2.0
        ok = ok and 0.0 < prm.a < min(bounds)
    elapsed = time.perf_counter() - t0
    detail = f"worst recomputation gap {worst:.2e} < 1e-14; mu in (1,2)"
    assert register(10, "derived-exponent bookkeeping", ok, detail,
                    elapsed, 1.0)
    assert ok
