"""Blow-up apparatus: hypothesis checks, the auxiliary-functional weight,
growth-inequality fits, and comparison lifespans.

Everything here is post-processing.  The integrator records the trajectory;
this module decides whether the recorded trajectory is consistent with the
finite-time-escape mechanism: a weighted functional Y = base^(1-a) + eps*N'
that must grow superlinearly (Y' >= kappa * Y^mu for some kappa > 0), which
forces divergence no later than the blow-up time of the scalar comparison
ODE.  The weight eps is not free: it has to be small enough that the
dissipation terms cannot overwhelm the growth, and the admissible budget is
computed here with explicit Young constants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .functionals import (
    moment_rate,
    nehari_value,
    quadratic_energy,
    stiffness_only_sq,
    total_energy,
)
from .mesh import Mesh, State
from .params import ModelParams
from .wellconstants import WellConstants, barrier, solve_energy_floor

NEGATIVE = "negative_energy"
POSITIVE = "positive_energy"


# ---------------------------------------------------------------------- #
# hypothesis checks


@dataclass(frozen=True)
class HypothesisItem:
    name: str
    passed: bool
    value: float
    threshold: float
    relation: str  # "<", ">", ">=", "<=" relating value to threshold

    def line(self) -> str:
        mark = "pass" if self.passed else "FAIL"
        return f"  [{mark}] {self.name}: {self.value:.12g} {self.relation} {self.threshold:.12g}"


@dataclass(frozen=True)
class HypothesisReport:
    scenario: str
    items: tuple[HypothesisItem, ...]

    @property
    def all_passed(self) -> bool:
        return all(it.passed for it in self.items)

    def lines(self) -> list[str]:
        head = f"hypothesis ledger ({self.scenario}):"
        return [head] + [it.line() for it in self.items]


def check_hypotheses(
    initial: State,
    constants: WellConstants,
    mesh: Mesh,
    params: ModelParams,
    scenario: str,
) -> HypothesisReport:
    """Evaluate every hypothesis of the chosen escape scenario numerically.

    Failures are reported, never thrown: an infeasible configuration is a
    legitimate experiment and the ledger is the deliverable.  For the
    positive-energy scenario the unstable-set membership is unwound into
    its implication chain (negative stationarity gap, squared phase norm
    above twice the critical level, quadratic energy above the critical
    level) so each link is visible with its value.
    """
    if scenario not in (NEGATIVE, POSITIVE):
        raise ValueError(f"unknown blow-up scenario {scenario!r}")
    total0 = total_energy(initial, mesh, params)
    items: list[HypothesisItem] = []
    if scenario == NEGATIVE:
        items.append(HypothesisItem(
            "initial total energy is negative", total0 < 0.0, total0, 0.0, "<"))
        items.append(HypothesisItem(
            "wave source outgrows wave damping (p > m)",
            params.p > params.m, params.p, params.m, ">"))
        items.append(HypothesisItem(
            "plate source outgrows plate damping (q > r)",
            params.q > params.r, params.q, params.r, ">"))
    else:
        cap = min(constants.energy_cap, constants.depth_lb)
        items.append(HypothesisItem(
            "initial total energy is nonnegative", total0 >= 0.0, total0, 0.0, ">="))
        items.append(HypothesisItem(
            "initial total energy below the admissible cap",
            total0 < cap, total0, cap, "<"))
        neh = nehari_value(initial.u, initial.w, mesh, params)
        items.append(HypothesisItem(
            "negative stationarity gap (unstable side of the well)",
            neh < 0.0, neh, 0.0, "<"))
        xsq = stiffness_only_sq(initial.u, initial.w, mesh)
        items.append(HypothesisItem(
            "squared phase norm above twice the critical level",
            xsq > 2.0 * constants.y_crit, xsq, 2.0 * constants.y_crit, ">"))
        equad = quadratic_energy(initial, mesh)
        items.append(HypothesisItem(
            "quadratic energy above the critical level",
            equad > constants.y_crit, equad, constants.y_crit, ">"))
    return HypothesisReport(scenario=scenario, items=tuple(items))


# ---------------------------------------------------------------------- #
# weight selection


def _young_constant(delta: float, expo: float) -> float:
    # a*b <= delta*a^(e+1) + C_delta*b^((e+1)/e)  with
    # C_delta = (delta*(e+1))^(-1/e) * e/(e+1)
    return (delta * (expo + 1.0)) ** (-1.0 / expo) * expo / (expo + 1.0)


@dataclass(frozen=True)
class EpsilonChoice:
    eps: float
    scenario: str
    base0: float
    n0prime: float
    rho_budget: float
    sign_barrier: float  # inf when the initial moment rate is nonnegative
    delta1: float
    delta2: float
    r1: float
    r2: float
    y_start: float
    y_floor: float
    floor_ok: bool

    def lines(self) -> list[str]:
        cands = (f"1, base {self.base0:.6g}, dissipation budget "
                 f"{self.rho_budget:.6g}, sign barrier {self.sign_barrier:.6g}")
        return [
            f"weight selection ({self.scenario}):",
            f"  eps = {self.eps:.12g} = min of {{{cands}}}",
            f"  Young splits: delta1 = {self.delta1:.6g}, delta2 = {self.delta2:.6g}",
            f"  damping-vs-source constants: R1 = {self.r1:.6g}, R2 = {self.r2:.6g}",
            f"  Y(0) = {self.y_start:.12g} >= {self.y_floor:.12g} (half the pure base term): "
            + ("ok" if self.floor_ok else "VIOLATED"),
        ]


def select_epsilon(
    g0: float,
    n0prime: float,
    params: ModelParams,
    mesh: Mesh,
    scenario: str = NEGATIVE,
) -> EpsilonChoice:
    """Pick the auxiliary-functional weight eps for Y = base^(1-a) + eps*N'.

    eps = min{1, base(0), dissipation budget, sign barrier}.  The budget is
    the largest eps for which the damping terms, after the Young splits
    delta1, delta2 below, still leave at least half of the (1-a) coefficient
    in front of the nonnegative base'*base^(-a) term.  The sign barrier
    -base^(1-a)(0) / (2 N'(0)) applies only when N'(0) < 0 and guarantees
    Y(0) >= base^(1-a)(0)/2.
    """
    if scenario not in (NEGATIVE, POSITIVE):
        raise ValueError(f"unknown blow-up scenario {scenario!r}")
    if g0 <= 0.0:
        raise ValueError(
            f"weight selection needs a positive initial base, got {g0:g}; "
            "the scenario's sign hypothesis on the initial total energy fails"
        )
    p, q, m, r = params.p, params.q, params.m, params.r
    a = params.a
    lam = params.lam
    alpha_low = min(params.alpha, params.beta)
    beta_up = max(params.alpha, params.beta)

    # Hoelder constants relating each damping integrand to the source part
    # of S, with the lower source-growth constants absorbing the norms.
    r1 = (beta_up * mesh.omega_measure ** ((p - m) / ((p + 1.0) * (m + 1.0)))
          * params.c0 ** (-1.0 / (p + 1.0)))
    r2 = (beta_up * mesh.wall_measure ** ((q - r) / ((q + 1.0) * (r + 1.0)))
          * params.c2 ** (-1.0 / (q + 1.0)))

    # the positive-energy argument starts from lam/2 instead of lam, so the
    # splits halve accordingly
    frac = lam / 4.0 if scenario == NEGATIVE else lam / 8.0
    delta1 = frac * g0 ** (1.0 / (m + 1.0) - 1.0 / (p + 1.0))
    delta2 = frac * g0 ** (1.0 / (r + 1.0) - 1.0 / (q + 1.0))
    cd1 = _young_constant(delta1, m)
    cd2 = _young_constant(delta2, r)
    bracket = (cd1 * r1 ** ((m + 1.0) / m) / alpha_low
               * g0 ** (a + 1.0 / (p + 1.0) - 1.0 / (m + 1.0))
               + cd2 * r2 ** ((r + 1.0) / r) / alpha_low
               * g0 ** (a + 1.0 / (q + 1.0) - 1.0 / (r + 1.0)))
    rho_budget = (1.0 - a) / (2.0 * bracket)

    sign_barrier = math.inf
    if n0prime < 0.0:
        sign_barrier = -(g0 ** (1.0 - a)) / (2.0 * n0prime)

    eps = min(1.0, g0, rho_budget, sign_barrier)
    y_start = g0 ** (1.0 - a) + eps * n0prime
    y_floor = 0.5 * g0 ** (1.0 - a)
    return EpsilonChoice(
        eps=eps, scenario=scenario, base0=g0, n0prime=n0prime,
        rho_budget=rho_budget, sign_barrier=sign_barrier,
        delta1=delta1, delta2=delta2, r1=r1, r2=r2,
        y_start=y_start, y_floor=y_floor,
        floor_ok=bool(y_start >= y_floor * (1.0 - 1e-12)),
    )


# ---------------------------------------------------------------------- #
# trajectory fits


def _fit_window(times, t_cut_head=None, tail_exclude=0.05):
    """Sample mask for trajectory fits: drop the final fraction of the run
    (cap-crossing pollutes the last samples), optionally capped earlier."""
    times = np.asarray(times)
    if times.size == 0:
        return np.zeros(0, dtype=bool)
    t_end = times[-1] if t_cut_head is None else t_cut_head
    cut = times[0] + (1.0 - tail_exclude) * (t_end - times[0])
    return times <= cut + 1e-300


def fit_inequality(record, eps: float, a: float, tail_exclude: float = 0.05):
    """Largest kappa with Y' >= kappa * Y^mu along the recorded trajectory.

    Y' by centered differences on the recorded samples; the window keeps
    samples with a positive base (Y defined) and drops the final fraction
    of the run.  Returns (kappa_fit, violation_fraction): kappa_fit is the
    minimum of Y'/Y^mu clamped at zero, the violation fraction counts
    samples with Y' < 0.
    """
    mu = 1.0 / (1.0 - a)
    times = np.asarray([s.time for s in record.snapshots])
    yvals = np.asarray([s.indicator for s in record.snapshots])
    bases = np.asarray([s.deficit_or_headroom for s in record.snapshots])
    keep = _fit_window(times, tail_exclude=tail_exclude)
    keep &= np.isfinite(yvals) & (bases > 0.0)
    times, yvals = times[keep], yvals[keep]
    if times.size < 3:
        raise ValueError(
            "growth fit window is empty: fewer than three usable samples "
            "with a positive energy base"
        )
    dy = (yvals[2:] - yvals[:-2]) / (times[2:] - times[:-2])
    ymid = yvals[1:-1]
    pos = ymid > 0.0
    if not np.any(pos):
        raise ValueError("growth fit window has no positive Y samples")
    quot = dy[pos] / ymid[pos] ** mu
    kappa_fit = max(0.0, float(np.min(quot)))
    violation_fraction = float(np.mean(dy < 0.0))
    return kappa_fit, violation_fraction


def comparison_lifespan(y0: float, kappa: float, mu: float) -> float:
    """Exact blow-up time of the scalar comparison problem y' = kappa*y^mu,
    y(0) = y0: T = y0^(1-mu) / (kappa*(mu-1)).  kappa <= 0 means no bound."""
    if y0 <= 0.0:
        raise ValueError(f"comparison lifespan needs y0 > 0, got {y0:g}")
    if mu <= 1.0:
        raise ValueError(f"comparison lifespan needs mu > 1, got {mu:g}")
    if kappa <= 0.0:
        return math.inf
    return y0 ** (1.0 - mu) / (kappa * (mu - 1.0))


# ---------------------------------------------------------------------- #
# per-sample trajectory checks


def _pair_tolerances(snaps, dt, scale):
    """Drift allowance between consecutive samples: the recorded worst
    per-step residual times the number of steps in the window."""
    dt = dt if dt > 0 else 1.0
    tol = np.empty(max(len(snaps) - 1, 0))
    for i in range(len(snaps) - 1):
        steps = max(1.0, round((snaps[i + 1].time - snaps[i].time) / dt))
        res = max(snaps[i].residual, snaps[i + 1].residual, 1e-14)
        tol[i] = steps * res * (1.0 + scale[i])
    return tol


@dataclass(frozen=True)
class MonotonicityReport:
    base_fraction_ok: float
    y_fraction_ok: float
    n_pairs: int

    def lines(self) -> list[str]:
        return [
            "monotonicity (within per-window drift allowance):",
            f"  base non-decreasing on {self.base_fraction_ok:.4%} of"
            f" {self.n_pairs} sample pairs",
            f"  Y non-decreasing on {self.y_fraction_ok:.4%} of sample pairs",
        ]


def monotonicity_report(record, tail_exclude: float = 0.05) -> MonotonicityReport:
    snaps = record.snapshots
    times = np.asarray([s.time for s in snaps])
    keep = _fit_window(times, tail_exclude=tail_exclude)
    idx = np.flatnonzero(keep)
    if idx.size < 2:
        return MonotonicityReport(1.0, 1.0, 0)
    base = np.asarray([snaps[i].deficit_or_headroom for i in idx])
    yval = np.asarray([snaps[i].indicator for i in idx])
    quad = np.asarray([snaps[i].quad for i in idx])
    sub = [snaps[i] for i in idx]
    tol = _pair_tolerances(sub, record.dt_final, quad)
    dbase = np.diff(base)
    dy = np.diff(yval)
    base_ok = float(np.mean(dbase >= -tol))
    with np.errstate(invalid="ignore"):
        y_ok = float(np.mean(~np.isfinite(dy) | (dy >= -tol)))
    return MonotonicityReport(base_ok, y_ok, idx.size - 1)


@dataclass(frozen=True)
class SampleCheck:
    name: str
    passed: bool
    worst_margin: float
    worst_time: float

    def line(self) -> str:
        mark = "pass" if self.passed else "FAIL"
        return (f"  [{mark}] {self.name}: worst margin {self.worst_margin:.6g}"
                f" at t = {self.worst_time:.6g}")


@dataclass(frozen=True)
class PositiveEnergyReport:
    energy_floor: float
    checks: tuple[SampleCheck, ...]

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def lines(self) -> list[str]:
        return ([f"positive-energy trajectory checks (floor level {self.energy_floor:.12g}):"]
                + [c.line() for c in self.checks])


def positive_energy_quantities(
    record,
    constants: WellConstants,
    params: ModelParams,
    tail_exclude: float = 0.05,
) -> PositiveEnergyReport:
    """Per-sample consequences of the positive-energy escape argument.

    Checks, each over the recorded samples outside the final fraction of
    the run: headroom never drops below its initial value; the total
    energy stays above the scalar barrier evaluated at the quadratic
    energy; the quadratic energy stays above the floor level (the larger
    root of barrier = initial total energy); and the source potential
    dominates the headroom.  Violations are reported with worst margins,
    never thrown.
    """
    snaps = record.snapshots
    times = np.asarray([s.time for s in snaps])
    keep = _fit_window(times, tail_exclude=tail_exclude)
    idx = np.flatnonzero(keep)
    sub = [snaps[i] for i in idx]
    total0 = sub[0].total
    head0 = sub[0].deficit_or_headroom
    floor = solve_energy_floor(
        total0, constants.m_bound, constants.k_wave, constants.k_plate,
        params.p, params.q, constants.y_crit, constants.depth_lb)

    total = np.asarray([s.total for s in sub])
    head = np.asarray([s.deficit_or_headroom for s in sub])
    quad = np.asarray([s.quad for s in sub])
    src = np.asarray([s.source for s in sub])
    tvals = np.asarray([s.time for s in sub])
    tol = np.asarray([
        max(1e-12, 10.0 * s.residual * (1.0 + s.quad)) for s in sub])

    def worst(name, margins):
        i = int(np.argmin(margins))
        return SampleCheck(name, bool(margins[i] >= -tol[i]),
                           float(margins[i]), float(tvals[i]))

    bar = barrier(quad, constants.m_bound, constants.k_wave,
                  constants.k_plate, params.p, params.q)
    checks = (
        worst("headroom stays above its initial value", head - head0),
        worst("total energy dominates the barrier at the quadratic energy",
              total - bar),
        worst("quadratic energy stays above the floor level", quad - floor),
        worst("source potential dominates the headroom", src - head),
    )
    return PositiveEnergyReport(energy_floor=floor, checks=checks)


# ---------------------------------------------------------------------- #
# verdict assembly


@dataclass(frozen=True)
class BlowupVerdict:
    scenario: str
    eps: float
    a: float
    mu: float
    sigma: float
    kappa_fit: float
    violation_fraction: float
    T_comparison: float
    t_blow_observed: float | None
    t_blow_pad: float
    lifespan_ok: bool
    hypothesis_report: HypothesisReport
    monotonicity: MonotonicityReport
    epsilon_choice: EpsilonChoice
    positive_report: PositiveEnergyReport | None = None
    notes: tuple[str, ...] = ()

    @property
    def diverged(self) -> bool:
        return self.t_blow_observed is not None

    def lines(self) -> list[str]:
        out = [f"escape verdict ({self.scenario}):"]
        out += self.hypothesis_report.lines()
        out += self.epsilon_choice.lines()
        out += self.monotonicity.lines()
        out.append(
            f"  growth fit: kappa = {self.kappa_fit:.6g}, mu = {self.mu:.6g}, "
            f"negative-slope fraction {self.violation_fraction:.4%}")
        tb = ("none (no divergence recorded)" if self.t_blow_observed is None
              else f"{self.t_blow_observed:.6g} (+/- {self.t_blow_pad:.3g})")
        out.append(f"  observed blow-up time: {tb}")
        out.append(f"  comparison lifespan: {self.T_comparison:.6g}")
        out.append("  lifespan consistency: "
                   + ("ok" if self.lifespan_ok else "VIOLATED"))
        if self.positive_report is not None:
            out += self.positive_report.lines()
        for n in self.notes:
            out.append(f"  note: {n}")
        return out


def analyze_record(
    record,
    initial: State,
    constants: WellConstants,
    mesh: Mesh,
    params: ModelParams,
    scenario: str,
    tail_exclude: float = 0.05,
) -> BlowupVerdict:
    """Full post-processing of a recorded escape run.

    The weight choice is recomputed from the initial state (it must agree
    with the one the trajectory was recorded under; a mismatch is reported
    as a note, not an error).  Lifespan consistency means the recorded
    divergence, padded by one output stride, happens no later than 1.2
    times the comparison lifespan.
    """
    hyp = check_hypotheses(initial, constants, mesh, params, scenario)
    notes: list[str] = []
    if scenario == NEGATIVE:
        base0 = -total_energy(initial, mesh, params)
    else:
        base0 = constants.energy_cap - total_energy(initial, mesh, params)
    n0p = moment_rate(initial, mesh)
    choice = select_epsilon(base0, n0p, params, mesh, scenario)
    if not math.isnan(record.eps) and not math.isclose(
            record.eps, choice.eps, rel_tol=1e-9, abs_tol=0.0):
        notes.append(
            f"record was taken with eps = {record.eps:g}, selection now gives "
            f"{choice.eps:g}; fits use the recorded value")
    eps_used = record.eps if not math.isnan(record.eps) else choice.eps

    kappa, viol = fit_inequality(record, eps_used, params.a,
                                 tail_exclude=tail_exclude)
    y0 = record.snapshots[0].indicator
    T_cmp = comparison_lifespan(y0, kappa, params.mu) if np.isfinite(y0) else math.inf
    mono = monotonicity_report(record, tail_exclude=tail_exclude)

    t_blow = record.t_blow
    pad = record.t_blow_pad
    if t_blow is None:
        lifespan_ok = not np.isfinite(T_cmp)
        if np.isfinite(T_cmp):
            notes.append(
                "positive growth fit but no recorded divergence; run may be too short")
    else:
        lifespan_ok = bool(t_blow <= 1.2 * T_cmp + pad)

    pos_report = None
    if scenario == POSITIVE:
        pos_report = positive_energy_quantities(
            record, constants, params, tail_exclude=tail_exclude)

    return BlowupVerdict(
        scenario=scenario, eps=eps_used, a=params.a, mu=params.mu,
        sigma=params.sigma, kappa_fit=kappa, violation_fraction=viol,
        T_comparison=T_cmp, t_blow_observed=t_blow, t_blow_pad=pad,
        lifespan_ok=lifespan_ok, hypothesis_report=hyp, monotonicity=mono,
        epsilon_choice=choice, positive_report=pos_report, notes=tuple(notes),
    )
