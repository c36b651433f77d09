"""Scenario orchestration: resolve a config into a run, gate the outcome.

A scenario bundles an initial-data recipe, the bookkeeping the trajectory
needs while it is integrated (which sign of the energy base defines Y), and
the pass/fail checks the recorded trajectory must satisfy.  Checks gate the
exit code; everything else is reported, never thrown.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import blowup as bl
from .config import KEY_TABLE, RunConfig, config_lines, parse_config
from .functionals import (
    classify_scalars,
    moment_rate,
    quadratic_energy,
    total_energy,
)
from .integrator import RunRecord, simulate
from .mesh import Mesh, State, build_mesh
from .params import ModelParams, validate_params
from .presets import (
    PresetError,
    PresetInfo,
    negative_energy_state,
    preset_initial_data,
)
from .reporting import emit_csv, emit_plots, emit_report
from .wellconstants import WellConstants, compute_well_constants


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


@dataclass
class ScenarioResult:
    record: RunRecord
    constants: WellConstants
    initial_info: PresetInfo
    hypothesis_report: bl.HypothesisReport | None
    verdict: bl.BlowupVerdict | None
    classification: list[str]
    checks: tuple[CheckResult, ...]
    paths: dict[str, Path]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def build_model(cfg: RunConfig) -> tuple[Mesh, ModelParams]:
    mesh = build_mesh(dim=cfg.dim, extents=cfg.extents, n=cfg.n)
    params = validate_params(p=cfg.p, q=cfg.q, m=cfg.m, r=cfg.r,
                             alpha=cfg.alpha, beta=cfg.beta, dim=cfg.dim)
    return mesh, params


def resolve_initial(
    cfg: RunConfig,
    mesh: Mesh,
    params: ModelParams,
    constants: WellConstants,
) -> tuple[State, PresetInfo]:
    """Initial state for the configured scenario.

    Scenario defaults: global_W1 -> W1_small, blowup_negative -> bump_both
    at a negative total-energy level (default -1), blowup_positive_W2 ->
    W2_large.  An explicit initial.preset overrides the default; custom
    requires one.
    """
    name = cfg.preset
    if cfg.scenario == "blowup_negative" and not name:
        target = cfg.energy_target if cfg.energy_target is not None else -1.0
        return negative_energy_state(mesh, params, target=target)
    if not name:
        defaults = {"global_W1": "W1_small", "blowup_positive_W2": "W2_large"}
        name = defaults.get(cfg.scenario, "")
        if not name:
            raise PresetError(
                f"scenario {cfg.scenario!r} does not imply a preset; "
                "set initial.preset")
    return preset_initial_data(
        name, mesh, params, constants,
        amplitude=cfg.amplitude, energy_target=cfg.energy_target)


def _resolve_diagnostics(cfg, initial, mesh, params, constants):
    """Pick the Y bookkeeping for the run: (base_kind, cap, eps, choice)."""
    total0 = total_energy(initial, mesh, params)
    scen = cfg.scenario
    base_kind = None
    if scen == "blowup_negative":
        base_kind = "deficit"
    elif scen == "blowup_positive_W2":
        base_kind = "headroom"
    elif scen == "custom":
        if total0 < 0.0:
            base_kind = "deficit"
        elif total0 < constants.energy_cap:
            base_kind = "headroom"
    if base_kind is None:
        return None, math.nan, math.nan, None
    base0 = -total0 if base_kind == "deficit" else constants.energy_cap - total0
    if base0 <= 0.0:
        # sign hypothesis fails; run without Y so the ledger can say why
        return None, math.nan, math.nan, None
    scenario_name = bl.NEGATIVE if base_kind == "deficit" else bl.POSITIVE
    choice = bl.select_epsilon(base0, moment_rate(initial, mesh), params, mesh,
                               scenario_name)
    cap = math.nan if base_kind == "deficit" else constants.energy_cap
    return base_kind, cap, choice.eps * cfg.eps_scale, choice


def _cumulative_allowance(snaps, dt):
    """Per-sample drift allowance from the recorded worst per-step residuals."""
    dt = dt if dt > 0 else 1.0
    allow = np.empty(len(snaps))
    acc = 1e-12 * (1.0 + snaps[0].quad)
    allow[0] = acc
    for i in range(1, len(snaps)):
        steps = max(1.0, round((snaps[i].time - snaps[i - 1].time) / dt))
        acc += steps * max(snaps[i].residual, 1e-16) * (1.0 + snaps[i].quad)
        allow[i] = acc
    return allow


def classify_record(record: RunRecord, depth: float) -> list[str]:
    out = []
    for s in record.snapshots:
        stiff = 2.0 * (s.potential + s.source)
        out.append(classify_scalars(stiff, s.potential, s.nehari, depth))
    return out


def _stability_ledger(initial, constants, mesh, params, classification0):
    total0 = total_energy(initial, mesh, params)
    items = (
        bl.HypothesisItem("initial total energy is nonnegative",
                          total0 >= 0.0, total0, 0.0, ">="),
        bl.HypothesisItem("initial total energy below half the depth estimate",
                          total0 < 0.5 * constants.depth_ub, total0,
                          0.5 * constants.depth_ub, "<"),
        bl.HypothesisItem("initial total energy below the certified depth",
                          total0 < constants.depth_lb, total0,
                          constants.depth_lb, "<"),
        bl.HypothesisItem("initial state in the stable set",
                          classification0 == "W1",
                          1.0 if classification0 == "W1" else 0.0, 1.0, ">="),
    )
    return bl.HypothesisReport(scenario="global_W1", items=items)


def _checks_global_w1(record, classification, params, constants):
    snaps = record.snapshots
    checks = []
    checks.append(CheckResult(
        "ran to the final time",
        record.termination == "t_end" and record.t_blow is None
        and not record.unreliable,
        f"termination {record.termination!r}, halvings {record.halvings}"))
    bad = [c for c in classification if c != "W1"]
    checks.append(CheckResult(
        "classified in the stable set at every sample",
        not bad, f"{len(bad)} of {len(classification)} samples left W1"))
    c = min(params.p, params.q) + 1.0
    bound = c * constants.depth_ub / (c - 2.0) * 1.05
    worst = max(s.quad for s in snaps)
    checks.append(CheckResult(
        "quadratic energy within the stable-regime bound",
        worst <= bound, f"max E = {worst:.6g} vs bound {bound:.6g}"))
    allow = _cumulative_allowance(snaps, record.dt_final)
    total0 = snaps[0].total
    margins = np.asarray([s.total for s in snaps]) - total0 - allow
    k = int(np.argmax(margins))
    checks.append(CheckResult(
        "total energy never rises beyond the drift allowance",
        bool(margins[k] <= 0.0),
        f"worst excess {margins[k]:.3e} at t = {snaps[k].time:.6g}"))
    return tuple(checks)


def _checks_negative(record, verdict):
    snaps = record.snapshots
    checks = [CheckResult(
        "escape hypotheses hold", verdict.hypothesis_report.all_passed,
        "see hypothesis ledger")]
    checks.append(CheckResult(
        "run diverged at finite time", record.t_blow is not None,
        f"t_blow = {record.t_blow}" if record.t_blow is not None
        else f"termination {record.termination!r}"))
    frac = verdict.monotonicity.base_fraction_ok
    checks.append(CheckResult(
        "energy deficit non-decreasing on at least 99% of sample pairs",
        frac >= 0.99, f"non-decreasing fraction {frac:.4%}"))
    allow = _cumulative_allowance(snaps, record.dt_final)
    base0 = snaps[0].deficit_or_headroom
    lower = min(s.deficit_or_headroom - base0 + a for s, a in zip(snaps, allow))
    upper = min(s.source - s.deficit_or_headroom for s in snaps)
    checks.append(CheckResult(
        "deficit bracketed between its initial value and the source potential",
        lower >= 0.0 and upper >= -1e-12,
        f"worst lower margin {lower:.3e}, worst upper margin {upper:.3e}"))
    checks.append(CheckResult(
        "growth inequality fit is positive",
        verdict.kappa_fit > 0.0, f"kappa = {verdict.kappa_fit:.6g}"))
    checks.append(CheckResult(
        "divergence no later than the comparison lifespan",
        verdict.lifespan_ok,
        f"t_blow = {record.t_blow} vs 1.2 * {verdict.T_comparison:.6g}"))
    return tuple(checks)


def _checks_positive(record, verdict, classification):
    checks = [CheckResult(
        "escape hypotheses hold", verdict.hypothesis_report.all_passed,
        "see hypothesis ledger")]
    checks.append(CheckResult(
        "run diverged at finite time", record.t_blow is not None,
        f"t_blow = {record.t_blow}" if record.t_blow is not None
        else f"termination {record.termination!r}"))
    frac = verdict.monotonicity.base_fraction_ok
    checks.append(CheckResult(
        "energy headroom non-decreasing",
        frac >= 1.0, f"non-decreasing fraction {frac:.4%}"))
    pos = verdict.positive_report
    checks.append(CheckResult(
        "floor and barrier bounds hold at every sample",
        pos is not None and pos.all_passed,
        "; ".join(c.line().strip() for c in pos.checks) if pos else "missing"))
    bad = [c for c in classification if c != "W2"]
    checks.append(CheckResult(
        "classified in the unstable set at every sample",
        not bad, f"{len(bad)} of {len(classification)} samples left W2"))
    return tuple(checks)


def run_scenario(cfg: RunConfig, emit: bool = True) -> ScenarioResult:
    mesh, params = build_model(cfg)
    constants = compute_well_constants(
        mesh, params, n_dirs=cfg.n_dirs, n_starts=cfg.n_starts,
        max_iter=cfg.maxiter, seed=cfg.seed)
    initial, info = resolve_initial(cfg, mesh, params, constants)
    base_kind, cap, eps, choice = _resolve_diagnostics(
        cfg, initial, mesh, params, constants)

    dt = cfg.dt if cfg.dt > 0 else cfg.cfl * min(mesh.h)
    cap_div = cfg.cap_rel * quadratic_energy(initial, mesh) + cfg.cap_abs
    record = simulate(
        initial, mesh, params, dt=dt, t_end=cfg.t_end, stride=cfg.stride,
        base_kind=base_kind, cap=cap, eps=eps, divergence_cap=cap_div,
        residual_budget=cfg.residual_budget, max_halvings=cfg.max_halvings,
        wallclock=cfg.wallclock if cfg.wallclock > 0 else None)
    record.scenario = cfg.scenario
    record.config_echo = config_lines(cfg)
    record.constants = constants

    classification = classify_record(record, constants.depth_lb)
    verdict = None
    hyp = None
    if cfg.scenario == "blowup_negative":
        verdict = bl.analyze_record(record, initial, constants, mesh, params,
                                    bl.NEGATIVE, tail_exclude=cfg.tail_exclude)
        hyp = verdict.hypothesis_report
        checks = _checks_negative(record, verdict)
    elif cfg.scenario == "blowup_positive_W2":
        verdict = bl.analyze_record(record, initial, constants, mesh, params,
                                    bl.POSITIVE, tail_exclude=cfg.tail_exclude)
        hyp = verdict.hypothesis_report
        checks = _checks_positive(record, verdict, classification)
    elif cfg.scenario == "global_W1":
        hyp = _stability_ledger(initial, constants, mesh, params,
                                classification[0])
        checks = _checks_global_w1(record, classification, params, constants)
    else:
        if base_kind is not None:
            scen = bl.NEGATIVE if base_kind == "deficit" else bl.POSITIVE
            verdict = bl.analyze_record(record, initial, constants, mesh,
                                        params, scen,
                                        tail_exclude=cfg.tail_exclude)
            hyp = verdict.hypothesis_report
        checks = ()
    record.verdict = verdict

    paths: dict[str, Path] = {}
    if emit:
        out = Path(cfg.out_dir)
        paths["csv"] = emit_csv(record, out / "run.csv")
        extra = []
        if hyp is not None and verdict is None:
            extra.extend(hyp.lines())
            extra.append("")
        if info.branch is not None:
            extra.append(
                f"initial data: preset {info.name}, amplitude {info.amplitude:.10g}"
                f" ({info.branch} branch, level {info.target:.6g})")
        else:
            extra.append(
                f"initial data: preset {info.name}, amplitude {info.amplitude:.10g}")
        if checks:
            extra.append("")
            extra.append("scenario checks:")
            extra.extend("  " + c.line() for c in checks)
        paths["report"] = emit_report(
            record, out / "report.txt", constants=constants, verdict=verdict,
            extra_lines=extra)
        if cfg.plots:
            for p in emit_plots(record, out / "plots",
                                classification=classification):
                paths[p.stem] = p
        if cfg.checkpoint and record.final_state is not None:
            out.mkdir(parents=True, exist_ok=True)
            record.final_state.save(out / "final_state.txt")
            paths["checkpoint"] = out / "final_state.txt"

    return ScenarioResult(
        record=record, constants=constants, initial_info=info,
        hypothesis_report=hyp, verdict=verdict,
        classification=classification, checks=checks, paths=paths)


# ---------------------------------------------------------------------- #
# sweeps


def _sweep_member(args):
    text, key, raw_value, idx, base_seed, out_root = args
    cfg = parse_config(text, source=f"<member {idx}>")
    attr, conv, _ = KEY_TABLE[key]
    setattr(cfg, attr, conv(raw_value))
    cfg.seed = base_seed + idx
    cfg.out_dir = str(Path(out_root) / f"member_{idx:03d}")
    result = run_scenario(cfg)
    rec = result.record
    return {
        "member": idx,
        "value": raw_value,
        "passed": result.passed,
        "termination": rec.termination,
        "t_blow": rec.t_blow if rec.t_blow is not None else math.nan,
        "kappa_fit": result.verdict.kappa_fit if result.verdict else math.nan,
        "T_comparison": result.verdict.T_comparison if result.verdict else math.nan,
        "eps": rec.eps,
        "out_dir": cfg.out_dir,
    }


def sweep(cfg: RunConfig, key: str, values, max_workers=None):
    """Run one scenario per value of a single config key, concurrently.

    Members write into member_NNN subdirectories of the configured output
    directory and get consecutive seeds; a summary CSV lands next to them.
    """
    if key not in KEY_TABLE:
        raise ValueError(f"unknown sweep key {key!r}")
    text = "\n".join(config_lines(cfg))
    jobs = [(text, key, str(v), i, cfg.seed, cfg.out_dir)
            for i, v in enumerate(values)]
    if max_workers is None:
        import os
        max_workers = min(len(jobs), os.cpu_count() or 1)
    if max_workers <= 1:
        rows = [_sweep_member(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            rows = list(pool.map(_sweep_member, jobs))
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cols = ("member", "value", "passed", "termination", "t_blow",
            "kappa_fit", "T_comparison", "eps", "out_dir")
    lines = [",".join(cols)]
    for row in rows:
        lines.append(",".join(str(row[c]) for c in cols))
    (out / "summary.csv").write_text("\n".join(lines) + "\n")
    return rows
