"""Run artifacts: CSV time series, plot images, text report.

The CSV column order is fixed and part of the external interface; rows are
written with repr-exact floats so identical runs produce identical bytes.
The report always carries the constants table and the full hypothesis
ledger, pass or fail: a failed hypothesis is a result, not an error.
"""

from __future__ import annotations

import math
from pathlib import Path

CSV_COLUMNS = ("t", "E", "S", "totalE", "J", "nehari", "G_or_calG",
               "N", "Nprime", "Y", "energy_residual", "flag")


def _fmt(x: float) -> str:
    if isinstance(x, str):
        return x
    if x != x:  # NaN
        return "nan"
    return format(x, ".17g")


def emit_csv(record, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(CSV_COLUMNS)]
    for s in record.snapshots:
        row = (s.time, s.quad, s.source, s.total, s.potential, s.nehari,
               s.deficit_or_headroom, s.moment, s.moment_rate, s.indicator,
               s.residual, s.flag)
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def emit_plots(record, out_dir, classification=None) -> list[Path]:
    """Static images: quadratic energy, total energy, Y on a log axis, and
    (when classifications are supplied) the well timeline."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    t = [s.time for s in record.snapshots]
    written = []

    def save(fig, name):
        p = out_dir / name
        fig.savefig(p, dpi=130, bbox_inches="tight")
        plt.close(fig)
        written.append(p)

    fig, ax = plt.subplots(figsize=(6, 3.4))
    ax.plot(t, [s.quad for s in record.snapshots], lw=1.2)
    ax.set_xlabel("t")
    ax.set_ylabel("quadratic energy")
    if any(s.flag == "diverged" for s in record.snapshots):
        ax.set_yscale("log")
    save(fig, "quadratic_energy.png")

    fig, ax = plt.subplots(figsize=(6, 3.4))
    ax.plot(t, [s.total for s in record.snapshots], lw=1.2, color="#a33")
    ax.set_xlabel("t")
    ax.set_ylabel("total energy")
    save(fig, "total_energy.png")

    fig, ax = plt.subplots(figsize=(6, 3.4))
    ys = [(ti, s.indicator) for ti, s in zip(t, record.snapshots)
          if math.isfinite(s.indicator) and s.indicator > 0]
    if ys:
        ax.semilogy([a for a, _ in ys], [b for _, b in ys], lw=1.2, color="#263")
    ax.set_xlabel("t")
    ax.set_ylabel("growth functional Y")
    save(fig, "growth_functional.png")

    if classification is not None:
        order = ("W1", "boundary", "W2", "outside")
        level = {name: i for i, name in enumerate(order)}
        fig, ax = plt.subplots(figsize=(6, 2.4))
        ax.step(t, [level.get(c, 3) for c in classification], where="post")
        ax.set_yticks(range(len(order)), order)
        ax.set_xlabel("t")
        ax.set_ylabel("well set")
        ax.set_ylim(-0.5, len(order) - 0.5)
        save(fig, "well_timeline.png")
    return written


def emit_report(record, path, constants=None, verdict=None, extra_lines=()) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["wave-plate run report", "=" * 21, ""]
    if record.scenario:
        lines.append(f"scenario: {record.scenario}")
    lines.append(f"termination: {record.termination}")
    if record.t_blow is not None:
        lines.append(
            f"observed divergence at t = {record.t_blow:.10g}"
            f" (stride pad {record.t_blow_pad:.3g})")
    lines.append(f"time step: base {record.dt_base:g}, final {record.dt_final:g},"
                 f" halvings {record.halvings}")
    if record.unreliable:
        lines.append("WARNING: residual budget still violated after the halving"
                     " cap; the trajectory is unreliable")
    st = record.step_stats
    if st:
        lines.append(
            "step stats: "
            f"{st.get('steps', 0)} steps, worst residual {st.get('residual_max', 0):.3e}, "
            f"pointwise solves <= {st.get('newton_max', 0)} iters, "
            f"wave solves <= {st.get('cg_wave_max', 0)} iters, "
            f"plate solves <= {st.get('cg_plate_max', 0)} iters")
    lines.append("")
    if constants is not None:
        lines.append("well constants (with provenance):")
        lines.extend("  " + ln for ln in constants.table().splitlines())
        lines.append("")
    if verdict is not None:
        lines.extend(verdict.lines())
        lines.append("")
    for ln in extra_lines:
        lines.append(ln)
    if record.config_echo:
        lines.append("")
        lines.append("configuration echo:")
        lines.extend("  " + ln for ln in record.config_echo)
    path.write_text("\n".join(lines) + "\n")
    return path
