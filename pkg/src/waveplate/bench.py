"""Timing comparison of the compiled and reference kernels.

Measures the three hot operations on representative fields; the same
routine backs the CLI bench subcommand and the benchmark regression test.
"""

from __future__ import annotations

import time

import numpy as np

from .kernels import backend_name
from .kernels import reference as ref

try:
    from .kernels import _fast as fast
except ImportError:
    fast = None


def _time_one(fn, args, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def run_bench(n: int = 129, dim: int = 2, repeats: int = 7) -> str:
    rng = np.random.default_rng(0)
    shape = (n,) * dim
    u = rng.standard_normal(shape)
    flux = rng.standard_normal(shape[:-1])
    h = 1.0 / (n - 1)
    w1 = np.full(n, h)
    w1[0] = w1[-1] = 0.5 * h
    rhs = rng.standard_normal(shape)

    if dim == 2:
        cases = [
            ("wave stencil", "wave_apply_2d", (u, flux, h, h)),
            ("gradient norm", "grad_sq_2d", (u, h, h, w1, w1)),
            ("damping solve", "damping_solve_power", (rhs, 0.01, 2.0)),
        ]
    else:
        cases = [
            ("wave stencil", "wave_apply_3d", (u, flux, h, h, h)),
            ("gradient norm", "grad_sq_3d", (u, h, h, h, w1, w1, w1)),
            ("damping solve", "damping_solve_power", (rhs, 0.01, 2.0)),
        ]

    lines = [f"kernel benchmark: {dim}D grid {n}^{dim}, best of {repeats}",
             f"active backend: {backend_name}"]
    header = f"{'operation':<16}{'reference':>12}{'compiled':>12}{'speedup':>10}"
    lines.append(header)
    lines.append("-" * len(header))
    for label, name, args in cases:
        t_ref = _time_one(getattr(ref, name), args, repeats)
        if fast is not None:
            t_fast = _time_one(getattr(fast, name), args, repeats)
            lines.append(f"{label:<16}{t_ref*1e3:>10.3f}ms{t_fast*1e3:>10.3f}ms"
                         f"{t_ref/t_fast:>9.1f}x")
        else:
            lines.append(f"{label:<16}{t_ref*1e3:>10.3f}ms{'missing':>12}{'':>10}")
    if fast is None:
        lines.append("compiled backend not built; reference kernels in use")
    return "\n".join(lines)
