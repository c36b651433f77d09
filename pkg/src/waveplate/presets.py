"""Named initial-data families and amplitude solvers.

All presets are products of squared sines, so the chamber bump vanishes on
the whole boundary with zero normal derivative and the wall bump is
clamped-admissible.  Along the ray s -> (s*u, s*w) every energy functional
reduces to a scalar polynomial in s, so amplitude selection is plain
bisection on one of its two monotone branches: ascending toward the fiber
peak for stable-well targets, descending past it for unstable-well and
negative-energy targets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mesh import Mesh, State
from .params import ModelParams
from .wellconstants import WellConstants, fiber_peak

PRESET_NAMES = ("bump_wave", "bump_plate", "bump_both", "W1_small", "W2_large")


class PresetError(ValueError):
    pass


def _bump(axes, extents):
    out = 1.0
    grids = np.meshgrid(*axes, indexing="ij")
    for g, ell in zip(grids, extents):
        out = out * np.sin(np.pi * g / ell) ** 2
    return out


def bump_fields(mesh: Mesh, which: str = "both"):
    """Unit-amplitude bump shapes (shape_u, shape_w); either may be zero."""
    if which not in ("wave", "plate", "both"):
        raise PresetError(f"unknown bump selector {which!r}")
    shape_u = np.zeros(mesh.n)
    shape_w = np.zeros(mesh.wall_shape)
    if which in ("wave", "both"):
        shape_u = _bump(mesh.axes, mesh.extents)
        # sin(pi) is only zero to rounding; pin the constrained nodes exactly
        shape_u[mesh.gamma0_mask] = 0.0
    if which in ("plate", "both"):
        shape_w = _bump(mesh.axes[:-1], mesh.extents[:-1])
        shape_w[mesh.wall_rim_mask] = 0.0
    return shape_u, shape_w


@dataclass(frozen=True)
class FiberScalars:
    """Ray reduction: along s*(u, w) the stiffness is s^2*q_norm and the
    source potential is s^(p+1)*b_wave + s^(q+1)*c_plate."""

    q_norm: float
    b_wave: float
    c_plate: float
    p: float
    q: float

    def potential(self, s: float) -> float:
        return (0.5 * s * s * self.q_norm
                - abs(s) ** (self.p + 1.0) * self.b_wave
                - abs(s) ** (self.q + 1.0) * self.c_plate)

    def peak(self):
        return fiber_peak(self.q_norm, self.b_wave, self.c_plate, self.p, self.q)


def fiber_scalars(shape_u, shape_w, mesh: Mesh, params: ModelParams) -> FiberScalars:
    from .functionals import source_potential, stiffness_only_sq

    q_norm = stiffness_only_sq(shape_u, shape_w, mesh)
    still = State(u=shape_u, ut=np.zeros(mesh.n), w=shape_w,
                  wt=np.zeros(mesh.wall_shape))
    src = source_potential(still, mesh, params)
    # split the two source integrals for the ray polynomial
    b_wave = mesh.integrate_omega(shape_u, params.p + 1.0) * params.c0
    c_plate = mesh.integrate_wall(shape_w, params.q + 1.0) * params.c2
    if not math.isclose(b_wave + c_plate, src, rel_tol=1e-10, abs_tol=1e-14):
        raise PresetError("ray reduction inconsistent with the source potential")
    return FiberScalars(q_norm=q_norm, b_wave=b_wave, c_plate=c_plate,
                        p=params.p, q=params.q)


def _bisect_monotone(fn, lo, hi, tol=1e-13, maxit=400):
    flo, fhi = fn(lo), fn(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0.0:
        raise PresetError(f"amplitude bracket [{lo:g}, {hi:g}] does not change sign")
    for _ in range(maxit):
        mid = 0.5 * (lo + hi)
        fm = fn(mid)
        if fm == 0.0 or hi - lo < tol * max(1.0, abs(mid)):
            return mid
        if flo * fm < 0.0:
            hi = mid
        else:
            lo, flo = mid, fm
    return 0.5 * (lo + hi)


def solve_amplitude(fib: FiberScalars, target: float, branch: str) -> float:
    """Amplitude s with ray potential = target on the requested branch.

    branch = "ascending": s in (0, s_peak), needs 0 < target < peak value.
    branch = "descending": s > s_peak, needs target < peak value; the far
    bracket doubles until the potential drops below the target.
    """
    if fib.b_wave + fib.c_plate <= 0.0:
        raise PresetError("bump shapes carry no source mass; amplitude "
                          "selection has nothing to bisect")
    s_peak, val_peak = fib.peak()
    if target >= val_peak:
        raise PresetError(
            f"target level {target:g} is not below this ray's peak "
            f"{val_peak:g}; condition infeasible on ray")
    if branch == "ascending":
        if target <= 0.0:
            raise PresetError(
                f"ascending-branch target must be positive, got {target:g}")
        return _bisect_monotone(lambda s: fib.potential(s) - target, 0.0, s_peak)
    if branch == "descending":
        hi = 2.0 * s_peak
        for _ in range(200):
            if fib.potential(hi) < target:
                break
            hi *= 2.0
        else:
            raise PresetError("descending branch never reached the target")
        return _bisect_monotone(lambda s: fib.potential(s) - target, s_peak, hi)
    raise PresetError(f"unknown branch {branch!r}")


@dataclass(frozen=True)
class PresetInfo:
    name: str
    amplitude: float
    branch: str | None
    target: float | None
    peak_value: float | None


def preset_initial_data(
    name: str,
    mesh: Mesh,
    params: ModelParams,
    constants: WellConstants | None = None,
    amplitude: float | None = None,
    energy_target: float | None = None,
) -> tuple[State, PresetInfo]:
    """Build a named preset state (velocities zero).

    bump_wave / bump_plate / bump_both take the amplitude literally
    (default 1).  W1_small solves for the amplitude on the ascending branch
    with initial total energy at min{0.45 * depth upper estimate, 0.9 *
    certified depth}; W2_large on the descending branch at half of
    min{energy cap, certified depth}.  A negative energy_target is allowed
    on the descending branch and yields negative initial total energy.
    An explicit amplitude always bypasses the bisection.
    """
    if name not in PRESET_NAMES:
        raise PresetError(
            f"unknown preset {name!r}; valid names: {', '.join(PRESET_NAMES)}")
    # W2_large excites the chamber only: the wall bump's bending norm is so
    # stiff that a combined shape lands at quadratic energies ~1e5, and the
    # divergence cap (relative to E(0)) then costs millions of limiter
    # substeps.  The wall still participates through the coupling.
    which = {"bump_wave": "wave", "bump_plate": "plate",
             "W2_large": "wave"}.get(name, "both")
    shape_u, shape_w = bump_fields(mesh, which)

    branch = None
    target = None
    peak_value = None
    if amplitude is None:
        if name in ("bump_wave", "bump_plate", "bump_both"):
            amplitude = 1.0
        else:
            if constants is None:
                raise PresetError(
                    f"preset {name!r} solves for its amplitude and needs the "
                    "well constants")
            fib = fiber_scalars(shape_u, shape_w, mesh, params)
            peak_value = fib.peak()[1]
            if name == "W1_small":
                target = energy_target if energy_target is not None else min(
                    0.45 * constants.depth_ub, 0.9 * constants.depth_lb)
                branch = "ascending"
            else:
                target = energy_target if energy_target is not None else (
                    0.5 * min(constants.energy_cap, constants.depth_lb))
                branch = "descending"
            amplitude = solve_amplitude(fib, target, branch)
    elif energy_target is not None:
        raise PresetError("give either an amplitude or an energy target, not both")

    state = State(
        u=amplitude * shape_u,
        ut=np.zeros(mesh.n),
        w=amplitude * shape_w,
        wt=np.zeros(mesh.wall_shape),
    )
    return state, PresetInfo(name=name, amplitude=float(amplitude),
                             branch=branch, target=target, peak_value=peak_value)


def negative_energy_state(
    mesh: Mesh,
    params: ModelParams,
    target: float = -1.0,
    which: str = "wave",
) -> tuple[State, PresetInfo]:
    """Bump state on the descending branch with initial total energy at the
    requested negative level.

    Chamber-only by default, for the same cap-cost reason as W2_large."""
    if target >= 0.0:
        raise PresetError(f"negative-energy target must be negative, got {target:g}")
    shape_u, shape_w = bump_fields(mesh, which)
    fib = fiber_scalars(shape_u, shape_w, mesh, params)
    amplitude = solve_amplitude(fib, target, "descending")
    state = State(
        u=amplitude * shape_u,
        ut=np.zeros(mesh.n),
        w=amplitude * shape_w,
        wt=np.zeros(mesh.wall_shape),
    )
    return state, PresetInfo(name=f"bump_{which}", amplitude=float(amplitude),
                             branch="descending", target=target,
                             peak_value=fib.peak()[1])
