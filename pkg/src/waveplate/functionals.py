"""Energies, the well classification quantities, and the blow-up functionals.

Everything here is a plain quadrature evaluation on a State; no stepping.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import Mesh, State
from .params import ModelParams


def quadratic_energy(state: State, mesh: Mesh) -> float:
    """Kinetic plus stiffness energy of both fields (always nonnegative)."""
    return 0.5 * (
        mesh.inner_omega(state.ut, state.ut)
        + mesh.grad_norm_sq(state.u)
        + mesh.inner_omega(state.u, state.u)
        + mesh.inner_wall(state.wt, state.wt)
        + mesh.stiffness_norm_sq(state.w)
    )


def source_potential(state: State, mesh: Mesh, params: ModelParams) -> float:
    """Integral of both source antiderivatives."""
    return mesh.integrate_omega_signed(
        params.wave_source.antiderivative(state.u)
    ) + mesh.integrate_wall_signed(params.plate_source.antiderivative(state.w))


def total_energy(state: State, mesh: Mesh, params: ModelParams) -> float:
    return quadratic_energy(state, mesh) - source_potential(state, mesh, params)


def stiffness_only_sq(u, w, mesh: Mesh) -> float:
    """The static part of the quadratic energy: |grad u|^2 + |u|^2 + |lap w|^2."""
    return (
        mesh.grad_norm_sq(u) + mesh.inner_omega(u, u) + mesh.stiffness_norm_sq(w)
    )


def potential_energy(u, w, mesh: Mesh, params: ModelParams) -> float:
    """Static energy J: half the stiffness norm minus the source potential."""
    pot = mesh.integrate_omega_signed(
        params.wave_source.antiderivative(u)
    ) + mesh.integrate_wall_signed(params.plate_source.antiderivative(w))
    return 0.5 * stiffness_only_sq(u, w, mesh) - pot


def nehari_value(u, w, mesh: Mesh, params: ModelParams) -> float:
    """Stiffness norm minus the Euler pairing of both sources.

    Positive inside the stable set, negative in the unstable one; its zero
    set (away from the origin) is the dividing manifold.
    """
    pair = mesh.integrate_omega_signed(u * params.wave_source.f(u)) + mesh.integrate_wall_signed(
        w * params.plate_source.f(w)
    )
    return stiffness_only_sq(u, w, mesh) - pair


def classify_scalars(stiffness_sq: float, potential: float, nehari: float,
                     depth: float) -> str:
    """Well classification from the three static scalars (see classify_well)."""
    if stiffness_sq == 0.0:
        return "W1"
    if potential >= depth:
        return "outside"
    tol = 1e-10 * (1.0 + stiffness_sq)
    if nehari > tol:
        return "W1"
    if nehari < -tol:
        return "W2"
    return "boundary"


def classify_well(u, w, mesh: Mesh, params: ModelParams, depth: float) -> str:
    """Place the static pair relative to the potential well of depth ``depth``.

    Returns one of "W1" (stable set), "W2" (unstable set), "boundary"
    (within tolerance of the dividing manifold), "outside" (above depth).
    The zero pair belongs to W1 by convention.
    """
    q = stiffness_only_sq(u, w, mesh)
    return classify_scalars(
        q,
        potential_energy(u, w, mesh, params),
        nehari_value(u, w, mesh, params),
        depth,
    )


# ---------------------------------------------------------------------- #
# blow-up side


def moment_n(state: State, mesh: Mesh, gamma_coupling: float = 1.0) -> float:
    """Half the squared L2 mass of both fields plus the coupling history.

    The history term is the accumulated time integral of
    gamma_coupling * <trace u, w> maintained by the integrator.
    """
    return 0.5 * (
        mesh.inner_omega(state.u, state.u) + mesh.inner_wall(state.w, state.w)
    ) + gamma_coupling * state.coupling_hist


def moment_rate(state: State, mesh: Mesh, gamma_coupling: float = 1.0) -> float:
    """Exact time derivative of moment_n along the flow."""
    return (
        mesh.inner_omega(state.u, state.ut)
        + mesh.inner_wall(state.w, state.wt)
        + gamma_coupling * mesh.inner_wall(mesh.trace(state.u), state.w)
    )


def blowup_indicator(base: float, rate: float, eps: float, a: float) -> float:
    """The concavity-argument functional Y = base^(1-a) + eps * rate.

    ``base`` is the energy deficit (negative-energy runs) or the headroom
    below the admissible cap (positive-energy runs); it must be positive.
    """
    if base <= 0.0:
        raise ValueError(
            "blow-up functional undefined: the energy deficit/headroom is "
            f"{base:g}; check the sign condition on the initial total energy"
        )
    return base ** (1.0 - a) + eps * rate


@dataclass(frozen=True)
class EnergySnapshot:
    """One sampled row of the monitored quantities."""

    time: float
    quad: float  # quadratic energy
    source: float  # source potential
    total: float  # quad - source
    potential: float  # static energy J of (u, w)
    nehari: float
    deficit_or_headroom: float  # -total, or cap - total, per scenario
    moment: float
    moment_rate: float
    indicator: float  # NaN when the scenario defines none
    residual: float  # worst per-step energy-identity residual since last row
    flag: str


def take_snapshot(
    state: State,
    mesh: Mesh,
    params: ModelParams,
    base_kind: str | None = None,
    cap: float = float("nan"),
    eps: float = float("nan"),
    residual: float = 0.0,
    flag: str = "ok",
) -> EnergySnapshot:
    """Evaluate every monitored functional at the current state.

    base_kind selects the blow-up bookkeeping: "deficit" tracks -total
    energy, "headroom" tracks cap - total, None disables the indicator.
    """
    e = quadratic_energy(state, mesh)
    s = source_potential(state, mesh, params)
    tot = e - s
    j = potential_energy(state.u, state.w, mesh, params)
    nh = nehari_value(state.u, state.w, mesh, params)
    nmom = moment_n(state, mesh)
    nrate = moment_rate(state, mesh)
    if base_kind == "deficit":
        base = -tot
    elif base_kind == "headroom":
        base = cap - tot
    else:
        base = float("nan")
    if base_kind is not None and base > 0.0 and np.isfinite(eps):
        y = blowup_indicator(base, nrate, eps, params.a)
    else:
        y = float("nan")
    return EnergySnapshot(
        time=state.time,
        quad=e,
        source=s,
        total=tot,
        potential=j,
        nehari=nh,
        deficit_or_headroom=base,
        moment=nmom,
        moment_rate=nrate,
        indicator=y,
        residual=residual,
        flag=flag,
    )
