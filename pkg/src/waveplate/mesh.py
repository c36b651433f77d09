"""Structured box grid for the chamber and its elastic top wall.

Conventions (shared with the kernels):

* the chamber is a uniform node grid over a box, C-ordered, and the LAST
  axis is normal to the elastic wall;
* the wall is the top slice ``u[..., -1]``; its interior nodes carry the
  flux condition, its rim plus every other chamber face is pinned to zero;
* the wall displacement is a separate field on the top-face grid, clamped
  (value and slope) on the rim;
* all integrals use tensorized trapezoid weights.  Under these weights the
  discrete integration-by-parts identity for the chamber operator and the
  self-adjointness of the wall operator hold exactly, not just to O(h^2)
  (tests pin this down), which is what makes the energy bookkeeping of the
  integrator clean.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp

from .kernels import backend


class MeshError(ValueError):
    pass


def _trapezoid_weights(n: int, h: float) -> np.ndarray:
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h
    return w


def _clamped_second_difference(n: int, h: float) -> sp.csr_matrix:
    """1d second-difference matrix with clamped-end ghost reflection.

    Row 0 reads (w[-1] - 2 w[0] + w[1])/h^2 with the ghost w[-1] = w[1]
    (zero slope across the end node), likewise at the far end.  End values
    are expected to be pinned to zero but their coefficient is kept.
    """
    main = np.full(n, -2.0)
    off = np.ones(n - 1)
    mat = sp.diags([off, main, off], [-1, 0, 1], format="lil")
    mat[0, 1] = 2.0
    mat[n - 1, n - 2] = 2.0
    return (mat / (h * h)).tocsr()


@dataclass
class Mesh:
    dim: int
    n: tuple
    extents: tuple
    h: tuple
    axes: tuple
    w_axis: tuple
    quad_omega: np.ndarray
    quad_wall: np.ndarray
    gamma0_mask: np.ndarray
    gamma_mask: np.ndarray
    wall_rim_mask: np.ndarray
    wall_interior_idx: np.ndarray
    omega_measure: float
    wall_measure: float
    _wall_lap: sp.csr_matrix = None
    _plate_int: sp.csr_matrix = None

    # ------------------------------------------------------------------ #
    # operators

    def wave_operator(self, u, neumann=None):
        """(-laplacian + identity) u with the box boundary conditions.

        ``neumann`` is the outward normal derivative prescribed on the wall
        (top-face grid array); omitted means zero flux.
        """
        if neumann is None:
            neumann = np.zeros(self.wall_shape)
        if self.dim == 2:
            return backend.wave_apply_2d(u, neumann, self.h[0], self.h[1])
        return backend.wave_apply_3d(u, neumann, self.h[0], self.h[1], self.h[2])

    def wall_laplacian(self, w):
        """Clamped laplacian of the wall displacement, on the full wall grid."""
        return (self._wall_lap @ w.ravel()).reshape(self.wall_shape)

    def plate_operator(self, w):
        """Fourth-order wall operator (bilaplacian, clamped rim).

        Built as the quadrature-weighted normal form of the clamped
        laplacian, so it is exactly self-adjoint and exactly compatible with
        the stiffness norm: <Bw, v>_wall = <lap w, lap v>_wall.  Rows at rim
        nodes are zero (those values are pinned).
        """
        flat = w.ravel()
        out = np.zeros_like(flat)
        out[self.wall_interior_idx] = self._plate_int @ flat[self.wall_interior_idx]
        return out.reshape(self.wall_shape)

    def grad_norm_sq(self, u):
        """Squared norm of the staggered first-difference gradient."""
        if self.dim == 2:
            return backend.grad_sq_2d(u, self.h[0], self.h[1], self.w_axis[0], self.w_axis[1])
        return backend.grad_sq_3d(
            u, self.h[0], self.h[1], self.h[2], self.w_axis[0], self.w_axis[1], self.w_axis[2]
        )

    def trace(self, u):
        """Restriction of a chamber field to the wall face."""
        return np.ascontiguousarray(u[..., -1])

    def neumann_forcing(self, flux):
        """Chamber field holding the affine part of the flux condition.

        wave_operator(u, flux) equals wave_operator(u, 0) minus this field;
        it is supported on the free wall row with value 2*flux/h_normal.
        """
        out = np.zeros(self.n)
        out[..., -1] = 2.0 * flux / self.h[-1]
        out[self.gamma0_mask] = 0.0
        return out

    # ------------------------------------------------------------------ #
    # quadrature

    @property
    def wall_shape(self):
        return self.n[:-1]

    def inner_omega(self, a, b) -> float:
        return float(np.sum(self.quad_omega * a * b))

    def inner_wall(self, a, b) -> float:
        return float(np.sum(self.quad_wall * a * b))

    def integrate_omega(self, f, expo: float = 1.0) -> float:
        """Integral of |f|^expo over the chamber."""
        return float(np.sum(self.quad_omega * np.abs(f) ** expo))

    def integrate_wall(self, f, expo: float = 1.0) -> float:
        return float(np.sum(self.quad_wall * np.abs(f) ** expo))

    def integrate_omega_signed(self, f) -> float:
        return float(np.sum(self.quad_omega * f))

    def integrate_wall_signed(self, f) -> float:
        return float(np.sum(self.quad_wall * f))

    def norm_omega(self, f, s: float = 2.0) -> float:
        if s < 1.0:
            raise MeshError(f"norm exponent s = {s:g} must be at least 1")
        return self.integrate_omega(f, s) ** (1.0 / s)

    def norm_wall(self, f, s: float = 2.0) -> float:
        if s < 1.0:
            raise MeshError(f"norm exponent s = {s:g} must be at least 1")
        return self.integrate_wall(f, s) ** (1.0 / s)

    def stiffness_norm_sq(self, w) -> float:
        """Squared stiffness norm of the wall: integral of (lap w)^2."""
        lw = self.wall_laplacian(w)
        return self.inner_wall(lw, lw)

    # ------------------------------------------------------------------ #
    # helpers

    def zero_state(self, time: float = 0.0) -> "State":
        z = np.zeros(self.n)
        zw = np.zeros(self.wall_shape)
        return State(u=z, ut=z.copy(), w=zw, wt=zw.copy(), time=time)

    def project_admissible(self, u, w):
        """Zero out pinned chamber nodes and clamped wall nodes, in place."""
        u[self.gamma0_mask] = 0.0
        w[self.wall_rim_mask] = 0.0
        return u, w


def build_mesh(dim: int = 2, extents=None, n=65) -> Mesh:
    """Build the box grid.

    Parameters
    ----------
    dim : 2 or 3.
    extents : box side lengths, one per axis (default unit box).
    n : nodes per axis, a single int or one per axis; at least 5.
    """
    if dim not in (2, 3):
        raise MeshError(f"dim = {dim} not supported (2 or 3)")
    if extents is None:
        extents = (1.0,) * dim
    extents = tuple(float(e) for e in extents)
    if len(extents) != dim:
        raise MeshError(f"need {dim} extents, got {len(extents)}")
    if any(e <= 0 for e in extents):
        raise MeshError("extents must be positive")
    if np.isscalar(n):
        n = (int(n),) * dim
    n = tuple(int(v) for v in n)
    if len(n) != dim:
        raise MeshError(f"need {dim} node counts, got {len(n)}")
    if any(v < 5 for v in n):
        raise MeshError("grid too coarse for the biharmonic stencil (need n >= 5 per axis)")

    h = tuple(extents[i] / (n[i] - 1) for i in range(dim))
    axes = tuple(np.linspace(0.0, extents[i], n[i]) for i in range(dim))
    w_axis = tuple(_trapezoid_weights(n[i], h[i]) for i in range(dim))

    if dim == 2:
        quad_omega = np.multiply.outer(w_axis[0], w_axis[1])
        quad_wall = w_axis[0].copy()
    else:
        quad_omega = np.einsum("i,j,k->ijk", w_axis[0], w_axis[1], w_axis[2])
        quad_wall = np.multiply.outer(w_axis[0], w_axis[1])

    idx = np.indices(n)
    gamma0 = np.zeros(n, dtype=bool)
    for ax in range(dim - 1):
        gamma0 |= idx[ax] == 0
        gamma0 |= idx[ax] == n[ax] - 1
    gamma0 |= idx[dim - 1] == 0
    top = idx[dim - 1] == n[dim - 1] - 1
    gamma = top & ~gamma0

    wall_shape = n[:-1]
    widx = np.indices(wall_shape)
    rim = np.zeros(wall_shape, dtype=bool)
    for ax in range(dim - 1):
        rim |= widx[ax] == 0
        rim |= widx[ax] == wall_shape[ax] - 1
    interior_idx = np.flatnonzero(~rim.ravel())

    # clamped laplacian on the wall grid (1d beam or 2d plate)
    if dim == 2:
        lap = _clamped_second_difference(n[0], h[0])
    else:
        lx = _clamped_second_difference(n[0], h[0])
        ly = _clamped_second_difference(n[1], h[1])
        lap = sp.kron(lx, sp.identity(n[1]), format="csr") + sp.kron(
            sp.identity(n[0]), ly, format="csr"
        )

    wq = quad_wall.ravel()
    normal_form = (lap.T @ sp.diags(wq) @ lap).tocsr()
    sub = normal_form[interior_idx][:, interior_idx]
    plate_int = (sp.diags(1.0 / wq[interior_idx]) @ sub).tocsr()

    return Mesh(
        dim=dim,
        n=n,
        extents=extents,
        h=h,
        axes=axes,
        w_axis=w_axis,
        quad_omega=quad_omega,
        quad_wall=quad_wall,
        gamma0_mask=gamma0,
        gamma_mask=gamma,
        wall_rim_mask=rim,
        wall_interior_idx=interior_idx,
        omega_measure=float(np.prod(extents)),
        wall_measure=float(np.prod(extents[:-1])),
        _wall_lap=lap,
        _plate_int=plate_int,
    )


# ---------------------------------------------------------------------- #
# state container and checkpoints


@dataclass
class State:
    """Fields of the coupled system at one instant.

    ``coupling_hist`` accumulates the time integral of the wall/trace cross
    term that feeds the growth functional; the integrator advances it by
    trapezoid quadrature.
    """

    u: np.ndarray
    ut: np.ndarray
    w: np.ndarray
    wt: np.ndarray
    time: float = 0.0
    coupling_hist: float = 0.0

    def copy(self) -> "State":
        return State(
            u=self.u.copy(),
            ut=self.ut.copy(),
            w=self.w.copy(),
            wt=self.wt.copy(),
            time=self.time,
            coupling_hist=self.coupling_hist,
        )

    def validate(self, mesh: Mesh, tol: float = 0.0):
        """Raise if the pinned-node invariants are broken."""
        for name, f in (("u", self.u), ("ut", self.ut)):
            bad = np.max(np.abs(f[mesh.gamma0_mask])) if f[mesh.gamma0_mask].size else 0.0
            if bad > tol:
                raise MeshError(f"{name} violates the pinned boundary by {bad:g}")
        for name, f in (("w", self.w), ("wt", self.wt)):
            bad = np.max(np.abs(f[mesh.wall_rim_mask])) if f[mesh.wall_rim_mask].size else 0.0
            if bad > tol:
                raise MeshError(f"{name} violates the clamped rim by {bad:g}")

    def save(self, path):
        """Plain-text checkpoint: header lines then the four fields flattened."""
        dims = ",".join(str(v) for v in self.u.shape)
        blob = np.concatenate(
            [self.u.ravel(), self.ut.ravel(), self.w.ravel(), self.wt.ravel()]
        )
        header = (
            f"dim={self.u.ndim}\n"
            f"n={dims}\n"
            f"time={self.time!r}\n"
            "fields=u,ut,w,wt (flattened, concatenated)"
        )
        np.savetxt(path, blob, fmt="%.17e", header=header)


def load_state(path) -> State:
    """Read a checkpoint written by State.save."""
    meta = {}
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            text = line[1:].strip()
            if "=" in text:
                key, _, val = text.partition("=")
                meta[key.strip()] = val.strip()
    n = tuple(int(v) for v in meta["n"].split(","))
    time = float(meta["time"])
    blob = np.loadtxt(path)
    size = int(np.prod(n))
    wall = size // n[-1]
    expected = 2 * size + 2 * wall
    if blob.size != expected:
        raise MeshError(f"checkpoint holds {blob.size} values, expected {expected}")
    u = blob[:size].reshape(n)
    ut = blob[size : 2 * size].reshape(n)
    w = blob[2 * size : 2 * size + wall].reshape(n[:-1])
    wt = blob[2 * size + wall :].reshape(n[:-1])
    return State(u=u, ut=ut, w=w, wt=wt, time=time)
