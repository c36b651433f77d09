"""Numpy implementations of the hot per-step kernels.

This is the fallback backend.  The compiled extension (_fast.pyx) implements
the same call contracts; tests assert both agree to roundoff.

Grid layout shared by every kernel: the chamber is a C-ordered array whose
LAST axis is normal to the elastic wall.  The wall is the top slice
``u[..., -1]``.  All other faces (and the rim of the top face) are pinned
homogeneous-Dirichlet nodes.  Neumann data on the wall enters through a
mirrored ghost layer, second order accurate.
"""

from __future__ import annotations

import numpy as np


def wave_apply_2d(u, neumann, hx, hy):
    """Apply (-laplacian + identity) on the 2d chamber grid.

    ``neumann`` holds the outward normal derivative on the top edge (full
    edge array; the two corner entries are ignored, those nodes are pinned).
    Output rows at pinned nodes are zero.
    """
    n0, n1 = u.shape
    up = np.zeros((n0 + 2, n1 + 2), dtype=u.dtype)
    up[1:-1, 1:-1] = u
    # ghost row above the wall: reflection shifted by the boundary flux
    up[1:-1, -1] = u[:, -2] + 2.0 * hy * neumann
    core = up[1:-1, 1:-1]
    lap = (up[2:, 1:-1] - 2.0 * core + up[:-2, 1:-1]) / (hx * hx) + (
        up[1:-1, 2:] - 2.0 * core + up[1:-1, :-2]
    ) / (hy * hy)
    out = u - lap
    out[0, :] = 0.0
    out[-1, :] = 0.0
    out[:, 0] = 0.0
    return out


def wave_apply_3d(u, neumann, hx, hy, hz):
    """3d version of :func:`wave_apply_2d`; ``neumann`` lives on the top face."""
    n0, n1, n2 = u.shape
    up = np.zeros((n0 + 2, n1 + 2, n2 + 2), dtype=u.dtype)
    up[1:-1, 1:-1, 1:-1] = u
    up[1:-1, 1:-1, -1] = u[:, :, -2] + 2.0 * hz * neumann
    core = up[1:-1, 1:-1, 1:-1]
    lap = (
        (up[2:, 1:-1, 1:-1] - 2.0 * core + up[:-2, 1:-1, 1:-1]) / (hx * hx)
        + (up[1:-1, 2:, 1:-1] - 2.0 * core + up[1:-1, :-2, 1:-1]) / (hy * hy)
        + (up[1:-1, 1:-1, 2:] - 2.0 * core + up[1:-1, 1:-1, :-2]) / (hz * hz)
    )
    out = u - lap
    out[0, :, :] = 0.0
    out[-1, :, :] = 0.0
    out[:, 0, :] = 0.0
    out[:, -1, :] = 0.0
    out[:, :, 0] = 0.0
    return out


def grad_sq_2d(u, hx, hy, wx, wy):
    """Squared L2 norm of the staggered first-difference gradient.

    Differences live on cell-edge midpoints with full weight along the
    difference axis and trapezoid weight transverse to it; this is the
    convention under which the discrete integration-by-parts identity for
    ``wave_apply`` is exact.
    """
    dx = np.diff(u, axis=0) / hx
    dy = np.diff(u, axis=1) / hy
    sx = hx * float(np.einsum("ij,j->", dx * dx, wy))
    sy = hy * float(np.einsum("ij,i->", dy * dy, wx))
    return sx + sy


def grad_sq_3d(u, hx, hy, hz, wx, wy, wz):
    dx = np.diff(u, axis=0) / hx
    dy = np.diff(u, axis=1) / hy
    dz = np.diff(u, axis=2) / hz
    sx = hx * float(np.einsum("ijk,j,k->", dx * dx, wy, wz))
    sy = hy * float(np.einsum("ijk,i,k->", dy * dy, wx, wz))
    sz = hz * float(np.einsum("ijk,i,j->", dz * dz, wx, wy))
    return sx + sy + sz


def damping_solve_power(rhs, kappa, expo, tol=1e-12, max_newton=60):
    """Solve v + kappa*|v|^(expo-1)*v = rhs nodewise, kappa >= 0, expo >= 1.

    The left side is strictly increasing in v and shares the sign of rhs,
    so with s = |rhs| the problem reduces to t + kappa*t^expo = s on [0, s].
    Newton from t = s descends monotonically (the map is convex); nodes that
    have not met ``tol`` after ``max_newton`` sweeps fall back to bisection.

    Returns (v, iterations_used).
    """
    rhs = np.asarray(rhs, dtype=float)
    if kappa == 0.0:
        return rhs.copy(), 0
    if expo == 1.0:
        return rhs / (1.0 + kappa), 1
    s = np.abs(rhs)
    t = s.copy()
    scale = 1.0 + s
    iters = 0
    for _ in range(max_newton):
        iters += 1
        phi = t + kappa * t**expo - s
        if np.all(np.abs(phi) <= tol * scale):
            break
        dphi = 1.0 + kappa * expo * t ** (expo - 1.0)
        t -= phi / dphi
        np.maximum(t, 0.0, out=t)
    else:
        # safeguard: bisection on the still-unconverged nodes
        phi = t + kappa * t**expo - s
        bad = np.abs(phi) > tol * scale
        if np.any(bad):
            lo = np.zeros(np.count_nonzero(bad))
            hi = s[bad].copy()
            sb = s[bad]
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                res = mid + kappa * mid**expo - sb
                high = res > 0.0
                hi = np.where(high, mid, hi)
                lo = np.where(high, lo, mid)
                iters += 1
                if np.all(np.abs(res) <= tol * (1.0 + sb)):
                    break
            t[bad] = 0.5 * (lo + hi)
    return np.copysign(t, rhs), iters
