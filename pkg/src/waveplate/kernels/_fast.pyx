# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the reference kernels (see reference.py for contracts)."""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, pow

cnp.import_array()


def wave_apply_2d(double[:, ::1] u, double[::1] neumann, double hx, double hy):
    cdef Py_ssize_t n0 = u.shape[0], n1 = u.shape[1]
    cdef double ihx2 = 1.0 / (hx * hx), ihy2 = 1.0 / (hy * hy)
    out_arr = np.zeros((n0, n1))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double lap, up_ghost
    for i in range(1, n0 - 1):
        for j in range(1, n1 - 1):
            lap = (u[i + 1, j] - 2.0 * u[i, j] + u[i - 1, j]) * ihx2 \
                + (u[i, j + 1] - 2.0 * u[i, j] + u[i, j - 1]) * ihy2
            out[i, j] = u[i, j] - lap
        # wall row: mirrored ghost carries the flux
        j = n1 - 1
        up_ghost = u[i, j - 1] + 2.0 * hy * neumann[i]
        lap = (u[i + 1, j] - 2.0 * u[i, j] + u[i - 1, j]) * ihx2 \
            + (up_ghost - 2.0 * u[i, j] + u[i, j - 1]) * ihy2
        out[i, j] = u[i, j] - lap
    return out_arr


def wave_apply_3d(double[:, :, ::1] u, double[:, ::1] neumann,
                  double hx, double hy, double hz):
    cdef Py_ssize_t n0 = u.shape[0], n1 = u.shape[1], n2 = u.shape[2]
    cdef double ihx2 = 1.0 / (hx * hx), ihy2 = 1.0 / (hy * hy), ihz2 = 1.0 / (hz * hz)
    out_arr = np.zeros((n0, n1, n2))
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t i, j, k
    cdef double lap, ghost
    for i in range(1, n0 - 1):
        for j in range(1, n1 - 1):
            for k in range(1, n2 - 1):
                lap = (u[i + 1, j, k] - 2.0 * u[i, j, k] + u[i - 1, j, k]) * ihx2 \
                    + (u[i, j + 1, k] - 2.0 * u[i, j, k] + u[i, j - 1, k]) * ihy2 \
                    + (u[i, j, k + 1] - 2.0 * u[i, j, k] + u[i, j, k - 1]) * ihz2
                out[i, j, k] = u[i, j, k] - lap
            k = n2 - 1
            ghost = u[i, j, k - 1] + 2.0 * hz * neumann[i, j]
            lap = (u[i + 1, j, k] - 2.0 * u[i, j, k] + u[i - 1, j, k]) * ihx2 \
                + (u[i, j + 1, k] - 2.0 * u[i, j, k] + u[i, j - 1, k]) * ihy2 \
                + (ghost - 2.0 * u[i, j, k] + u[i, j, k - 1]) * ihz2
            out[i, j, k] = u[i, j, k] - lap
    return out_arr


def grad_sq_2d(double[:, ::1] u, double hx, double hy,
               double[::1] wx, double[::1] wy):
    cdef Py_ssize_t n0 = u.shape[0], n1 = u.shape[1]
    cdef Py_ssize_t i, j
    cdef double d, sx = 0.0, sy = 0.0
    for i in range(n0 - 1):
        for j in range(n1):
            d = (u[i + 1, j] - u[i, j]) / hx
            sx += d * d * wy[j]
    for i in range(n0):
        for j in range(n1 - 1):
            d = (u[i, j + 1] - u[i, j]) / hy
            sy += d * d * wx[i]
    return hx * sx + hy * sy


def grad_sq_3d(double[:, :, ::1] u, double hx, double hy, double hz,
               double[::1] wx, double[::1] wy, double[::1] wz):
    cdef Py_ssize_t n0 = u.shape[0], n1 = u.shape[1], n2 = u.shape[2]
    cdef Py_ssize_t i, j, k
    cdef double d, sx = 0.0, sy = 0.0, sz = 0.0
    for i in range(n0 - 1):
        for j in range(n1):
            for k in range(n2):
                d = (u[i + 1, j, k] - u[i, j, k]) / hx
                sx += d * d * wy[j] * wz[k]
    for i in range(n0):
        for j in range(n1 - 1):
            for k in range(n2):
                d = (u[i, j + 1, k] - u[i, j, k]) / hy
                sy += d * d * wx[i] * wz[k]
    for i in range(n0):
        for j in range(n1):
            for k in range(n2 - 1):
                d = (u[i, j, k + 1] - u[i, j, k]) / hz
                sz += d * d * wx[i] * wy[j]
    return hx * sx + hy * sy + hz * sz


def damping_solve_power(rhs, double kappa, double expo,
                        double tol=1e-12, int max_newton=60):
    rhs_arr = np.ascontiguousarray(rhs, dtype=np.float64)
    shape = rhs_arr.shape
    flat = rhs_arr.reshape(-1)
    out_arr = np.empty_like(flat)
    cdef double[::1] r = flat
    cdef double[::1] out = out_arr
    cdef Py_ssize_t n = r.shape[0], i
    cdef int it, total = 0, used
    cdef double s, t, phi, dphi, lo, hi, mid, res, scale

    if kappa == 0.0:
        out_arr[:] = flat
        return out_arr.reshape(shape), 0
    if expo == 1.0:
        np.divide(flat, 1.0 + kappa, out=out_arr)
        return out_arr.reshape(shape), 1

    for i in range(n):
        s = fabs(r[i])
        scale = 1.0 + s
        t = s
        used = 0
        for it in range(max_newton):
            used += 1
            phi = t + kappa * pow(t, expo) - s
            if fabs(phi) <= tol * scale:
                break
            dphi = 1.0 + kappa * expo * pow(t, expo - 1.0)
            t -= phi / dphi
            if t < 0.0:
                t = 0.0
        else:
            lo = 0.0
            hi = s
            for it in range(200):
                used += 1
                mid = 0.5 * (lo + hi)
                res = mid + kappa * pow(mid, expo) - s
                if res > 0.0:
                    hi = mid
                else:
                    lo = mid
                if fabs(res) <= tol * scale:
                    break
            t = 0.5 * (lo + hi)
        if used > total:
            total = used
        out[i] = t if r[i] >= 0.0 else -t
    return out_arr.reshape(shape), total
