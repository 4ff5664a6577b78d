# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel blocks; same interface as _kernels_py."""

import numpy as np

cdef double INV_PI = 0.3183098861837907


def k_block(xs, tx, ys, ty):
    cdef const double[:, ::1] X = np.ascontiguousarray(xs, dtype=np.float64)
    cdef const double[:, ::1] TX = np.ascontiguousarray(tx, dtype=np.float64)
    cdef const double[:, ::1] Y = np.ascontiguousarray(ys, dtype=np.float64)
    cdef const double[:, ::1] TY = np.ascontiguousarray(ty, dtype=np.float64)
    cdef Py_ssize_t nx = X.shape[0], ny = Y.shape[0], i, j
    out_arr = np.empty((nx, ny, 2, 2), dtype=np.float64)
    cdef double[:, :, :, ::1] out = out_arr
    cdef double r0, r1, rho2, u1, u2, v1, v2, c
    with nogil:
        for i in range(nx):
            for j in range(ny):
                r0 = Y[j, 0] - X[i, 0]
                r1 = Y[j, 1] - X[i, 1]
                rho2 = r0 * r0 + r1 * r1
                if rho2 > 0:
                    v2 = r0 * TY[j, 1] - r1 * TY[j, 0]
                    c = -INV_PI * v2 / (rho2 * rho2)
                    u1 = r0 * TX[i, 0] + r1 * TX[i, 1]
                    u2 = r0 * TX[i, 1] - r1 * TX[i, 0]
                    v1 = r0 * TY[j, 0] + r1 * TY[j, 1]
                else:
                    c = 0.0
                    u1 = u2 = v1 = v2 = 0.0
                out[i, j, 0, 0] = c * u1 * v1
                out[i, j, 0, 1] = c * u1 * v2
                out[i, j, 1, 0] = c * u2 * v1
                out[i, j, 1, 1] = c * u2 * v2
    return out_arr


def dlp_block(targets, ys, ty):
    cdef const double[:, ::1] X = np.ascontiguousarray(targets, dtype=np.float64)
    cdef const double[:, ::1] Y = np.ascontiguousarray(ys, dtype=np.float64)
    cdef const double[:, ::1] TY = np.ascontiguousarray(ty, dtype=np.float64)
    cdef Py_ssize_t nx = X.shape[0], ny = Y.shape[0], i, j
    out_arr = np.empty((nx, 2, ny, 2), dtype=np.float64)
    cdef double[:, :, :, ::1] out = out_arr
    cdef double r0, r1, rho2, rt, rn, c
    with nogil:
        for i in range(nx):
            for j in range(ny):
                r0 = Y[j, 0] - X[i, 0]
                r1 = Y[j, 1] - X[i, 1]
                rho2 = r0 * r0 + r1 * r1
                rt = r0 * TY[j, 0] + r1 * TY[j, 1]
                rn = r0 * TY[j, 1] - r1 * TY[j, 0]
                c = -INV_PI * rn / (rho2 * rho2)
                out[i, 0, j, 0] = c * rt * r0
                out[i, 0, j, 1] = c * rn * r0
                out[i, 1, j, 0] = c * rt * r1
                out[i, 1, j, 1] = c * rn * r1
    return out_arr
