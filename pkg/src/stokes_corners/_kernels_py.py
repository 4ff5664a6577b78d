"""Vectorised numpy implementation of the hot kernel blocks."""

from __future__ import annotations

import numpy as np

INV_PI = 1.0 / np.pi


def k_block(xs, tx, ys, ty):
    """K(x_i, y_j) for all pairs, shape (n_x, n_y, 2, 2).

    Frames are given by unit tangents; normals are the tangents rotated by
    -90 degrees.  Coincident points give a zero block.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    tx = np.asarray(tx, dtype=float)
    ty = np.asarray(ty, dtype=float)
    r0 = ys[None, :, 0] - xs[:, None, 0]
    r1 = ys[None, :, 1] - xs[:, None, 1]
    rho2 = r0 * r0 + r1 * r1
    u1 = r0 * tx[:, None, 0] + r1 * tx[:, None, 1]
    u2 = r0 * tx[:, None, 1] - r1 * tx[:, None, 0]
    v1 = r0 * ty[None, :, 0] + r1 * ty[None, :, 1]
    v2 = r0 * ty[None, :, 1] - r1 * ty[None, :, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        c = np.where(rho2 > 0, -INV_PI * v2 / (rho2 * rho2), 0.0)
    out = np.empty(rho2.shape + (2, 2))
    out[..., 0, 0] = c * u1 * v1
    out[..., 0, 1] = c * u1 * v2
    out[..., 1, 0] = c * u2 * v1
    out[..., 1, 1] = c * u2 * v2
    return out


def dlp_block(targets, ys, ty):
    """Velocity matrix, shape (n_t, 2, n_y, 2).

    Entry [i, j, m, a] is the j-th Cartesian velocity at target i due to a
    unit density in frame component a (0 = tangential, 1 = normal) at y_m.
    """
    x = np.asarray(targets, dtype=float)
    ys = np.asarray(ys, dtype=float)
    ty = np.asarray(ty, dtype=float)
    r0 = ys[None, :, 0] - x[:, None, 0]
    r1 = ys[None, :, 1] - x[:, None, 1]
    rho2 = r0 * r0 + r1 * r1
    rt = r0 * ty[None, :, 0] + r1 * ty[None, :, 1]
    rn = r0 * ty[None, :, 1] - r1 * ty[None, :, 0]
    c = -INV_PI * rn / (rho2 * rho2)
    out = np.empty((len(x), 2, len(ys), 2))
    for j, rj in enumerate((r0, r1)):
        out[:, j, :, 0] = c * rt * rj
        out[:, j, :, 1] = c * rn * rj
    return out
