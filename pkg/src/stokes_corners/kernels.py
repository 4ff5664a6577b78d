"""Stokes kernels in Cartesian and tangential/normal frames.

Scalar functions here are the reference definitions.  Dense blocks used by
the solver come from a compiled extension when it is available and from a
numpy fallback otherwise; see :data:`BACKEND`.
"""

from __future__ import annotations

import math
import os
import warnings

import numpy as np

from .geometry import FramePoint, rotation_matrix

if os.environ.get("STOKES_CORNERS_PURE_PYTHON"):
    from . import _kernels_py as _backend

    BACKEND = "python"
else:
    try:
        from . import _kernels_ext as _backend

        BACKEND = "cython"
    except ImportError:  # extension not built
        from . import _kernels_py as _backend

        BACKEND = "python"

k_block = _backend.k_block
dlp_block = _backend.dlp_block


class SingularityError(ValueError):
    """Kernel evaluated at coincident points."""


class NearBoundaryWarning(UserWarning):
    """Interior target closer to the boundary than the quadrature resolves."""


def _diff(x, y):
    r = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    r2 = float(r @ r)
    if r2 == 0.0:
        raise SingularityError("coincident points")
    return r, r2


def stokeslet(x, y) -> np.ndarray:
    r, r2 = _diff(x, y)
    return (-0.5 * math.log(r2) * np.eye(2) + np.outer(r, r) / r2) / (4 * math.pi)


def stresslet(x, y) -> np.ndarray:
    r, r2 = _diff(x, y)
    return -np.einsum("i,j,k->ijk", r, r, r) / (math.pi * r2 * r2)


def kernel_K0(x: FramePoint, y: FramePoint) -> np.ndarray:
    r, r2 = _diff(y.position, x.position)
    return -(r @ y.normal) / (math.pi * r2 * r2) * np.outer(r, r)


def kernel_K0_limit(x: FramePoint, curvature: float) -> np.ndarray:
    """Diagonal value of K0 on a curve: on a circle (y - x).nu(y) = |y - x|^2 kappa / 2."""
    g = np.asarray(x.tangent, dtype=float)
    return -(curvature / (2 * math.pi)) * np.outer(g, g)


def kernel_K(x: FramePoint, y: FramePoint) -> np.ndarray:
    return rotation_matrix(x) @ kernel_K0(x, y) @ rotation_matrix(y).T


def wedge_kernels(s: float, t: float, theta: float):
    """The four scalar kernels k1..k4 of the wedge; s is the source."""
    sn, cs = math.sin(math.pi * theta), math.cos(math.pi * theta)
    d = s * s + t * t + 2 * s * t * cs
    if d == 0.0:
        raise ValueError("wedge kernel denominator vanishes")
    c = t * sn / (math.pi * d * d)
    k1 = c * (s + t * cs) * (s * cs + t)
    k2 = c * t * sn * (t + s * cs)
    k3 = -c * (s + t * cs) * s * sn
    k4 = -c * s * t * sn * sn
    return k1, k2, k3, k4


def wedge_kernel_block(s: float, t: float, theta: float) -> np.ndarray:
    """K(gamma(t), gamma(s)) on the wedge, assembled from k1..k4."""
    if (s > 0) == (t > 0):
        return np.zeros((2, 2))
    k1, k2, k3, k4 = wedge_kernels(s, t, theta)
    if t > 0:
        return np.array([[k1, k2], [k3, k4]])
    return np.array([[-k1, k2], [k3, -k4]])


def parity_kernels(s: float, t: float, theta: float) -> np.ndarray:
    """[[k11, k12], [k21, k22]] on (0,1)^2; s is the source."""
    sn, cs = math.sin(math.pi * theta), math.cos(math.pi * theta)
    d = s * s + t * t - 2 * s * t * cs
    if d == 0.0:
        raise ValueError("parity kernel denominator vanishes")
    c = 1.0 / (math.pi * d * d)
    return c * np.array(
        [
            [t * sn * (s - t * cs) * (t - s * cs), t * t * sn * sn * (t - s * cs)],
            [s * t * sn * sn * (s - t * cs), s * t * t * sn**3],
        ]
    )


def dlp_velocity(quadrature, mu, target, warn: bool = True) -> np.ndarray:
    """Double-layer velocity at an interior point.

    ``quadrature`` provides ``points``, ``tangents`` and ``weights`` arrays
    (for instance the evaluation rule of a mesh); ``mu`` holds the
    tangential/normal density at those points, shape (n, 2).
    """
    target = np.asarray(target, dtype=float)
    mu = np.asarray(mu, dtype=float).reshape(-1, 2)
    if warn and hasattr(quadrature, "near_boundary") and quadrature.near_boundary(target):
        warnings.warn("target is close to the boundary", NearBoundaryWarning, stacklevel=2)
    D = dlp_block(target[None, :], quadrature.points, quadrature.tangents)[0]
    return np.einsum("jma,m,ma->j", D, quadrature.weights, mu)
