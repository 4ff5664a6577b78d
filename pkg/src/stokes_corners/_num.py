"""Small precision-generic helpers shared by the analytic modules.

Scalar formulas accept Python floats/complex (evaluated with :mod:`cmath`)
or mpmath numbers (evaluated with :mod:`mpmath` at the ambient precision).
"""

from __future__ import annotations

import cmath
import math

import mpmath
import numpy as np

_MP_TYPES = (mpmath.mpf, mpmath.mpc)


def is_mp(*xs) -> bool:
    return any(isinstance(x, _MP_TYPES) for x in xs)


def lib(*xs):
    """Return the math namespace matching the argument types."""
    return mpmath if is_mp(*xs) else cmath


def re(x):
    return x.real if hasattr(x, "real") else x


def nearest_int(x) -> int:
    return int(math.floor(float(re(x)) + 0.5))


def sinpi(x, L=None):
    """sin(pi x) with exact integer shift, accurate near the integers."""
    L = L or lib(x)
    m = nearest_int(x)
    v = L.sin(L.pi * (x - m))
    return -v if m % 2 else v


def cospi(x, L=None):
    L = L or lib(x)
    m = nearest_int(x)
    v = L.cos(L.pi * (x - m))
    return -v if m % 2 else v


def matrix(rows, mp: bool):
    """Build a numpy 2-D array; object dtype keeps mpmath entries intact."""
    if mp:
        return np.array(rows, dtype=object)
    return np.array(rows, dtype=complex)


def cauchy_mean(f, center, radius: float, npts: int | None = None):
    """Value at ``center`` of a function analytic on a disk, via the
    trapezoidal mean over the boundary circle.

    Used to evaluate removable singularities without cancellation.
    """
    mp = is_mp(center)
    L = mpmath if mp else cmath
    if npts is None:
        npts = 96 if mp else 40
    acc = 0
    for k in range(npts):
        acc += f(center + radius * L.exp(2j * L.pi * k / npts))
    return acc / npts


def to_complex(x) -> complex:
    return complex(x)


def as_mp(x):
    if isinstance(x, _MP_TYPES):
        return x
    if isinstance(x, complex):
        return mpmath.mpc(x)
    return mpmath.mpf(x)
