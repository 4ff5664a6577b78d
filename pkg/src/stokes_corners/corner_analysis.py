"""Moment integrals of the parity kernels on a wedge and the 2x2 matrices
built from them.

All formulas are written in terms of ``eps = theta - 1`` and, where the
exponent sits close to an integer, in terms of ``z = m + w``.  This keeps
the evaluation accurate in the regime where the corner opens up (theta near
1) and the exponents approach integers.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import mpmath
import numpy as np

from . import _num
from ._num import lib, sinpi


class PoleError(ArithmeticError):
    """Raised when a formula is evaluated on one of its poles."""


class Parity(enum.Enum):
    TONE = "tone"  # tangential odd, normal even
    TENO = "teno"  # tangential even, normal odd

    @property
    def sign(self) -> int:
        return 1 if self is Parity.TONE else -1

    @classmethod
    def parse(cls, value) -> "Parity":
        if isinstance(value, Parity):
            return value
        return cls(str(value).lower())


POLE_TOL = 1e-8


def _split(z, offset):
    """Return (m, w) with z = m + w; ``offset`` overrides the split."""
    if offset is not None:
        m, w = offset
        return int(m), w
    m = _num.nearest_int(z)
    return m, z - m


def _sin_pi_z(m, w, L):
    v = L.sin(L.pi * w)
    return -v if m % 2 else v


# --------------------------------------------------------------------------
# a(z, theta): coefficient of the singular term of I(z, theta, t)
# --------------------------------------------------------------------------

def _a_raw(z, theta):
    L = lib(z, theta)
    pi = L.pi
    s = L.sin(pi * theta)
    num = z * L.sin(2 * pi * theta) * L.cos(pi * (1 - theta) * z) + 2 * L.sin(
        pi * (1 - theta) * z
    ) * (1 - z * s * s)
    return num / (4 * sinpi(z, L) * s**3)


def a_singular(z, theta):
    """Coefficient a(z, theta) of t^(z-3) in I(z, theta, t)."""
    L = lib(z, theta)
    if abs(sinpi(z, L)) < POLE_TOL:
        raise PoleError(f"a(z, theta) has a pole at integer z={z}")
    eps = theta - 1
    if eps == 0:
        return z * (1 - z) * (2 - z) / (6 * sinpi(z, L))
    if abs(eps) < 1e-3:
        return _num.cauchy_mean(lambda th: _a_raw(z, th), theta, 0.25)
    return _a_raw(z, theta)


# --------------------------------------------------------------------------
# F(n, z, theta): Taylor coefficients of the far part of I(z, theta, t)
# --------------------------------------------------------------------------

def _F_raw(n, z, theta):
    L = lib(z, theta)
    pi = L.pi
    num = (n + 1) * L.sin((n + 3) * pi * theta) - (n + 3) * L.sin((n + 1) * pi * theta)
    return num / (4 * pi * (n + 3 - z) * L.sin(pi * theta) ** 3)


def F_smooth(n: int, z, theta):
    """Coefficient F(n, z, theta); bounded as theta approaches an integer."""
    if n < 0:
        raise ValueError("n must be non-negative")
    L = lib(z, theta)
    if abs(n + 3 - z) < POLE_TOL:
        raise PoleError(f"F(n={n}, z, theta) has a pole at z={n + 3}")
    m = _num.nearest_int(theta)
    d = theta - m
    if d == 0:
        sgn = -1 if (n * m) % 2 else 1
        return -sgn * (n + 1) * (n + 2) * (n + 3) / (6 * L.pi * (n + 3 - z))
    # the circle must shrink with n: sin((n+3) pi theta) grows off the real axis
    r = min(0.25, 2.0 / (n + 3))
    if abs(d) < r / 2:
        return _num.cauchy_mean(lambda th: _F_raw(n, z, th), theta, r)
    return _F_raw(n, z, theta)


def I_series(z, theta, t, n_trunc: int | None = 30, return_tail: bool = False):
    """(1/pi) * int_0^1 s^z / (s^2 + t^2 - 2 s t cos(pi theta))^2 ds.

    Evaluated as a(z,theta) t^(z-3) + sum_{n=0}^{n_trunc} F(n,z,theta) t^n.
    With ``n_trunc=None`` the sum runs until the terms drop below roundoff.
    The magnitude of the last retained term is the tail estimate.
    """
    if not 0 < float(t) < 1:
        raise ValueError("t must lie in (0, 1)")
    L = lib(z, theta, t)
    if n_trunc is None:
        n_trunc = _terms_needed(t, L)
    total = a_singular(z, theta) * L.power(t, z - 3) if L is mpmath else a_singular(
        z, theta
    ) * complex(t) ** (z - 3)
    last = 0
    for n in range(n_trunc + 1):
        last = F_smooth(n, z, theta) * t**n
        total += last
    if return_tail:
        return total, abs(last)
    return total


def _terms_needed(t, L) -> int:
    eps = mpmath.eps if L is mpmath else 2.2e-16
    n = int(np.ceil(float(mpmath.log(eps) / mpmath.log(t)))) + 12
    return min(max(n, 8), 20000)


# --------------------------------------------------------------------------
# Moment integrals of the parity kernels
# --------------------------------------------------------------------------

def singular_coeffs(z, theta, *, offset=None):
    """2x2 matrix a_ij(z, theta) multiplying t^z in int_0^1 k_ij(s,t) s^z ds."""
    L = lib(z, theta)
    m, w = _split(z, offset)
    z = m + w
    sz = _sin_pi_z(m, w, L)
    if abs(sz) < POLE_TOL:
        raise PoleError(f"singular coefficients have a pole at z={z}")
    num = _scaled_singular(z, theta, L)
    d = 2 * sz
    return _num.matrix([[num[0] / d, num[1] / d], [num[2] / d, num[3] / d]], _num.is_mp(z, theta))


def _scaled_singular(z, theta, L):
    """2 sin(pi z) a_ij, written around theta = 1 (eps = theta - 1)."""
    pi = L.pi
    eps = theta - 1
    se = L.sin(pi * eps)
    ce_z = L.cos(pi * z * eps)
    sz_e = L.sin(pi * z * eps)
    n11 = -(z + 1) * se * ce_z + L.sin(pi * eps * (1 - z))
    n12 = -(z - 1) * se * sz_e
    n21 = (z + 1) * se * sz_e
    n22 = -(z + 1) * se * ce_z + L.sin(pi * eps * (z + 1))
    return n11, n12, n21, n22


def smooth_coeffs(n: int, z, theta, *, offset=None):
    """2x2 matrix F_ij(n, z, theta) multiplying t^n in the moment integrals."""
    if n < 1:
        raise ValueError("n must be >= 1")
    L = lib(z, theta)
    m, w = _split(z, offset)
    den = (n - m) - w
    # with an explicit split the numerator vanishes alongside w
    if den == 0 or (offset is None and abs(den) < POLE_TOL):
        raise PoleError(f"F_ij(n={n}) has a pole at z={n}")
    pi = L.pi
    eps = theta - 1
    se, ce = L.sin(pi * eps), L.cos(pi * eps)
    sn, cn = L.sin(n * pi * eps), L.cos(n * pi * eps)
    sgn = 1 if n % 2 else -1  # (-1)^(n+1)
    d = 2 * pi * den
    f11 = sgn * (n * se * cn + ce * sn) / d
    f12 = sgn * (n - 1) * se * sn / d
    f21 = -sgn * (n + 1) * se * sn / d
    f22 = sgn * (n * se * cn - ce * sn) / d
    return _num.matrix([[f11, f12], [f21, f22]], _num.is_mp(z, theta))


def moment_integrals(z, theta, t, n_terms: int | None = None):
    """Closed form of the 2x2 matrix int_0^1 k_ij(s, t) s^z ds."""
    L = lib(z, theta, t)
    mp = L is mpmath
    a = singular_coeffs(z, theta)
    tz = L.power(t, z) if mp else complex(t) ** z
    out = a * tz
    if n_terms is None:
        n_terms = _terms_needed(t, L)
    if mp:
        for n in range(1, n_terms + 1):
            out = out + smooth_coeffs(n, z, theta) * t**n
        return out
    return out + _smooth_sum_np(z, theta, float(t), n_terms)


def _smooth_sum_np(z, theta, t, n_terms):
    n = np.arange(1, n_terms + 1, dtype=float)
    m = _num.nearest_int(z)
    w = z - m
    eps = theta - 1
    pi = np.pi
    se, ce = np.sin(pi * eps), np.cos(pi * eps)
    sn, cn = np.sin(n * pi * eps), np.cos(n * pi * eps)
    sgn = np.where(n % 2 == 1, 1.0, -1.0)
    den = 2 * pi * ((n - m) - w)
    tn = t**n
    c = sgn * tn / den
    f11 = np.sum(c * (n * se * cn + ce * sn))
    f12 = np.sum(c * (n - 1) * se * sn)
    f21 = np.sum(-c * (n + 1) * se * sn)
    f22 = np.sum(c * (n * se * cn - ce * sn))
    return np.array([[f11, f12], [f21, f22]], dtype=complex)


@dataclass
class MomentExpansion:
    """Singular and smooth parts of the four moment integrals."""

    z: complex
    theta: float
    singular_coeff: np.ndarray
    smooth_coeffs: list = field(default_factory=list)

    @property
    def n_trunc(self) -> int:
        return len(self.smooth_coeffs)

    def evaluate(self, t):
        L = lib(self.z, self.theta, t)
        tz = L.power(t, self.z) if L is mpmath else complex(t) ** self.z
        out = self.singular_coeff * tz
        for n, f in enumerate(self.smooth_coeffs, start=1):
            out = out + f * t**n
        return out


def moment_expansion(z, theta, n_trunc: int = 30) -> MomentExpansion:
    return MomentExpansion(
        z=z,
        theta=theta,
        singular_coeff=singular_coeffs(z, theta),
        smooth_coeffs=[smooth_coeffs(n, z, theta) for n in range(1, n_trunc + 1)],
    )


# --------------------------------------------------------------------------
# 2x2 matrices of the corner analysis
# --------------------------------------------------------------------------

def A_matrix(z, theta, parity, *, offset=None):
    """-I/2 + a (TONE) or -I/2 - a (TENO)."""
    parity = Parity.parse(parity)
    a = singular_coeffs(z, theta, offset=offset)
    half = mpmath.mpf(1) / 2 if _num.is_mp(z, theta) else 0.5
    return -half * np.eye(2, dtype=a.dtype) + parity.sign * a


def scaled_A_matrix(z, theta, parity, *, offset=None):
    """2 sin(pi z) A(z, theta): finite at integer z, used for null vectors."""
    parity = Parity.parse(parity)
    L = lib(z, theta)
    m, w = _split(z, offset)
    z = m + w
    sz = _sin_pi_z(m, w, L)
    n11, n12, n21, n22 = _scaled_singular(z, theta, L)
    s = parity.sign
    return _num.matrix(
        [[-sz + s * n11, s * n12], [s * n21, -sz + s * n22]], _num.is_mp(z, theta)
    )


def det_A_closed(z, theta, parity):
    """Factorised determinant of A(z, theta)."""
    parity = Parity.parse(parity)
    L = lib(z, theta)
    st = L.sin(L.pi * theta)
    s = -parity.sign
    f1 = z * st + s * L.sin(L.pi * z * theta)
    f2 = z * st + s * L.sin(L.pi * z * (2 - theta))
    sz = sinpi(z, L)
    return f1 * f2 / (4 * sz * sz)


def smooth_matrix(ell: int, z, theta, parity, *, offset=None):
    """Parity-signed matrix mapping (p, q) to the t^ell velocity coefficient."""
    parity = Parity.parse(parity)
    return parity.sign * smooth_coeffs(ell, z, theta, offset=offset)


def F0_matrix(theta, parity):
    """Velocity at the corner produced by a constant density."""
    parity = Parity.parse(parity)
    mp = _num.is_mp(theta)
    L = mpmath if mp else np
    pi = L.pi
    s, c = L.sin(pi * theta), L.cos(pi * theta)
    g = pi * (1 - theta)
    if parity is Parity.TONE:
        m = [[pi - s + g * c, -g * s], [-g * s, pi - s - g * c]]
    else:
        m = [[pi + s - g * c, g * s], [g * s, pi + s + g * c]]
    out = np.array(m, dtype=object if mp else float)
    return -out / (2 * pi)


def F1_vector(theta, parity):
    """t^1 velocity coefficient for the special density (0, t)."""
    parity = Parity.parse(parity)
    mp = _num.is_mp(theta)
    L = mpmath if mp else np
    pi = L.pi
    s, c = L.sin(pi * theta), L.cos(pi * theta)
    if parity is Parity.TONE:
        v = [-s * s, pi * theta - s * c]
    else:
        v = [s * s, pi * (2 - theta) + s * c]
    out = np.array(v, dtype=object if mp else float)
    return -out / (2 * pi)
