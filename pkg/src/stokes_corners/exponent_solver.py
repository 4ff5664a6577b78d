"""Corner exponents z_{n,j}(theta) and their null vectors.

The exponents solve H_j(z, theta) = 0 with z(1) = n.  They are traced from
theta = 1 by Newton continuation.  The path runs along the real axis and
detours into the upper half plane around the real branch points, where two
families collide.  Internally every exponent is stored as ``z = n + w`` and
theta as ``1 + eps`` so that near theta = 1 the small quantities ``w`` and
``eps`` keep full relative accuracy.
"""

from __future__ import annotations

import cmath
import csv
import functools
import math
from dataclasses import dataclass, field, replace

import mpmath
import numpy as np
from scipy.optimize import brentq

from . import _num
from .corner_analysis import Parity, scaled_A_matrix


class ContinuationError(RuntimeError):
    """Newton continuation stalled."""

    def __init__(self, message: str, theta=None):
        super().__init__(message)
        self.theta = theta


class BranchPointError(ContinuationError):
    """Target angle coincides with a branch point of the family."""


class NotARootError(ValueError):
    """A(z, theta) is numerically nonsingular."""


# --------------------------------------------------------------------------
# implicit functions
# --------------------------------------------------------------------------

def _h_parts(m: int, w, eps, parity: Parity, j: int, L):
    """H, dH/dz, dH/deps at z = m + w, theta = 1 + eps (balanced form)."""
    kappa = -1 if j == 1 else 1
    sigma = -parity.sign
    z = m + w
    g = 1 + kappa * eps
    phi = w * g + kappa * m * eps
    alt = -1 if m % 2 else 1
    pi = L.pi
    se, ce = L.sin(pi * eps), L.cos(pi * eps)
    sp, cp = L.sin(pi * phi), L.cos(pi * phi)
    H = -z * se + sigma * alt * sp
    Hz = -se + sigma * alt * pi * g * cp
    He = -pi * z * ce + sigma * alt * pi * kappa * z * cp
    return H, Hz, He


def implicit_H(z, theta, parity, j: int):
    """z sin(pi theta) -+ sin(pi z (2 - theta)) (j=1) or sin(pi z theta) (j=2)."""
    parity = Parity.parse(parity)
    if j not in (1, 2):
        raise ValueError("branch index j must be 1 or 2")
    L = _num.lib(z, theta)
    m = _num.nearest_int(z)
    return _h_parts(m, z - m, theta - 1, parity, j, L)[0]


def implicit_H_dz(z, theta, parity, j: int):
    parity = Parity.parse(parity)
    L = _num.lib(z, theta)
    m = _num.nearest_int(z)
    return _h_parts(m, z - m, theta - 1, parity, j, L)[1]


# --------------------------------------------------------------------------
# roots of tan x = x and the sinc equations
# --------------------------------------------------------------------------

def sinc(x):
    return math.sin(x) / x if x != 0 else 1.0


@functools.lru_cache(maxsize=None)
def _lambda(j: int) -> float:
    lo, hi = j * math.pi + math.pi / 4, j * math.pi + math.pi / 2
    f = lambda x: math.sin(x) - x * math.cos(x)  # zero iff tan x = x, no poles
    x = brentq(f, lo, hi - 1e-15, xtol=1e-16, rtol=1e-15, maxiter=200)
    for _ in range(3):  # Newton polish; f' = x sin x
        x -= f(x) / (x * math.sin(x))
    return x


def _lambda_mp(j: int, dps: int):
    with mpmath.workdps(dps + 10):
        f = lambda x: mpmath.sin(x) - x * mpmath.cos(x)
        x = mpmath.findroot(f, mpmath.mpf(_lambda(j)))
    return x


def lambda_roots(J: int, dps: int | None = None) -> list:
    """lambda_1..lambda_J: roots of tan x = x in (j pi + pi/4, j pi + pi/2).

    Floats by default.  Since tan' = 1 + x^2, a rounded double can leave a
    residual |tan x - x| above 1e-12 for larger j; pass ``dps`` to get
    mpmath values at that precision instead.
    """
    if J < 1:
        raise ValueError("J must be >= 1")
    if dps is not None:
        return [_lambda_mp(j, dps) for j in range(1, J + 1)]
    return [_lambda(j) for j in range(1, J + 1)]


def _sinc_roots(c: float, j: int) -> list[float]:
    """Solutions of sinc x = c on (0, 2 pi) for c in the range of cos(lambda_j)."""
    lam1 = _lambda(1)
    f = lambda x: sinc(x) - c
    if c > 0:
        return [brentq(f, 1e-300 + 1e-12, math.pi, xtol=1e-16, rtol=1e-15)]
    if abs(c - sinc(lam1)) < 1e-15:  # tangency at lambda_1
        return [lam1, lam1]
    return [
        brentq(f, math.pi, lam1, xtol=1e-16, rtol=1e-15),
        brentq(f, lam1, 2 * math.pi, xtol=1e-16, rtol=1e-15),
    ]


@functools.lru_cache(maxsize=None)
def alpha_solutions(j: int) -> tuple:
    """Solutions of sinc(alpha) = -cos(lambda_j) on (0, 2 pi)."""
    return tuple(_sinc_roots(-math.cos(_lambda(j)), j))


@functools.lru_cache(maxsize=None)
def beta_solutions(j: int) -> tuple:
    """Solutions of sinc(beta) = cos(lambda_j) on (0, 2 pi)."""
    return tuple(_sinc_roots(math.cos(_lambda(j)), j))


def _tone_family_labels(n: int, j: int) -> list[tuple]:
    """Branch points of the TONE family (n, j) as (kind, order, index)."""
    if j == 1:
        if n == 1:
            return [("a", 1, 1)]
        if n % 2 == 0:
            m = n // 2
            return [("a", 2 * m, 2), ("a", 2 * m, 1), ("a", 2 * m - 1, 1)]
        m = (n + 1) // 2
        return [("a", 2 * m - 2, 2), ("a", 2 * m - 2, 1), ("a", 2 * m - 1, 1)]
    if n == 1:
        return []
    if n == 2:
        return [("b", 2, 1)]
    if n % 2 == 1:
        m = (n + 1) // 2
        return [("b", 2 * m - 2, 1), ("b", 2 * m - 1, 1), ("b", 2 * m - 1, 2)]
    m = n // 2
    return [("b", 2 * m, 1), ("b", 2 * m - 1, 1), ("b", 2 * m - 1, 2)]


def _label_theta(label) -> float:
    kind, order, idx = label
    if kind == "a":
        return 2.0 - alpha_solutions(order)[idx - 1] / math.pi
    return beta_solutions(order)[idx - 1] / math.pi


def _is_special(n: int, j: int, parity: Parity) -> bool:
    return n == 1 and j == (2 if parity is Parity.TONE else 1)


@functools.lru_cache(maxsize=None)
def family_branch_points(n: int, j: int, parity) -> tuple:
    """Real branch points of one exponent family, sorted."""
    parity = Parity.parse(parity)
    if _is_special(n, j, parity):
        return ()
    if parity is Parity.TONE:
        pts = [_label_theta(lb) for lb in _tone_family_labels(n, j)]
    else:
        # TENO H_j(z, theta) = -TONE H_{3-j}(z, 2 - theta)
        pts = [2.0 - _label_theta(lb) for lb in _tone_family_labels(n, 3 - j)]
    return tuple(sorted(pts))


@dataclass(frozen=True)
class BranchPointTable:
    parity: Parity
    N: int
    theta_values: tuple
    residuals: tuple = ()

    def __len__(self) -> int:
        return len(self.theta_values)


def branch_points(N: int, parity) -> BranchPointTable:
    """The 3N-2 real branch points of the families n <= N."""
    parity = Parity.parse(parity)
    if N < 2:
        raise ValueError("N must be >= 2")
    labels = set()
    for n in range(1, N + 1):
        labels.update(_tone_family_labels(n, 1))
        labels.update(_tone_family_labels(n, 2))
    thetas, res = [], []
    for lb in sorted(labels):
        kind, order, idx = lb
        c = math.cos(_lambda(order))
        if kind == "a":
            x = alpha_solutions(order)[idx - 1]
            r = abs(sinc(x) + c)
        else:
            x = beta_solutions(order)[idx - 1]
            r = abs(sinc(x) - c)
        th = _label_theta(lb)
        thetas.append(th if parity is Parity.TONE else 2.0 - th)
        res.append(r)
    order = np.argsort(thetas)
    return BranchPointTable(
        parity=parity,
        N=N,
        theta_values=tuple(float(thetas[i]) for i in order),
        residuals=tuple(float(res[i]) for i in order),
    )


# --------------------------------------------------------------------------
# continuation
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ExponentFamily:
    parity: Parity
    j: int
    n: int
    theta: float
    z: complex
    p: complex
    q: complex
    residual: float
    w: complex = 0j  # z - n, kept separately for accuracy
    special: bool = False

    @property
    def offset(self):
        return (self.n, self.w)


def _path_pieces(theta_t: float, bps, delta: float):
    """Straight segments and upper semicircles from 1 to theta_t."""
    lo, hi = sorted((1.0, theta_t))
    sgn = 1.0 if theta_t > 1 else -1.0
    between = [b for b in bps if lo < b < hi]
    intervals = []
    for b in sorted(between, key=lambda b: sgn * (b - 1.0)):
        r = min(delta, abs(b - 1.0) / 2, abs(theta_t - b) / 2)
        a0, a1 = b - sgn * r, b + sgn * r
        if intervals and sgn * (a0 - intervals[-1][1]) <= 0:
            intervals[-1] = (intervals[-1][0], a1)
        else:
            intervals.append((a0, a1))
    pieces = []
    cur = 1.0
    for a0, a1 in intervals:
        pieces.append(("line", cur, a0))
        pieces.append(("arc", a0, a1))
        cur = a1
    pieces.append(("line", cur, theta_t))
    return pieces


def _piece_point(piece, u):
    kind, a, b = piece
    if kind == "line":
        return a + (b - a) * u
    c, r = (a + b) / 2, abs(b - a) / 2
    phi0 = 0.0 if a > b else math.pi
    phi = phi0 + (math.pi - 2 * phi0) * u  # through the upper half plane
    return c + r * cmath.exp(1j * phi)


def _piece_length(piece) -> float:
    kind, a, b = piece
    return abs(b - a) * (math.pi / 2 if kind == "arc" else 1.0)


def _newton(n, w, eps, parity, j, tol=1e-14, maxit=8):
    for it in range(maxit):
        H, Hz, _ = _h_parts(n, w, eps, parity, j, cmath)
        if Hz == 0:
            return w, False, abs(H)
        dw = H / Hz
        w = w - dw
        if abs(dw) <= 4e-16 * max(1.0, abs(n + w)) or abs(H) < tol * 1e-3:
            H = _h_parts(n, w, eps, parity, j, cmath)[0]
            return w, True, abs(H)
    H = _h_parts(n, w, eps, parity, j, cmath)[0]
    return w, abs(H) <= tol, abs(H)


def trace_exponent(n, j, parity, theta_t, delta=0.05, step=1e-2, min_step=1e-6):
    """Continue the root of H_j from (n, 1) to ``theta_t``; returns w = z - n."""
    parity = Parity.parse(parity)
    bps = family_branch_points(n, j, parity)
    w = 0j
    if theta_t == 1:
        return w
    for piece in _path_pieces(theta_t, bps, delta):
        length = _piece_length(piece)
        if length == 0:
            continue
        u = 0.0
        h = min(step / length, 1.0)
        th = _piece_point(piece, 0.0)
        while u < 1.0:
            h = min(h, 1.0 - u)
            u_new = u + h
            th_new = _piece_point(piece, u_new)
            _, Hz, He = _h_parts(n, w, th - 1, parity, j, cmath)
            dz = -He / Hz * (th_new - th)
            w_pred = w + dz
            w_new, ok, _ = _newton(n, w_pred, th_new - 1, parity, j)
            if ok and abs(w_new - w_pred) <= max(0.3 * abs(dz), 1e-10):
                u, w, th = u_new, w_new, th_new
                h = min(h * 1.5, step / length)
                continue
            h /= 2
            if h * length < min_step:
                raise ContinuationError(
                    f"continuation of z_{n},{j} ({parity.value}) stalled near theta={th}",
                    theta=th,
                )
    return w


def null_vector(z, theta, parity, *, offset=None, tol: float = 1e-8):
    """Unit null vector (p, q) of A(z, theta).

    Uses the larger row of 2 sin(pi z) A, which stays finite as z approaches
    an integer; the larger component is made real and positive.
    """
    parity = Parity.parse(parity)
    S = scaled_A_matrix(z, theta, parity, offset=offset)
    mp = _num.is_mp(z, theta)
    L = mpmath if mp else cmath
    n0 = abs(S[0, 0]) ** 2 + abs(S[0, 1]) ** 2
    n1 = abs(S[1, 0]) ** 2 + abs(S[1, 1]) ** 2
    a, b = (S[0, 0], S[0, 1]) if n0 >= n1 else (S[1, 0], S[1, 1])
    scale = max(n0, n1)
    if scale == 0:
        raise NotARootError("A vanishes identically")
    det = S[0, 0] * S[1, 1] - S[0, 1] * S[1, 0]
    if abs(det) > tol * scale:
        raise NotARootError(f"A(z={complex(z)}, theta={complex(theta)}) is nonsingular")
    p, q = -b, a
    nrm = L.sqrt(abs(p) ** 2 + abs(q) ** 2)
    p, q = p / nrm, q / nrm
    big = p if abs(p) >= abs(q) else q
    ph = abs(big) / big
    p, q = p * ph, q * ph
    if mp:
        return p, q
    return complex(p), complex(q)


def _special_family(parity, theta) -> ExponentFamily:
    j = 2 if parity is Parity.TONE else 1
    return ExponentFamily(parity, j, 1, theta, 1 + 0j, 0j, 1 + 0j, 0.0, 0j, True)


def limit_null_vector(n: int, j: int, parity, one=1.0, zero=0.0):
    """(p, q) of family (n, j) at theta = 1, where A is diagonal."""
    tone_p = (j == 1) == (n % 2 == 1)
    if Parity.parse(parity) is Parity.TENO:
        tone_p = not tone_p
    return (one, zero) if tone_p else (zero, one)


def z_of_theta(n: int, j: int, parity, theta: float, delta: float = 0.05,
               step: float = 1e-2, min_step: float = 1e-6) -> ExponentFamily:
    """Exponent family (n, j) at a real angle theta in (0, 2)."""
    parity = Parity.parse(parity)
    if not 0 < theta < 2:
        raise ValueError("theta must lie in (0, 2)")
    if n < 1 or j not in (1, 2):
        raise ValueError("invalid family index")
    if _is_special(n, j, parity):
        return _special_family(parity, theta)
    if theta == 1.0:
        p, q = limit_null_vector(n, j, parity, 1 + 0j, 0j)
        return ExponentFamily(parity, j, n, 1.0, complex(n), p, q, 0.0)
    for b in family_branch_points(n, j, parity):
        if abs(theta - b) < 1e-9:
            raise BranchPointError(
                f"theta={theta} is a branch point of z_{n},{j} ({parity.value})", theta=b
            )
    w = trace_exponent(n, j, parity, theta, delta, step, min_step)
    w, _, res = _newton(n, w, theta - 1, parity, j, tol=1e-15, maxit=6)
    p, q = null_vector(n + w, theta, parity, offset=(n, w))
    return ExponentFamily(parity, j, n, theta, n + w, p, q, res, w)


def family_indices(N: int, parity) -> list[tuple[int, int]]:
    """(n, j) for all families up to order N, special family included."""
    return [(n, j) for n in range(1, N + 1) for j in (1, 2)]


@functools.lru_cache(maxsize=256)
def _families_cached(theta, N, parity, delta):
    return tuple(z_of_theta(n, j, parity, theta, delta) for n, j in family_indices(N, parity))


def exponent_families(theta: float, N: int, parity, delta: float = 0.05) -> dict:
    """All families (n, j), n <= N, at a real angle, keyed by (n, j)."""
    parity = Parity.parse(parity)
    fams = _families_cached(float(theta), int(N), parity, float(delta))
    return {(f.n, f.j): f for f in fams}


def refine_family(fam: ExponentFamily, dps: int = 40) -> ExponentFamily:
    """Polish a family at higher precision with mpmath (returns mp values)."""
    with mpmath.workdps(dps + 10):
        theta = mpmath.mpf(fam.theta)
        if fam.special:
            one = mpmath.mpc(1)
            return replace(fam, theta=theta, z=one, p=mpmath.mpc(0), q=one, w=mpmath.mpc(0))
        w = mpmath.mpc(fam.w)
        eps = theta - 1
        tol = mpmath.mpf(10) ** (-(dps + 5))
        for _ in range(50):
            H, Hz, _ = _h_parts(fam.n, w, eps, fam.parity, fam.j, mpmath)
            dw = H / Hz
            w -= dw
            if abs(dw) < tol:
                break
        H = _h_parts(fam.n, w, eps, fam.parity, fam.j, mpmath)[0]
        p, q = null_vector(fam.n + w, theta, fam.parity, offset=(fam.n, w), tol=1e-8)
        return replace(fam, theta=theta, z=fam.n + w, p=p, q=q, w=w, residual=float(abs(H)))


def write_csv(families, path) -> None:
    cols = ["parity", "n", "j", "theta", "Re z", "Im z", "Re p", "Im p", "Re q", "Im q", "residual"]
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(cols)
        for f in families:
            z, p, q = complex(f.z), complex(f.p), complex(f.q)
            wr.writerow([
                f.parity.value, f.n, f.j, repr(float(f.theta)),
                repr(z.real), repr(z.imag), repr(p.real), repr(p.imag),
                repr(q.real), repr(q.imag), repr(float(f.residual)),
            ])
