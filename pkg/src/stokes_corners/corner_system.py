"""Corner representation on a wedge: the matrix B(theta) and its inverse.

Coefficient layout (length 2N+2):
    x[0], x[1]        constant density (1, 0) and (0, 1)
    x[2n], x[2n+1]    families (n, 1) and (n, 2), density (p, q) t^z
Rows of B are the t^ell Taylor coefficients of the wedge velocity,
(h_tau, h_nu) for ell = 0..N.
"""

from __future__ import annotations

import csv
import math
from contextlib import nullcontext
from dataclasses import dataclass, field

import mpmath
import numpy as np

from . import _num
from .corner_analysis import F0_matrix, F1_vector, Parity, smooth_coeffs
from .exponent_solver import ExponentFamily, exponent_families, limit_null_vector, refine_family

LIMIT_SWITCH = 1e-4


class DetBZeroError(ArithmeticError):
    """B(theta) is numerically singular."""

    def __init__(self, message: str, theta=None):
        super().__init__(message)
        self.theta = theta


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested accuracy."""


@dataclass
class BMatrix:
    parity: Parity
    N: int
    theta: float
    matrix: np.ndarray  # (2N+2, 2N+2), complex or mpmath objects
    families: dict = field(default_factory=dict)
    is_limit: bool = False

    @property
    def is_mp(self) -> bool:
        return self.matrix.dtype == object

    def block(self, ell: int, n: int) -> np.ndarray:
        return self.matrix[2 * ell : 2 * ell + 2, 2 * n : 2 * n + 2]

    @property
    def blocks(self) -> np.ndarray:
        n = self.N + 1
        return self.matrix.reshape(n, 2, n, 2).transpose(0, 2, 1, 3)

    def as_complex(self) -> np.ndarray:
        return np.array(self.matrix, dtype=complex)

    @property
    def det(self) -> complex:
        if self.is_mp:
            return mpmath.det(mpmath.matrix(self.matrix.tolist()))
        return complex(np.linalg.det(self.matrix))

    @property
    def condition(self) -> float:
        return float(np.linalg.cond(self.as_complex()))

    def column_family(self, col: int):
        """(n, j) of a column, or None for the constant columns."""
        n, j = divmod(col, 2)
        return None if n == 0 else (n, j + 1)


def _special_column(parity: Parity) -> int:
    return 3 if parity is Parity.TONE else 2


def B_limit(N: int, parity, mp: bool = False) -> np.ndarray:
    """B at theta = 1: -I/2 on blocks of one parity, antidiagonal -1/2 on the other."""
    parity = Parity.parse(parity)
    half = mpmath.mpf(1) / 2 if mp else 0.5
    B = np.zeros((2 * N + 2, 2 * N + 2), dtype=object if mp else complex)
    if mp:
        B[:] = mpmath.mpc(0)
    for ell in range(N + 1):
        i = 2 * ell
        if parity is Parity.TONE:
            antidiag = ell > 0 and ell % 2 == 0
        else:
            antidiag = ell % 2 == 1
        if antidiag:
            B[i, i + 1] = B[i + 1, i] = -half
        else:
            B[i, i] = B[i + 1, i + 1] = -half
    return B


def _families_for(theta, N, parity, dps):
    fams = exponent_families(float(theta), N, parity)
    if dps is None:
        return fams
    return {k: refine_family(f, dps) for k, f in fams.items()}


def build_B(theta, N: int, parity, *, dps: int | None = None, use_limit: bool = True) -> BMatrix:
    """Assemble B(theta).  With ``dps`` all entries are mpmath numbers.

    The caller should hold ``mpmath.workdps(dps)`` while using the result.
    """
    parity = Parity.parse(parity)
    if N < 1:
        raise ValueError("N must be >= 1")
    if not 0 < float(theta) < 2:
        raise ValueError("theta must lie in (0, 2)")
    mp = dps is not None
    ctx = mpmath.workdps(dps) if mp else nullcontext()
    with ctx:
        if use_limit and abs(float(theta) - 1) < LIMIT_SWITCH:
            return BMatrix(parity, N, float(theta), B_limit(N, parity, mp), {}, True)
        th = mpmath.mpf(theta) if mp else float(theta)
        fams = _families_for(theta, N, parity, dps)
        s = parity.sign
        size = 2 * N + 2
        B = np.zeros((size, size), dtype=object if mp else complex)
        if mp:
            B[:] = mpmath.mpc(0)
        B[0:2, 0:2] = F0_matrix(th, parity)
        zero = mpmath.mpf(0) if mp else 0.0
        for ell in range(1, N + 1):
            B[2 * ell : 2 * ell + 2, 0:2] = s * smooth_coeffs(ell, zero, th, offset=(0, zero))
        special = _special_column(parity)
        for n in range(1, N + 1):
            for j in (1, 2):
                col = 2 * n + j - 1
                f = fams[(n, j)]
                if col == special:
                    B[2:4, col] = F1_vector(th, parity)
                    for ell in range(2, N + 1):
                        B[2 * ell : 2 * ell + 2, col] = s * smooth_coeffs(
                            ell, 1 + zero, th, offset=(1, zero)
                        )[:, 1]
                    continue
                pq = np.array([f.p, f.q], dtype=object if mp else complex)
                for ell in range(1, N + 1):
                    F = s * smooth_coeffs(ell, f.z, th, offset=(f.n, f.w))
                    B[2 * ell : 2 * ell + 2, col] = F.dot(pq)
        return BMatrix(parity, N, float(theta), B, fams, False)


def _row_scale(M) -> float:
    return float(np.prod([max(np.linalg.norm(r), 1e-300) for r in M]))


def solve_corner_coeffs(B: BMatrix, taylor, det_floor: float = 1e-12):
    """Coefficients x with B x = taylor; refuses nearly singular B."""
    taylor = list(taylor)
    if len(taylor) != B.matrix.shape[0]:
        raise ValueError(f"expected {B.matrix.shape[0]} Taylor values, got {len(taylor)}")
    Mc = B.as_complex()
    rel = abs(np.linalg.det(Mc)) / _row_scale(Mc)
    if rel < det_floor:
        raise DetBZeroError(
            f"B is nearly singular at theta={B.theta} (relative det {rel:.2e}); "
            "theta is close to a zero of det B",
            theta=B.theta,
        )
    if B.is_mp:
        x = mpmath.lu_solve(mpmath.matrix(B.matrix.tolist()), mpmath.matrix(taylor))
        return np.array([x[i] for i in range(len(taylor))], dtype=object)
    return np.linalg.solve(Mc, np.asarray(taylor, dtype=complex))


# --------------------------------------------------------------------------
# densities
# --------------------------------------------------------------------------

def density_terms(B: BMatrix):
    """List of (column, z, (p, q)) describing every basis density on t > 0."""
    mp = B.is_mp
    one = mpmath.mpf(1) if mp else 1.0
    zero = 0 * one
    terms = [(0, zero, (one, zero)), (1, zero, (zero, one))]
    special = _special_column(B.parity)
    for n in range(1, B.N + 1):
        for j in (1, 2):
            col = 2 * n + j - 1
            if col == special:
                terms.append((col, one, (zero, one)))
            elif B.is_limit:
                terms.append((col, n + zero, _limit_pq(n, j, B.parity, one, zero)))
            else:
                f = B.families[(n, j)]
                terms.append((col, f.z, (f.p, f.q)))
    return terms


def _limit_pq(n, j, parity, one, zero):
    return limit_null_vector(n, j, parity, one, zero)


def corner_density(B: BMatrix, coeffs, t):
    """Density (mu_tau, mu_nu) at t in (0, 1] from corner coefficients."""
    L = mpmath if B.is_mp else None
    mu = [0, 0]
    for col, z, (p, q) in density_terms(B):
        c = coeffs[col]
        if c == 0:
            continue
        tz = (L.power(t, z) if L else complex(t) ** z) if z != 0 else 1
        mu[0] += c * p * tz
        mu[1] += c * q * tz
    return mu


# --------------------------------------------------------------------------
# real basis
# --------------------------------------------------------------------------

@dataclass
class RealCornerBasis:
    parity: Parity
    theta: float
    N: int
    exponents: list  # (alpha, beta, p, q) per complex member kept
    n_functions: int

    def evaluate(self, t) -> np.ndarray:
        """Real basis densities at signed t, shape (len(t), n_functions, 2)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        at = np.abs(t)
        sg = np.sign(t)
        odd = (sg, np.ones_like(t)) if self.parity is Parity.TONE else (np.ones_like(t), sg)
        cols = [
            np.stack([odd[0], 0 * t], axis=-1),
            np.stack([0 * t, odd[1]], axis=-1),
        ]
        for alpha, beta, p, q in self.exponents:
            with np.errstate(divide="ignore", invalid="ignore"):
                mag = np.where(at > 0, at**alpha, 0.0)
                lg = np.where(at > 0, np.log(np.where(at > 0, at, 1.0)), 0.0)
            ph = np.exp(1j * beta * lg)
            vals = np.stack([odd[0] * p * mag * ph, odd[1] * q * mag * ph], axis=-1)
            cols.append(vals.real)
            if abs(beta) > 0 or abs(complex(p).imag) > 0 or abs(complex(q).imag) > 0:
                cols.append(vals.imag)
        return np.stack(cols, axis=1)


def real_basis(theta: float, N: int, parity) -> RealCornerBasis:
    """Real-valued corner basis: constants plus Re/Im of every family,
    with conjugate duplicates dropped."""
    parity = Parity.parse(parity)
    fams = exponent_families(float(theta), N, parity)
    kept, seen = [], []
    n_fun = 2
    for key in sorted(fams):
        f = fams[key]
        z = complex(f.z)
        if any(abs(z.conjugate() - s) < 1e-10 for s in seen):
            continue
        seen.append(z)
        kept.append((z.real, z.imag, complex(f.p), complex(f.q)))
        is_real = z.imag == 0 and complex(f.p).imag == 0 and complex(f.q).imag == 0
        n_fun += 1 if is_real else 2
    return RealCornerBasis(parity, float(theta), N, kept, n_fun)


# --------------------------------------------------------------------------
# wedge residual oracle
# --------------------------------------------------------------------------

def _parity_kernel_mp(s, t, sn, cs):
    d = s * s + t * t - 2 * s * t * cs
    c = 1 / (mpmath.pi * d * d)
    return (
        c * t * sn * (s - t * cs) * (t - s * cs),
        c * t * t * sn * sn * (t - s * cs),
        c * s * t * sn * sn * (s - t * cs),
        c * s * t * t * sn**3,
    )


def _kernel_series(t, sn, cs, M: int):
    """Coefficients of k_ij(s, t) = sum_m K[m] s^m, valid for |s| < t."""
    # 1/(1 - 2 x r + r^2) = sum U_m(x) r^m  (Chebyshev U), r = s/t
    U = [mpmath.mpf(1), 2 * cs]
    while len(U) < M + 4:
        U.append(2 * cs * U[-1] - U[-2])
    # 1/D^2 = t^-4 sum_m e_m (s/t)^m
    e = [mpmath.fsum(U[i] * U[m - i] for i in range(m + 1)) for m in range(M + 4)]
    inv = [e[m] / t ** (m + 4) for m in range(M + 4)]

    def times(poly):  # poly in s (low degree first) times 1/D^2, truncated
        return [
            mpmath.fsum(poly[d] * inv[m - d] for d in range(len(poly)) if m - d >= 0)
            / mpmath.pi
            for m in range(M)
        ]

    # numerators of k11, k12, k21, k22 as polynomials in s
    k11 = times([-t * t * t * sn * cs, t * t * sn * (1 + cs * cs), -t * sn * cs])
    k12 = times([t**3 * sn * sn, -t * t * sn * sn * cs])
    k21 = times([mpmath.mpf(0), -t * t * sn * sn * cs, t * sn * sn])
    k22 = times([mpmath.mpf(0), t * t * sn**3])
    return k11, k12, k21, k22


_GL_CACHE: dict = {}


def _gl_nodes(degree: int, prec: int):
    key = (degree, prec)
    if key not in _GL_CACHE:
        from mpmath.calculus.quadrature import GaussLegendre

        _GL_CACHE[key] = GaussLegendre(mpmath.mp).calc_nodes(degree, prec)
    return _GL_CACHE[key]


def _far_breakpoints(t):
    pts = [t / 2, 3 * t / 4, t, 5 * t / 4, 3 * t / 2, 2 * t]
    b = 2 * t
    while b < 1:
        b *= 2
        pts.append(min(b, mpmath.mpf(1)))
    return [x for x in pts if x <= 1]


def _near_integrals(t, terms, sn, cs):
    """int_0^{t/2} k_ij(s,t) s^z ds from the kernel's power series in s."""
    M = int(mpmath.mp.dps * 3.33 * 1.1) + 20
    ser = _kernel_series(t, sn, cs, M)
    delta = t / 2
    dm = [delta**m for m in range(M)]
    scaled = [[c[m] * dm[m] for m in range(M)] for c in ser]
    out = []
    for z in terms:
        inv = [1 / (z + m + 1) for m in range(M)]
        lead = delta ** (z + 1)
        v = [lead * mpmath.fdot(sc, inv) for sc in scaled]
        out.append([[v[0], v[1]], [v[2], v[3]]])
    return out


def _far_integrals(t, terms, sn, cs, degree):
    """int_{t/2}^1 k_ij(s,t) s^z ds by composite Gauss-Legendre."""
    out = [[[0, 0], [0, 0]] for _ in terms]
    nodes = _gl_nodes(degree, mpmath.mp.prec)
    bps = _far_breakpoints(t)
    for a, b in zip(bps[:-1], bps[1:]):
        h, c = (b - a) / 2, (b + a) / 2
        for x, w in nodes:
            s = c + h * x
            k = _parity_kernel_mp(s, t, sn, cs)
            wk = [w * h * kk for kk in k]
            ls = mpmath.log(s)
            for acc, z in zip(out, terms):
                sz = mpmath.exp(z * ls) if z != 0 else 1
                acc[0][0] += wk[0] * sz
                acc[0][1] += wk[1] * sz
                acc[1][0] += wk[2] * sz
                acc[1][1] += wk[3] * sz
    return out


def _add(a, b):
    return [[a[i][j] + b[i][j] for j in (0, 1)] for i in (0, 1)]


def wedge_moments(theta, terms, t, *, dps: int = 30, check: bool = True):
    """Brute-force int_0^1 [k_ij](s, t) s^z ds for each exponent z in ``terms``.

    [0, t/2] uses the exact power series of the kernel in s (which
    integrates s^z termwise); [t/2, 1] uses composite Gauss-Legendre graded
    around s = t.  With ``check`` a second, coarser rule estimates the error.
    """
    with mpmath.workdps(dps + 5):
        th = mpmath.mpf(theta)
        t = mpmath.mpf(t)
        sn, cs = mpmath.sinpi(th), mpmath.cospi(th)
        zs = [mpmath.mpmathify(z) for z in terms]
        near = _near_integrals(t, zs, sn, cs)
        fine = [_add(a, b) for a, b in zip(near, _far_integrals(t, zs, sn, cs, 5))]
        if check:
            coarse = [_add(a, b) for a, b in zip(near, _far_integrals(t, zs, sn, cs, 4))]
            tol = mpmath.mpf(10) ** (-(dps - 10))
            for k, (f, c) in enumerate(zip(fine, coarse)):
                err = max(abs(f[i][j] - c[i][j]) for i in (0, 1) for j in (0, 1))
                scale = max(1, max(abs(f[i][j]) for i in (0, 1) for j in (0, 1)))
                if err > tol * scale:
                    raise QuadratureError(
                        f"wedge quadrature for z={mpmath.nstr(zs[k], 6)} at t={mpmath.nstr(t, 4)}: "
                        f"estimated error {mpmath.nstr(err, 3)}"
                    )
        return fine


def wedge_velocity(theta, parity, terms, t, *, dps: int = 30):
    """Wedge velocity -mu(t)/2 +- int_0^1 [k_ij] mu ds for power densities.

    ``terms`` is a list of (z, (p, q)) meaning mu(s) = (p, q) s^z; one
    (h_tau, h_nu) pair is returned per term.
    """
    parity = Parity.parse(parity)
    sg = parity.sign
    mom = wedge_moments(theta, [z for z, _ in terms], t, dps=dps)
    with mpmath.workdps(dps + 5):
        t = mpmath.mpf(t)
        out = []
        for (z, (p, q)), m in zip(terms, mom):
            tz = mpmath.power(t, z) if z != 0 else 1
            out.append((
                -p * tz / 2 + sg * (m[0][0] * p + m[0][1] * q),
                -q * tz / 2 + sg * (m[1][0] * p + m[1][1] * q),
            ))
        return out


def wedge_residual(theta, N: int, parity, coeffs, rhs_taylor, t_grid, *, B: BMatrix | None = None,
                   dps: int = 40):
    """Pointwise |h(t) - sum_ell rhs_ell t^ell| for the corner density given by ``coeffs``."""
    parity = Parity.parse(parity)
    if any(not 0 < float(t) <= 0.5 for t in t_grid):
        raise ValueError("t_grid must lie in (0, 0.5]")
    with mpmath.workdps(dps):
        if B is None:
            B = build_B(theta, N, parity, dps=dps)
        coeffs = [mpmath.mpmathify(c) for c in coeffs]
        rhs = [mpmath.mpmathify(r) for r in rhs_taylor]
        terms = [(z, pq) for _, z, pq in density_terms(B)]
        cols = [col for col, _, _ in density_terms(B)]
        out = []
        for t in t_grid:
            hs = wedge_velocity(theta, parity, terms, t, dps=dps)
            tm = mpmath.mpf(t)
            h0 = mpmath.fsum(coeffs[c] * h[0] for c, h in zip(cols, hs))
            h1 = mpmath.fsum(coeffs[c] * h[1] for c, h in zip(cols, hs))
            h0 -= mpmath.fsum(rhs[2 * ell] * tm**ell for ell in range(N + 1))
            h1 -= mpmath.fsum(rhs[2 * ell + 1] * tm**ell for ell in range(N + 1))
            out.append(float(mpmath.sqrt(abs(h0) ** 2 + abs(h1) ** 2)))
    return np.array(out)


def write_csv(B: BMatrix, path) -> None:
    M = B.as_complex()
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["# parity", B.parity.value, "N", B.N, "theta", repr(B.theta),
                     "det_re", repr(complex(B.det).real), "det_im", repr(complex(B.det).imag),
                     "cond", repr(B.condition)])
        wr.writerow(["row", "col", "Re", "Im"])
        for i in range(M.shape[0]):
            for j in range(M.shape[1]):
                v = complex(M[i, j])
                wr.writerow([i, j, repr(v.real), repr(v.imag)])
