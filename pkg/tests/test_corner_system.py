import csv

import mpmath
import numpy as np
import pytest

from stokes_corners.corner_analysis import F0_matrix, Parity
from stokes_corners.corner_system import (
    B_limit,
    BMatrix,
    DetBZeroError,
    build_B,
    corner_density,
    density_terms,
    real_basis,
    solve_corner_coeffs,
    wedge_moments,
    wedge_residual,
    wedge_velocity,
    write_csv,
)

M_REF = np.array([
    [complex("0.09063677268546049115-0.023848191164209674335j"),
     complex("0.048031603035651809165-0.017482325114300195317j")],
    [complex("0.048560911321717574042-0.0085945871475773271818j"),
     complex("0.020458203117863243186-0.0049022054068911913198j")],
])

PARITIES = ["tone", "teno"]


@pytest.mark.parametrize("par", PARITIES)
def test_shape_and_zero_blocks(par):
    B = build_B(0.6, 5, par)
    assert B.matrix.shape == (12, 12)
    for n in range(1, 6):
        assert np.all(B.block(0, n) == 0)
    np.testing.assert_array_equal(B.blocks[2, 3], B.block(2, 3))
    assert B.column_family(0) is None and B.column_family(7) == (3, 2)


@pytest.mark.parametrize("par", PARITIES)
def test_limit_pattern(par):
    L = B_limit(4, par)
    assert np.all(np.abs(np.abs(L).sum(axis=1) - 0.5) == 0)
    B = build_B(1 + 5e-5, 4, par)
    assert B.is_limit
    np.testing.assert_array_equal(B.matrix, L)
    d = complex(B.det)
    assert abs(abs(d) - 0.5 ** 10) < 1e-18


@pytest.mark.parametrize("par", PARITIES)
def test_converges_to_limit(par):
    L = B_limit(6, par)
    errs = [np.abs(build_B(1 + e, 6, par, use_limit=False).matrix - L).max() for e in (1e-2, 1e-3, 1e-4)]
    assert errs[1] < errs[0] / 5 and errs[2] < errs[1] / 5


@pytest.mark.parametrize("par", PARITIES)
def test_mp_matches_double(par):
    with mpmath.workdps(30):
        Bm = build_B(0.5, 4, par, dps=30)
        assert Bm.is_mp
        Bd = build_B(0.5, 4, par)
        np.testing.assert_allclose(Bm.as_complex(), Bd.matrix, atol=1e-13)


def test_wedge_moments_match_closed_form():
    m = wedge_moments(0.7, [0.4 + 0.2j], 0.3, dps=25)[0]
    got = np.array([[complex(m[i][j]) for j in (0, 1)] for i in (0, 1)])
    assert np.abs(got - M_REF).max() < 1e-14


@pytest.mark.parametrize("par", PARITIES)
def test_constant_columns_against_wedge(par):
    one, zero = mpmath.mpf(1), mpmath.mpf(0)
    terms = [(zero, (one, zero)), (zero, (zero, one))]
    h = wedge_velocity(0.5, par, terms, mpmath.mpf("1e-12"), dps=30)
    got = np.array([[complex(h[c][r]) for c in (0, 1)] for r in (0, 1)])
    np.testing.assert_allclose(got, F0_matrix(0.5, par), atol=1e-10)


@pytest.mark.parametrize("par", PARITIES)
def test_solve_and_density(par):
    B = build_B(0.4, 4, par)
    rng = np.random.default_rng(1)
    rhs = rng.normal(size=10)
    x = solve_corner_coeffs(B, rhs)
    assert np.abs(B.matrix @ x - rhs).max() < 1e-12
    assert len(density_terms(B)) == 10
    mu = corner_density(B, x, 1e-300)
    np.testing.assert_allclose(np.array(mu, dtype=complex), x[:2], atol=1e-12)
    with pytest.raises(ValueError):
        solve_corner_coeffs(B, rhs[:-1])


def test_singular_B_rejected():
    M = np.eye(6, dtype=complex)
    M[5, 4], M[5, 5] = 1.0, 1e-14  # row 5 almost repeats row 4
    M[4, 5] = 0.0
    M[4, 4] = 1.0
    M[5] = M[4] + 1e-14 * np.eye(6)[5]
    B = BMatrix(Parity.TONE, 2, 0.5, M)
    with pytest.raises(DetBZeroError):
        solve_corner_coeffs(B, np.ones(6))


@pytest.mark.parametrize("par", PARITIES)
@pytest.mark.parametrize("theta", [0.3, 0.5, 1.5])
def test_real_basis_dimension(par, theta):
    # a complex family whose conjugate partner lies beyond N contributes Re and Im
    rb = real_basis(theta, 5, par)
    assert 12 <= rb.n_functions <= 22
    v = rb.evaluate(np.array([-0.3, 0.2]))
    assert v.shape == (2, rb.n_functions, 2) and np.all(np.isfinite(v))


def test_residual_small_at_coarse_order():
    with mpmath.workdps(30):
        B = build_B(0.5, 2, "tone", dps=30)
        rhs = [mpmath.mpf(1), 0, 0, mpmath.mpf(1), 0, 0]
        c = solve_corner_coeffs(B, rhs)
        t = np.array([1e-3, 1e-2])
        r = wedge_residual(0.5, 2, "tone", c, rhs, t, B=B, dps=30)
    assert r[0] < r[1] and r[0] < 1e-6
    with pytest.raises(ValueError):
        wedge_residual(0.5, 2, "tone", c, rhs, [0.7])


def test_write_csv(tmp_path):
    B = build_B(0.5, 3, "teno")
    p = tmp_path / "b.csv"
    write_csv(B, p)
    rows = list(csv.reader(open(p)))
    assert rows[0][1] == "teno" and len(rows) == 2 + 64
    i, j = 5, 6
    r = rows[2 + 8 * i + j]
    assert complex(float(r[2]), float(r[3])) == B.matrix[i, j]


def test_invalid():
    with pytest.raises(ValueError):
        build_B(2.5, 3, "tone")
    with pytest.raises(ValueError):
        build_B(0.5, 0, "tone")
