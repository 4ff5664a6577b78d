import csv
import math

import mpmath
import numpy as np
import pytest

from stokes_corners.corner_analysis import A_matrix, Parity
from stokes_corners.exponent_solver import (
    BranchPointError,
    NotARootError,
    branch_points,
    exponent_families,
    family_branch_points,
    implicit_H,
    lambda_roots,
    null_vector,
    refine_family,
    write_csv,
    z_of_theta,
)

# roots at theta = 1/2 from mpmath findroot on the two implicit equations
ROOTS_HALF = {
    ("tone", 1, 1): 0.5444837367824639,
    ("tone", 2, 1): 1.62925737675957 - 0.2312505471151075j,
    ("tone", 3, 1): 1.62925737675957 + 0.2312505471151075j,
    ("teno", 2, 1): 0.9085291898460988,
    ("teno", 1, 2): 2.739593356324596 - 1.119024534342417j,
    ("teno", 2, 2): 2.739593356324596 + 1.119024534342417j,
    ("teno", 3, 1): 2.301327060714402 - 0.3158367455250936j,
}
LAMBDA_1 = 4.4934094579090641753


@pytest.mark.parametrize("key", sorted(ROOTS_HALF))
def test_roots_at_half(key):
    par, n, j = key
    fam = z_of_theta(n, j, par, 0.5)
    assert abs(fam.z - ROOTS_HALF[key]) < 1e-12
    assert abs(implicit_H(fam.z, 0.5, par, j)) < 1e-13


def test_special_families():
    for par, j in (("tone", 2), ("teno", 1)):
        fam = z_of_theta(1, j, par, 0.7)
        assert fam.special and fam.z == 1 and (fam.p, fam.q) == (0, 1)


def test_teno_is_reflected_tone():
    rng = np.random.default_rng(3)
    for _ in range(50):
        z = complex(rng.uniform(0, 5), rng.uniform(-2, 2))
        th = rng.uniform(0.05, 1.95)
        for j in (1, 2):
            a = implicit_H(z, th, "teno", j)
            b = -implicit_H(z, 2 - th, "tone", 3 - j)
            assert abs(a - b) < 1e-12 * max(1.0, abs(a))


@pytest.mark.parametrize("par", ["tone", "teno"])
def test_continuous_through_flat_angle(par):
    for n in range(1, 5):
        for j in (1, 2):
            at1 = z_of_theta(n, j, par, 1.0)
            assert at1.z == n
            for d in (1e-6, -1e-6):
                near = z_of_theta(n, j, par, 1 + d)
                assert abs(near.z - n) < 50 * n * 1e-6
                assert abs(near.p - at1.p) < 1e-4 and abs(near.q - at1.q) < 1e-4


@pytest.mark.parametrize("par", ["tone", "teno"])
@pytest.mark.parametrize("theta", [0.3, 0.5, 1.4, 1.8])
def test_null_vectors(par, theta):
    for fam in exponent_families(theta, 5, par).values():
        v = np.array([fam.p, fam.q])
        assert abs(np.linalg.norm(v) - 1) < 1e-14
        if fam.special or abs(fam.z - round(fam.z.real)) < 1e-6:
            continue
        r = A_matrix(fam.z, theta, par) @ v
        assert np.abs(r).max() < 1e-10 * np.abs(A_matrix(fam.z, theta, par)).max()


def test_null_vector_rejects_non_root():
    with pytest.raises(NotARootError):
        null_vector(0.3 + 0.1j, 0.5, "tone")


def test_conjugate_pairs_below_branch_point():
    fams = exponent_families(0.5, 4, "tone")
    assert abs(fams[2, 1].z - fams[3, 1].z.conjugate()) < 1e-13


def test_branch_point_collision():
    b = family_branch_points(2, 1, "tone")[1]
    assert b in family_branch_points(3, 1, "tone")
    hi = [z_of_theta(n, 1, "tone", b + 1e-5).z for n in (2, 3)]
    lo = [z_of_theta(n, 1, "tone", b - 1e-5).z for n in (2, 3)]
    assert all(abs(z.imag) < 1e-12 for z in hi)
    assert abs(lo[0] - lo[1].conjugate()) < 1e-12 and abs(lo[0].imag) > 0
    assert abs(hi[0] - hi[1]) < 0.05 and abs(lo[0] - lo[1]) < 0.05
    with pytest.raises(BranchPointError):
        z_of_theta(2, 1, "tone", b)


@pytest.mark.parametrize("N", [2, 4, 6])
@pytest.mark.parametrize("par", ["tone", "teno"])
def test_branch_point_count(N, par):
    tab = branch_points(N, par)
    assert len(tab) == 3 * N - 2
    assert max(tab.residuals) < 1e-14
    assert all(0 < t < 2 for t in tab.theta_values)
    assert list(tab.theta_values) == sorted(tab.theta_values)


def test_lambda_roots():
    lam = lambda_roots(6)
    assert lam[0] == pytest.approx(LAMBDA_1, abs=1e-15)
    for j, x in enumerate(lam, start=1):
        assert j * math.pi + math.pi / 4 < x < j * math.pi + math.pi / 2
    with mpmath.workdps(30):
        for x in lambda_roots(20, dps=30):
            assert abs(mpmath.tan(x) - x) < mpmath.mpf(10) ** -20
    with pytest.raises(ValueError):
        lambda_roots(0)


def test_refine_family_mp():
    fam = z_of_theta(2, 1, "tone", 0.5)
    ref = refine_family(fam, dps=40)
    assert abs(complex(ref.z) - fam.z) < 1e-14
    assert ref.residual < 1e-35


def test_input_validation():
    with pytest.raises(ValueError):
        z_of_theta(1, 1, "tone", 2.0)
    with pytest.raises(ValueError):
        z_of_theta(0, 1, "tone", 0.5)
    with pytest.raises(ValueError):
        implicit_H(1.0, 0.5, "tone", 3)
    with pytest.raises(ValueError):
        Parity.parse("even")


def test_write_csv(tmp_path):
    fams = list(exponent_families(0.5, 3, "teno").values())
    path = tmp_path / "z.csv"
    write_csv(fams, path)
    rows = list(csv.DictReader(open(path)))
    assert len(rows) == len(fams)
    r = rows[1]
    assert complex(float(r["Re z"]), float(r["Im z"])) == fams[1].z
