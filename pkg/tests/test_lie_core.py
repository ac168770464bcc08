import math
from fractions import Fraction
from itertools import product

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pathgroup.errors import BranchError, CutLocusError, InvalidDimensionError
from pathgroup.lie_core import (
    DiagonalEndpoint,
    ad_matrix,
    adjoint_matrix,
    algebra,
    bracket,
    dim_to_n,
    enumerate_geodesics,
    from_matrix,
    geodesic_energy,
    group_exp,
    group_log,
    is_group_point,
    log_derivative,
    phi_matrix,
    polar_project,
    su2_geodesic,
    to_matrix,
)

coef3 = arrays(np.float64, 3, elements=st.floats(-2.0, 2.0))
coef8 = arrays(np.float64, 8, elements=st.floats(-1.0, 1.0))


@pytest.mark.parametrize("n", [2, 3, 4])
def test_basis_orthonormal_and_skew(n):
    b = algebra(n).basis
    gram = np.einsum("aij,bij->ab", b, b.conj()).real
    assert np.allclose(gram, np.eye(n * n - 1), atol=1e-14)
    assert np.allclose(b + np.swapaxes(b.conj(), 1, 2), 0)
    assert np.allclose(np.trace(b, axis1=1, axis2=2), 0)


def test_bad_dimension():
    with pytest.raises(InvalidDimensionError):
        algebra(1)
    with pytest.raises(InvalidDimensionError):
        dim_to_n(5)


@given(coef8, coef8, coef8)
def test_bracket_jacobi_su3(a, b, c):
    jac = bracket(a, bracket(b, c)) + bracket(b, bracket(c, a)) + bracket(c, bracket(a, b))
    assert np.max(np.abs(jac)) < 1e-12


@given(coef3, coef3)
def test_bracket_matches_commutator(a, b):
    A, B = to_matrix(a), to_matrix(b)
    assert np.allclose(to_matrix(bracket(a, b)), A @ B - B @ A, atol=1e-12)
    assert np.allclose(ad_matrix(a) @ b, bracket(a, b), atol=1e-12)


@given(coef3)
def test_exp_su2_matches_expm(v):
    assert np.allclose(group_exp(v), scipy.linalg.expm(to_matrix(v)), atol=1e-12)


@given(coef8)
def test_exp_su3_matches_expm_and_is_group(v):
    x = group_exp(v)
    assert np.allclose(x, scipy.linalg.expm(to_matrix(v)), atol=1e-11)
    assert is_group_point(x)


@given(arrays(np.float64, 3, elements=st.floats(-1.5, 1.5)))
def test_log_inverts_exp_su2(v):
    assert np.allclose(group_log(group_exp(v)), v, atol=1e-9)


@given(arrays(np.float64, 8, elements=st.floats(-0.6, 0.6)))
def test_log_inverts_exp_su3(v):
    assert np.allclose(group_log(group_exp(v)), v, atol=1e-9)


def test_log_branch_cut():
    with pytest.raises(BranchError):
        group_log(-np.eye(2, dtype=complex))


@given(coef3)
def test_adjoint_is_exp_of_ad(v):
    assert np.allclose(adjoint_matrix(group_exp(v)), scipy.linalg.expm(ad_matrix(v)), atol=1e-11)


@given(coef8)
def test_adjoint_orthogonal(v):
    a = adjoint_matrix(group_exp(v))
    assert np.allclose(a @ a.T, np.eye(8), atol=1e-12)


@pytest.mark.parametrize("d", [3, 8])
def test_phi_is_differential_of_exp(d):
    r = np.random.default_rng(d)
    v, h = r.standard_normal(d), r.standard_normal(d)
    eps = 1e-6
    fd = (group_exp(v + eps * h) - group_exp(v - eps * h)) / (2 * eps)
    pred = to_matrix(phi_matrix(v) @ h) @ group_exp(v)
    assert np.max(np.abs(fd - pred)) < 1e-8


def test_phi_small_argument_branch():
    v = np.array([1e-6, -2e-6, 3e-7])
    assert np.allclose(phi_matrix(v), np.eye(3) + 0.5 * ad_matrix(v), atol=1e-12)


def test_log_derivative_inverts_phi():
    v = np.array([0.3, -0.4, 0.5])
    assert np.allclose(log_derivative(group_exp(v)) @ phi_matrix(v), np.eye(3), atol=1e-12)


def test_polar_project_fixes_group_and_reports_defect():
    x = group_exp(np.array([0.2, 0.1, -0.4]))
    q, defect = polar_project(x)
    assert np.allclose(q, x) and defect < 1e-14
    q, defect = polar_project(1.01 * x)
    assert np.allclose(q, x, atol=1e-12)
    assert defect == pytest.approx(0.01 * math.sqrt(2), rel=1e-9)


# ------------------------------------------------------------- geodesics


def test_xi0_norm_and_energy():
    xi = su2_geodesic(0.15, 0)
    # frozen: 2 pi * 0.15 * sqrt(2)
    assert np.linalg.norm(xi) == pytest.approx(1.3328648814475097, rel=1e-14)
    assert geodesic_energy(xi) == pytest.approx(0.5 * (2 * math.pi * 0.15) ** 2 * 2)


@pytest.mark.parametrize("k", [-2, -1, 0, 1, 2])
def test_su2_geodesics_reach_endpoint(k):
    a = DiagonalEndpoint.su2(Fraction(3, 20)).matrix()
    assert np.allclose(group_exp(su2_geodesic(0.15, k)), a, atol=1e-12)


def test_enumerate_su2_counts():
    ep = DiagonalEndpoint.su2(Fraction(3, 20))
    assert len(enumerate_geodesics(ep, 2 * math.pi * 0.4)) == 1
    found = enumerate_geodesics(ep, 2 * math.pi * 1.5)
    assert len(found) == 2
    assert np.allclose(found[1], su2_geodesic(0.15, -1))
    assert len(enumerate_geodesics(ep, 2 * math.pi * 1.7)) == 3
    assert enumerate_geodesics(ep, 0.0) == []


def _brute_force(thetas, bound):
    """Independent lattice scan over all k with |k_i| <= 4."""
    out = []
    n = len(thetas)
    for ks in product(range(-4, 5), repeat=n):
        if sum(ks):
            continue
        ph = np.array([float(t) for t in thetas]) + np.array(ks)
        if 2 * math.pi * np.linalg.norm(ph) <= bound:
            out.append(ks)
    return out


def test_enumerate_su3_against_lattice_scan():
    thetas = (Fraction(1, 10), Fraction(1, 5), Fraction(-3, 10))
    ep = DiagonalEndpoint(thetas)
    bound = 2 * math.pi * 1.6
    found = enumerate_geodesics(ep, bound)
    assert len(found) == len(_brute_force(thetas, bound))
    norms = [np.linalg.norm(x) for x in found]
    assert norms == sorted(norms)
    for xi in found:
        assert np.allclose(group_exp(xi), ep.matrix(), atol=1e-10)


def test_cut_locus_rejected():
    with pytest.raises(CutLocusError):
        enumerate_geodesics(DiagonalEndpoint.su2(Fraction(1, 2)), 10.0)
    assert not DiagonalEndpoint((Fraction(1, 3), Fraction(1, 3), Fraction(-2, 3))).regular


def test_from_matrix_roundtrip(rng):
    v = rng.standard_normal((5, 15))
    assert np.allclose(from_matrix(to_matrix(v)), v)
