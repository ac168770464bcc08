import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from pathgroup.errors import DegeneracyError, PreconditionError
from pathgroup.lie_core import su2_geodesic
from pathgroup.ou_spectrum import (
    ModeSpec,
    inner_product,
    lp_norm,
    measure_identity_check,
    mode_spec_from_hessian,
    normalization,
    ou_eigenfunction,
    ou_eigenvalue,
    ou_spectrum_below,
    verify_generator_1d,
)
from pathgroup.spectral_sets import lambda_set

zeta = st.floats(-1.9, 1.5).filter(lambda z: abs(1 + z) > 0.05)


def test_mode_spec_orders_negative_first():
    s = ModeSpec((0.25, -1.3, 0.1), 2.0)
    assert s.zetas == (-1.3, 0.25, 0.1) and s.N == 1
    assert np.allclose(s.K, [0.3, 1.25, 1.1])
    with pytest.raises(DegeneracyError):
        ModeSpec((-1.0,), 1.0)
    with pytest.raises(PreconditionError):
        ModeSpec((0.1,), 0.0)


def test_eigenvalue_formula():
    s = ModeSpec((-1.3, 0.25), 2.0)
    assert ou_eigenvalue(s, (0, 0)) == pytest.approx(2.0 * 0.3)
    assert ou_eigenvalue(s, (2, 1)) == pytest.approx(2.0 * (0.3 + 2 * 0.3 + 1.25))


def test_normalization_closed_form():
    assert normalization(1.0) == pytest.approx(1.0)
    K = np.array([0.3, 2.0])
    assert np.allclose(normalization(K) ** 4, K * np.exp(1 - K))


@pytest.mark.parametrize("z", [-1.4, 0.3])
def test_eigenfunction_norm_by_adaptive_quadrature(z):
    lam = 3.0
    s = ModeSpec((z,), lam)

    def dens(x):
        return math.sqrt(lam / (2 * math.pi)) * math.exp(-0.5 * lam * x * x - 0.5 * lam * z * (x * x - 1 / lam))

    for n in range(3):
        val, _ = quad(lambda x: ou_eigenfunction(s, (n,), [x]) ** 2 * dens(x), -20.0, 20.0, limit=200)
        assert val == pytest.approx(1.0, abs=1e-9)


@given(st.lists(zeta, min_size=1, max_size=2), st.floats(0.5, 50.0))
def test_orthonormal(zs, lam):
    s = ModeSpec(tuple(zs), lam)
    d = len(s)
    for n in [(0,) * d, (1,) + (0,) * (d - 1), (2,) + (1,) * (d - 1)]:
        assert inner_product(s, n, n) == pytest.approx(1.0, abs=1e-9)
    assert abs(inner_product(s, (1,) + (0,) * (d - 1), (3,) + (0,) * (d - 1))) < 1e-9


@given(st.lists(zeta, min_size=1, max_size=2), st.floats(0.5, 20.0))
def test_measure_identity(zs, lam):
    s = ModeSpec(tuple(zs), lam)
    n = (1,) * len(s)
    m = (1,) + (2,) * (len(s) - 1)
    assert measure_identity_check(s, n, m) < 1e-8


def test_measure_identity_bounds():
    with pytest.raises(PreconditionError):
        measure_identity_check(ModeSpec((0.1, 0.2, 0.3), 1.0), (0,), (0,))


@pytest.mark.parametrize("z", [-1.3, 0.4])
def test_lp_norm_lambda_independent_and_closed_form(z):
    K = abs(1 + z)
    vals = [lp_norm(ModeSpec((z,), lam), (0,), 4.0) for lam in (1.0, 10.0, 1000.0)]
    assert max(vals) - min(vals) < 1e-10
    if z > -1:
        # integral of c^4 against the positive-mode density
        assert vals[0] == pytest.approx((math.sqrt(K) * math.exp(-z / 2)) ** 0.25, rel=1e-10)
    assert lp_norm(ModeSpec((z,), 5.0), (2,), 2.0) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("n", range(4))
def test_generator_residual_second_order(n):
    r2 = verify_generator_1d(1.0, 1.0, n, 2048)
    r4 = verify_generator_1d(1.0, 1.0, n, 4096)
    assert r4 < 1e-3
    assert math.log2(r2 / r4) == pytest.approx(2.0, abs=0.1)


def test_generator_rejects_coarse_grid():
    with pytest.raises(PreconditionError):
        verify_generator_1d(1.0, 1.0, 0, 100)


def test_spectrum_below_matches_exact_lambda_set():
    spec = mode_spec_from_hessian(su2_geodesic(0.15, 0), 16, 1.0)
    levels = ou_spectrum_below(spec, 0.9)
    exact = lambda_set(0, 0.9, 16)
    assert [l.value for l in levels] == pytest.approx(exact.numeric())
    assert [l.multiplicity for l in levels] == [it.multiplicity for it in exact.items]
