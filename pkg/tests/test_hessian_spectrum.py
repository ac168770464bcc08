import math

import numpy as np
import pytest
from scipy.integrate import trapezoid
from hypothesis import given
from hypothesis import strategies as st

from pathgroup.errors import DegeneracyError
from pathgroup.hessian_spectrum import (
    INFINITE,
    ad_spectrum,
    closed_form_values,
    galerkin_eigen,
    galerkin_hessian,
    hessian_eigenvalues,
    morse_index,
    negative_hessian_values,
    sine_coupling,
)
from pathgroup.lie_core import diagonal_algebra, su2_geodesic


@pytest.mark.parametrize("k", [-2, -1, 0, 1, 2])
def test_ad_spectrum_su2(k):
    sp = ad_spectrum(su2_geodesic(0.15, k))
    assert sp.zero_multiplicity == 1
    assert sp.zetas == pytest.approx([2 * abs(0.15 + k)])


def test_ad_spectrum_su3_root_differences():
    ph = [0.1, 0.2, -0.3]
    sp = ad_spectrum(diagonal_algebra(ph))
    assert sp.zero_multiplicity == 2
    expect = sorted(abs(a - b) for i, a in enumerate(ph) for b in ph[i + 1 :])
    assert sp.zetas == pytest.approx(expect)


def test_sine_coupling_oracle():
    # direct quadrature of int phi_m phi_n'
    t = np.linspace(0, 1, 20001)
    K = sine_coupling(4)
    for m in range(1, 5):
        for n in range(1, 5):
            f = math.sqrt(2) * np.sin(m * np.pi * t) / (m * np.pi) * math.sqrt(2) * np.cos(n * np.pi * t)
            assert K[m - 1, n - 1] == pytest.approx(trapezoid(f, t), abs=1e-8)


@given(st.floats(0.01, 0.49), st.integers(-2, 2))
def test_galerkin_symmetric_about_one(theta, k):
    xi = su2_geodesic(theta, k)
    h = galerkin_hessian(xi, 12)
    assert np.allclose(h, h.T)
    ev = np.linalg.eigvalsh(h)
    assert np.allclose(np.sort(ev - 1), np.sort(1 - ev), atol=1e-10)


def test_galerkin_converges_to_closed_form():
    xi = su2_geodesic(0.15, 0)
    ev, _ = galerkin_eigen(xi, 120)
    cf = closed_form_values(xi, 1000)
    assert np.max(np.abs(ev[:6] - cf[:6])) < 1e-6
    assert np.max(np.abs(ev[-6:] - cf[-6:])) < 1e-6


def test_hessian_listing():
    lines = hessian_eigenvalues(su2_geodesic(0.15, 0), 0.9)
    assert [(round(l.value, 12), l.multiplicity) for l in lines] == [(0.7, 2), (0.85, 2), (0.9, 2)]
    with_one = hessian_eigenvalues(su2_geodesic(0.15, 0), 1.0, m_max=5)
    assert any(l.value == 1.0 and l.multiplicity == INFINITE for l in with_one)


@pytest.mark.parametrize("k,index", [(-3, 10), (-2, 6), (-1, 2), (0, 0), (1, 4), (2, 8), (3, 12)])
def test_morse_index_frozen(k, index):
    assert morse_index(su2_geodesic(0.15, k)) == index


@given(st.floats(0.01, 0.49).filter(lambda t: all(abs(2 * (t + k) - round(2 * (t + k))) > 1e-6 for k in range(-3, 4))), st.integers(-3, 3))
def test_morse_index_even(theta, k):
    assert morse_index(su2_geodesic(theta, k)) % 2 == 0


def test_negative_values_degenerate():
    with pytest.raises(DegeneracyError):
        negative_hessian_values(su2_geodesic(0.5, 0))
