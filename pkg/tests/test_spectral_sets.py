from collections import Counter
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from pathgroup.errors import IllPosedCapError, PreconditionError
from pathgroup.spectral_sets import (
    AffineValue,
    abs_theta_k,
    accumulation_set,
    accumulation_set_direct,
    counting_function,
    e_zero,
    e_zero_from_modes,
    lambda_set,
    member_lambda_plus_n,
    negative_mode_count,
    prime_criterion_check,
    prime_target,
    reconstruct,
    sigma_set,
)

TH = 0.15
fracs = st.fractions(min_value=-5, max_value=5, max_denominator=30)
affine = st.builds(AffineValue, fracs, fracs)


@given(affine, affine, affine)
def test_affine_is_a_module(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert a + b == b + a
    assert (a - a).is_zero()
    assert (a * 3) / 3 == a
    assert (a + b).numeric(TH) == pytest.approx(a.numeric(TH) + b.numeric(TH))


def test_affine_equality_is_symbolic():
    # 0.7 and 1 - 2 theta agree numerically at theta = 3/20 but are different symbols
    assert AffineValue(Fraction(7, 10)) != AffineValue(1, -2)
    assert AffineValue(1, -2).numeric(Fraction(3, 20)) == 0.7


@pytest.mark.parametrize("k", range(-5, 6))
def test_e_zero_two_routes(k):
    assert e_zero(k) == e_zero_from_modes(k)


def test_e_zero_frozen():
    assert e_zero(0) == AffineValue(0)
    assert e_zero(-1) == AffineValue(2, -4)
    assert e_zero(1) == AffineValue(2, 6)
    assert e_zero(-2) == AffineValue(Fraction(26, 3), Fraction(-22, 3))


def _oracle_levels(k, R, cutoff, th=TH):
    """Float brute force over occupation numbers, every quantum in two copies."""
    c = 2 * abs(th + k)
    low = negative_mode_count(k)
    e0 = sum(2 * (c / m - 1) for m in range(1, low + 1))
    q = []
    for m in range(1, cutoff + 1):
        q += [abs(1 - c / m)] * 2 + [1 + c / m] * 2
    out = Counter()

    def rec(i, v):
        if i == len(q):
            out[round(v, 9)] += 1
            return
        while v <= R + 1e-12:
            rec(i + 1, v)
            v += q[i]

    if e0 <= R + 1e-12:
        rec(0, e0)
    return out


@pytest.mark.parametrize("k,R", [(0, 0.95), (-1, 2.0), (1, 3.2)])
def test_lambda_set_matches_brute_force(k, R):
    res = lambda_set(k, R, 12)
    got = Counter()
    for it in res.items:
        got[round(it.value.numeric(TH), 9)] += it.multiplicity
    oracle = _oracle_levels(k, R, 12)
    # the integer tier contributes no finite multiplicity for n >= 1
    for v, m in got.items():
        if m:
            assert oracle[v] == m


def test_lambda_set_frozen_bottom():
    res = lambda_set(0, 0.9, 16)
    assert [(str(it.value), it.multiplicity) for it in res.items] == [
        ("0", 1),
        ("1 - 2*theta", 2),
        ("1 - 1*theta", 2),
        ("1 - 2/3*theta", 2),
    ]


def test_lambda_set_needs_negative_modes():
    with pytest.raises(PreconditionError):
        lambda_set(2, 5.0, 3)


@pytest.mark.parametrize("k", [0, -1, 1])
def test_accumulation_routes_agree_and_nest(k):
    a = accumulation_set(k, 3.0, 10)
    b = accumulation_set_direct(k, 3.0, 10)
    assert a.values() == b.values()
    assert a.values() <= lambda_set(k, 3.0, 10).values()


def test_sigma_bottom_rows():
    res = sigma_set([0, -1, 1], 0.9, 0.05)
    assert res.items[0].value == AffineValue(0)
    assert res.items[1].value == AffineValue(1, -2)
    js = res.to_json()
    assert js["N_R"] == 7 and set(js["mode_cutoff"]) == {"0", "-1", "1"}
    assert any(w.startswith("cap_tie") for w in js["warnings"])


def test_sigma_ill_posed_cap():
    with pytest.raises(IllPosedCapError):
        sigma_set([0], 2.0, 0.05)


def test_sigma_bad_args():
    with pytest.raises(PreconditionError):
        sigma_set([0], -1.0, 0.05)
    with pytest.raises(PreconditionError):
        sigma_set([0], 1.0, 1.5)
    with pytest.raises(PreconditionError):
        sigma_set([0], 1.0, 0.1, theta=Fraction(1, 2))


def test_counting_grows_as_r_shrinks():
    counts = [counting_function([0, -1, 1], 1.5, r) for r in (0.1, 0.05, 0.02, 0.01)]
    assert counts == [17, 29, 65, 125]


@st.composite
def member_case(draw):
    l = draw(st.sampled_from([-1, 0, 1]))
    c = abs_theta_k(l)
    low = negative_mode_count(l)
    val = e_zero(l) + draw(st.integers(1, 2))
    plus = draw(st.lists(st.integers(1, 6), max_size=2))
    minus = draw(st.lists(st.integers(low + 1, low + 6), max_size=2))
    for m in plus:
        val = val + (c / m + 1)
    for m in minus:
        val = val + (1 - c / m)
    return l, val


@given(member_case())
def test_constructed_members_are_found(case):
    l, x = case
    res = member_lambda_plus_n(x, l, x.numeric(TH) + 1e-9)
    assert res.member
    assert reconstruct(l, res.witness) == x


def test_non_member_below_e_zero():
    res = member_lambda_plus_n(AffineValue(Fraction(1, 2)), 1, 1.0)
    assert not res.member and res.certificate["reason"] == "below E_0"


def test_prime_target_and_preconditions():
    assert prime_target(0, 1, 5) == e_zero(0) + (abs_theta_k(0) / 5 + 1)
    with pytest.raises(PreconditionError):
        prime_criterion_check(0, 1, 6, range(-2, 3))
    with pytest.raises(PreconditionError):
        prime_criterion_check(0, 1, 3, range(-2, 3))


def test_prime_check_small_case():
    ok, certs = prime_criterion_check(0, 1, 5, range(-2, 3))
    assert ok and set(certs) == set(range(-2, 3))
    assert all("witness" not in c for c in certs.values())
