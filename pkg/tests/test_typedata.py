from fractions import Fraction

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from nahm.errors import (
    EmptyInterval,
    NonIncreasingMasses,
    NonPositiveCharge,
    ParityViolation,
    ValidationError,
)
from nahm.typedata import (
    MonopoleType,
    derive_type,
    kfrak,
    site_dims,
    small_monad_dims,
    to_doubled,
    weight_profile,
)


def brute_kappa(masses, charges):
    """Walk every lattice weight from p_1 to p_N - 1 and add up the active charges."""
    p = [Fraction(m) for m in masses]
    p_last = -sum(p)
    total = 0
    w = p[0]
    while w < p_last:
        total += sum(k for pi, k in zip(p, charges) if pi <= w)
        w += 1
    return total


def symmetric_c2(masses, charges):
    p = [Fraction(m) for m in masses]
    acc = Fraction(0)
    for i in range(len(p)):
        for j in range(i, len(p)):
            acc += charges[i] * p[j] + charges[j] * p[i]
    assert acc.denominator == 1
    return -int(acc)


@st.composite
def valid_types(draw, max_n=6, max_abs2=40, max_k=5):
    n = draw(st.integers(2, max_n))
    odd = draw(st.booleans()) and n % 2 == 0
    pool = [v for v in range(-max_abs2, max_abs2 + 1) if v % 2 == (1 if odd else 0)]
    masses2 = sorted(draw(st.lists(st.sampled_from(pool), min_size=n - 1, max_size=n - 1, unique=True)))
    charges = draw(st.lists(st.integers(1, max_k), min_size=n - 1, max_size=n - 1))
    assume(-sum(masses2) > masses2[-1])
    try:
        t = MonopoleType.from_doubled(masses2, charges)
    except ValidationError:
        assume(False)
    return t


def test_su3_kappa_from_caption():
    t = derive_type([-3, -1], [1, 1])
    assert t.kappa == 12 == t.c2


def test_su2_kappa_reduces_to_2kp():
    t = derive_type([Fraction(-3, 2)], [1])
    assert t.kappa == 3


def test_non_increasing_masses_rejected():
    with pytest.raises(NonIncreasingMasses):
        derive_type([-1, -2], [1, 1])


def test_parity_rules():
    with pytest.raises(ParityViolation):
        derive_type([-3, Fraction(-1, 2)], [1, 1])
    with pytest.raises(ParityViolation):
        derive_type([Fraction(-5, 2), Fraction(-1, 2)], [1, 1])
    derive_type([Fraction(-5, 2), Fraction(-1, 2), Fraction(1, 2)], [1, 1, 1])


def test_empty_interval_and_charges():
    with pytest.raises(EmptyInterval):
        derive_type([1], [1])
    with pytest.raises(EmptyInterval):
        derive_type([-1, 1], [1, 1])
    with pytest.raises(NonPositiveCharge):
        derive_type([-1], [0])
    with pytest.raises(ValidationError):
        to_doubled(Fraction(1, 3))


def test_weight_profiles():
    assert weight_profile(derive_type([-3, -1], [1, 1])).as_tuple() == (1, 1, 2, 2, 2, 2, 2)
    assert weight_profile(derive_type(["-3/2"], [1])).as_tuple() == (1, 1, 1)
    prof = weight_profile(derive_type([-2, -1, 1], [1, 1, 1]))
    assert prof.as_tuple() == (1, 2, 2, 3)
    assert prof.total == 8 == derive_type([-2, -1, 1], [1, 1, 1]).kappa
    assert brute_kappa([-2, -1, 1], [1, 1, 1]) == 8


def test_site_dims_su3():
    lay = site_dims(derive_type([-3, -1], [1, 1]))
    assert lay.gamma[-2] == (1, 2)
    assert lay.beta[-5] == (1, 1) and lay.beta[-1] == (2, 2)
    assert len(lay.beta) == 7
    assert len(lay.gamma) == 6
    assert sorted(lay.a) == [1, 2] and sorted(lay.b) == [2, 3]


def test_site_dims_su2_half_integer():
    lay = site_dims(derive_type(["-3/2"], [1]))
    assert sorted(lay.gamma) == [-1, 1]
    assert len(lay.beta) == 3
    assert all(v == (1, 1) for tab in (lay.beta, lay.gamma, lay.a, lay.b) for v in tab.values())


def test_kfrak_values():
    assert kfrak(derive_type(["-1/2"], [1]), 1) == 1
    assert kfrak(derive_type([-3, -1], [1, 1]), 2) == 23
    with pytest.raises(ValidationError):
        kfrak(derive_type([-3, -1], [1, 1]), 3)


def test_json_round_trip():
    t = derive_type([-3, -1], [2, 1])
    assert MonopoleType.from_json(t.to_json()) == t


@settings(max_examples=300, deadline=None)
@given(valid_types())
def test_kappa_matches_brute_force_and_c2(t):
    masses = [Fraction(m, 2) for m in t.masses2]
    assert t.kappa == brute_kappa(masses, t.charges)
    assert t.c2 == symmetric_c2(masses, t.charges)
    assert t.kappa == t.c2


@settings(max_examples=200, deadline=None)
@given(valid_types())
def test_profile_shape(t):
    prof = weight_profile(t)
    vals = prof.as_tuple()
    assert all(x <= y for x, y in zip(vals, vals[1:]))
    assert prof.at(t.p2(1)) == t.charges[0]
    for m in range(2, t.n):
        assert prof.at(t.p2(m)) - prof.at(t.p2(m) - 2) == t.charges[m - 1]
    assert prof.at(t.pN2 - 2) == sum(t.charges)
    assert prof.total == t.kappa
    lay = site_dims(t)
    assert len(lay.beta) == (t.pN2 - t.p2(1)) // 2
    assert len(lay.gamma) == (t.pN2 - t.p2(1)) // 2 - 1


@settings(max_examples=200, deadline=None)
@given(valid_types())
def test_small_monad_dims_sum(t):
    """Weight blocks of H, K and L add up to kappa, 2 kappa + N and kappa."""
    hs = ks = ls = 0
    for w2 in range(t.p2(1), t.pN2 + 1, 2):
        h, k, l = small_monad_dims(t, w2)
        hs, ks, ls = hs + h, ks + k, ls + l
    assert (hs, ks, ls) == (t.kappa, 2 * t.kappa + t.n, t.kappa)


@given(st.integers(1, 12), st.integers(1, 5))
def test_su2_kappa(p2, k):
    t = MonopoleType.from_doubled([-p2], [k])
    assert t.kappa == k * p2 == t.c2
