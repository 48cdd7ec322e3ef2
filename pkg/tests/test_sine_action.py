import math
import random
from fractions import Fraction

import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from mfflow.errors import UsageError
from mfflow.hierarchy import C_LOOP, jet_chain
from mfflow.jets import Jet
from mfflow.sine_action import (
    PrimeBound,
    a_to_Ltilde,
    bound_B,
    build_sine_table,
    constant_K,
    envelope_sum,
    lemma_bound_check,
    log_B,
    odd_divisor_pairs,
    prime_exponents,
    random_seeds,
    sine_step,
    sine_to_monomial,
    sine_to_monomial_a,
    term_ratio,
)

C_EXACT = Fraction(C_LOOP)


def plain_oracle(seeds, n_max, c):
    """Rescaled monomial coefficients c^(1-n/2) d^l f_n(0) of the plain hierarchy."""
    ch = jet_chain(Jet(list(seeds), Fraction(0)), n_max)
    return {(n, l): c ** (1 - n // 2) * v for n, j in ch.items() for l, v in enumerate(j.derivs)}


def test_B_examples():
    assert bound_B(2) == pytest.approx(2**-0.25, rel=1e-15)
    assert bound_B(8) == pytest.approx(2**-0.75, rel=1e-15)
    assert bound_B(6, 1, 1.0) == pytest.approx(2**-0.25 * 3**-0.25 * 7, rel=1e-14)
    assert bound_B(1) == 1.0
    assert PrimeBound(14).value(0) == pytest.approx(2**-0.25 * 7**-(9 / 8), rel=1e-14)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 10**6))
def test_prime_exponents_match_sympy(n):
    assert prime_exponents(n) == {int(p): e for p, e in sp.factorint(n).items()}
    assert math.prod(p**e for p, e in prime_exponents(n).items()) == n
    assert 0 < math.exp(log_B(n)) <= 1


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 3000), st.integers(1, 3000))
def test_B_completely_multiplicative(m, n):
    assert log_B(m * n) == pytest.approx(log_B(m) + log_B(n), abs=1e-12)


def test_bound_B_log_space_large():
    v = bound_B(1000, 200, 0.5)
    assert math.isfinite(v) or v == math.inf


def test_odd_divisor_pairs():
    assert sorted(odd_divisor_pairs(6)) == [(0, 6), (1, 2)]
    assert sorted(odd_divisor_pairs(8)) == [(0, 8)]
    assert sorted(odd_divisor_pairs(18)) == [(0, 18), (1, 6), (4, 2)]
    for m in range(2, 200, 2):
        for nu, npr in odd_divisor_pairs(m):
            assert (2 * nu + 1) * npr == m and npr % 2 == 0


def test_sine_to_monomial_alpha0_cancels():
    alpha0 = Fraction(1, 7)
    at = {2: Fraction(1, 3), 4: Fraction(-2, 5), 6: Fraction(1, 11), 8: Fraction(3, 13)}
    Lt = {n: a_to_Ltilde(v, n, alpha0) for n, v in at.items()}
    L = sine_to_monomial(Lt, alpha0, 18)
    a = sine_to_monomial_a(at, 18)
    for m in L:
        # L_m = alpha0^(m/2-2) a_m / m
        assert L[m] == alpha0 ** (m // 2 - 2) * a[m] / m
    # a_6 picks up a(2) through 6 = 3 * 2
    assert a[6] == at[6] - at[2] / 2


def test_sine_recursion_matches_plain_system():
    rng = random.Random(7)
    for _ in range(3):
        seeds = random_seeds(Fraction(1, 1000), 12, rng)
        tab = build_sine_table(seeds, 14, C_EXACT)
        mono = sine_to_monomial_a(tab.a)
        orc = plain_oracle(seeds, 14, C_EXACT)
        assert mono == orc
        assert all(tab[(2, l)] == s for l, s in enumerate(seeds))


def test_printed_variant_diverges():
    seeds = random_seeds(Fraction(1, 1000), 6, random.Random(1))
    good = build_sine_table(seeds, 8, C_EXACT)
    bad = build_sine_table(seeds, 8, C_EXACT, variant="printed")
    assert good[(4, 0)] == bad[(4, 0)]
    assert good[(8, 0)] != bad[(8, 0)]
    assert good[(6, 1)] != bad[(6, 1)]


def test_sine_step_errors():
    tab = build_sine_table([Fraction(1, 1000)] * 3, 4, C_EXACT)
    with pytest.raises(UsageError):
        sine_step(tab, 3, 0)
    with pytest.raises(UsageError):
        sine_step(tab, 4, 5)
    with pytest.raises(UsageError):
        build_sine_table([Fraction(1)], 8, C_EXACT)


def test_random_seeds_respect_bound():
    eps = Fraction(1, 1000)
    seeds = random_seeds(eps, 10, random.Random(3))
    for l, s in enumerate(seeds):
        assert abs(float(s)) <= bound_B(2, l, float(eps))


def test_envelope_constants():
    assert envelope_sum("first") <= 0.25
    assert envelope_sum("second") <= 0.53
    assert envelope_sum("fourth") <= 1.25
    assert envelope_sum("sixth") <= 0.3
    assert envelope_sum("third") <= 10
    assert constant_K() == pytest.approx(378.74, abs=0.01)
    for n in range(2, 31, 2):
        scale = (n + 2) / (n + 1)
        assert term_ratio(n, "first") / scale <= 0.25
        assert term_ratio(n, "second") / scale <= 0.53


def test_lemma_bound_small_seed_passes():
    rep = lemma_bound_check(1e-4, 1e-2, 10, 4)
    assert rep.ok and rep.total == 25


def test_lemma_bound_larger_seed_is_data():
    # existence statement only: at eps' = 1e-3 with eps = 1e-2 some records fail
    rep = lemma_bound_check(1e-3, 1e-2, 10, 4)
    assert not rep.ok
    assert rep.first_violation["n"] == 4
