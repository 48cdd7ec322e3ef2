import math
from fractions import Fraction

import pytest
import sympy as sp

from mfflow.bounds import BoundSpec, evaluate
from mfflow.errors import UsageError
from mfflow.trivial import (
    ansatz_taylor,
    build_coeffs,
    check_nullin,
    default_seeds,
    landau_coupling,
    landau_pole,
    nullin_table,
    seed_g,
    sign_alternates,
    solve_ansatz_coeffs,
    taylor_step,
    trivex_bound,
)

EPS = Fraction(1, 100)


@pytest.fixture(scope="module")
def coeffs():
    return build_coeffs(*default_seeds(EPS), M=40, eps=EPS)


def test_seeds_inside_admissible_box():
    f20, g40 = default_seeds(EPS)
    assert abs(f20) <= EPS / 4 and 0 <= g40 <= EPS / 32


def test_regularity_relations_by_hand():
    f20, g40 = Fraction(-1, 800), Fraction(1, 6400)
    g = seed_g(8, f20, g40)
    assert g[(4, 1)] == -4 * g40 * f20
    assert g[(6, 0)] == -3 * g40**2
    assert g[(8, 0)] == -2 * (2 * g[(4, 0)] * g[(6, 0)])


def test_series_solves_hierarchy():
    M = 20
    co = build_coeffs(Fraction(-1, 800), Fraction(1, 6400), M=M)
    m = sp.symbols("mu")
    f2 = sum(sp.Rational(v) * m**k for k, v in co.f2k.items())
    f = {2: f2}
    for n in range(4, M + 1, 2):
        f[n] = m ** (n // 2 - 2) * sum(sp.Rational(co.g[(n, k)]) * m**k for k in range(0, (M - n) // 2 + 1))
    pmax = (M - 6) // 2

    def low(expr):
        p = sp.Poly(sp.expand(expr), m)
        return [p.coeff_monomial(m**k) for k in range(pmax + 1)]

    assert all(x == 0 for x in low(3 * f[4] - f2 * (f2 - 1) - sp.diff(f2, m)))
    for n in range(4, M - 1, 2):
        s = sum(f[n1] * f[n + 2 - n1] for n1 in range(4, n - 1, 2))
        res = (n + 1) * f[n + 2] - s - f[n] * (2 * f2 + 1 - sp.Rational(4, n)) - sp.Rational(2, n) * sp.diff(f[n], m)
        assert all(x == 0 for x in low(res)), n


def test_taylor_step_errors(coeffs):
    with pytest.raises(UsageError):
        taylor_step(coeffs, 3, 0)
    with pytest.raises(UsageError):
        taylor_step(coeffs, 40, 30)
    with pytest.raises(UsageError):
        build_coeffs(Fraction(0), Fraction(0), M=7)


def test_sign_alternation(coeffs):
    assert sign_alternates(coeffs, 40)


def test_lemma_bounds(coeffs):
    for lid in ("g0g1", "gnk"):
        rep = evaluate(BoundSpec(lid, {"eps": float(EPS), "N": 30}), coeffs)
        assert rep.ok, rep.first_violation


def test_ansatz_inversion_roundtrip(coeffs):
    fk = coeffs.f2k_list(15)
    a = solve_ansatz_coeffs(fk).a
    assert ansatz_taylor(a, 15) == fk
    for n, an in enumerate(a[:15], 1):
        assert abs(an) <= trivex_bound(n, EPS)


def test_nullin_exact(coeffs):
    rep = check_nullin(nullin_table(coeffs, 14, "rational"))
    assert rep.ok and rep.checked > 0


def test_nullin_float(coeffs):
    rep = check_nullin(nullin_table(coeffs, 12, "float"))
    assert rep.ok


def test_landau():
    assert landau_pole(0.1, 2) == pytest.approx(5.0)
    assert landau_pole(-0.1, 2) == math.inf
    assert landau_coupling(0.0, 0.1, 2) == 0.1
    lam = 5.0 * (1 - 1e-8)
    assert abs(landau_coupling(lam, 0.1, 2)) > 1e6 * 0.1
    assert landau_coupling(Fraction(5), Fraction(1, 10), 2) == math.inf
