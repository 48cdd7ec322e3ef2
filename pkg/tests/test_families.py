import math
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp

from mfflow.errors import UsageError
from mfflow.families import (
    BetaFlow,
    ReversedFlow,
    RiccatiFromF4,
    ScaleInvariant,
    TrivialAnsatz,
    family_from_dict,
    family_jet,
    family_to_dict,
    riccati_f2,
)
from mfflow.jets import Jet, jet_shift


def test_betaflow_examples():
    fam = BetaFlow(0.25, 0.25, 10.0)
    assert family_jet(fam, 10.0, 0).value == -0.25
    assert family_jet(fam, 0.0, 0).value == pytest.approx(-0.25 / 1.625, rel=1e-15)
    with pytest.raises(UsageError):
        family_jet(fam, 10.5, 2)
    with pytest.raises(UsageError):
        family_jet(fam, -1.0, 2)


def test_betaflow_ode_residual_exact_and_float():
    fam = BetaFlow(Fraction(1, 4), Fraction(1, 4), 10)
    for mu in (Fraction(0), Fraction(7, 3), Fraction(10)):
        j = -fam.jet(mu, 4)  # delta jet
        res = jet_shift(j) - Fraction(1, 4) * j.truncate(3) * j.truncate(3)
        assert all(x == 0 for x in res.derivs)
    ffam = BetaFlow(0.25, 0.25, 10.0)
    for mu in np.linspace(0, 10, 7):
        j = -ffam.jet(mu, 4)
        res = jet_shift(j) - 0.25 * j.truncate(3) * j.truncate(3)
        assert np.max(np.abs(res.derivs)) <= 1e-12


def test_positive_family_offset():
    fam = BetaFlow(0.5, 0.5, 4.0, sign=1, offset=1)
    assert fam.jet(4.0, 1).derivs[0] == 1.5
    assert fam.jet(4.0, 1).derivs[1] == pytest.approx(0.125)


def test_reversed_flow_closed_form():
    fam = ReversedFlow(0.1, -2.0, 50.0)
    mu = 3.0
    assert -fam.jet(mu, 0).value == pytest.approx(0.1 / (1 + 3.0 * 2.0 * 0.1))
    assert -fam.jet(0.0, 0).value == pytest.approx(0.1)


def test_scale_invariant():
    assert list(ScaleInvariant(1.1).jet(3.0, 2).derivs) == [1.1, 0, 0]


def test_trivial_ansatz_at_zero_and_symbolic():
    assert TrivialAnsatz((0.3,)).jet(0.0, 0).value == 0.3
    assert TrivialAnsatz((0.3, 0.2, -0.1)).jet(0.0, 0).value == 0.3
    a = (Fraction(1, 10), Fraction(-1, 20), Fraction(1, 40))
    x = sp.symbols("x")
    f = sum(sp.Rational(an) * (n * x) ** (n - 1) / (1 + (n * x) ** n) for n, an in enumerate(a, 1))
    for mu in (Fraction(0), Fraction(1, 3), Fraction(2)):
        j = TrivialAnsatz(a).jet(mu, 4)
        want = [sp.Rational(sp.diff(f, x, l).subs(x, sp.Rational(mu))) for l in range(5)]
        assert [sp.Rational(v) for v in j.derivs] == want
    # float path (1/x form for x > 1) against the exact jet
    jf = TrivialAnsatz(tuple(float(v) for v in a)).jet(2.0, 4)
    je = TrivialAnsatz(a).jet(Fraction(2), 4)
    assert np.allclose(jf.derivs, [float(v) for v in je.derivs], rtol=1e-12)


def test_trivial_ansatz_tail_and_decay():
    eps = 0.01
    a = tuple(4 * 0.75**n * eps * (-1) ** n for n in range(1, 200))
    fam = TrivialAnsatz(a, eps=eps)
    N = fam.n_terms()
    assert fam.tail_bound(N) < 1e-14
    tail = sum(abs(v) for v in a[N:])
    assert tail <= fam.tail_bound(N)
    vals = [abs(fam.jet(mu, 0).value) for mu in (1.0, 10.0, 100.0, 1000.0)]
    assert all(b < a_ for a_, b in zip(vals, vals[1:]))
    assert vals[-1] < 1e-4
    with pytest.raises(UsageError):
        TrivialAnsatz((1.5,))


def test_riccati_examples():
    assert riccati_f2(lambda m: 0.3, 0.0) == 0.0
    assert riccati_f2(lambda m: 0.0, 2.0) == 0.0
    lam, mu = 0.1, 1.0
    k = 6 * lam + 1
    closed = 3 * lam * math.exp(k * mu) / (1 + 3 * lam * (math.exp(k * mu) - 1) / k) - 3 * lam
    assert riccati_f2(lambda m: lam, mu, 1e-12) == pytest.approx(closed, rel=1e-10)


def test_riccati_residual_on_admissible_f4():
    # the closed form solves 3 f4 = f2 (f2 - 1) + f2' when f4' = 3 f4^2
    lam = 0.1
    f4 = lambda m: lam / (1 - 3 * lam * m)  # noqa: E731
    h = 1e-4
    f = lambda m: riccati_f2(f4, m, 1e-12)  # noqa: E731
    for mu in (0.5, 1.0, 2.0):
        f2 = f(mu)
        df = (f(mu + h) - f(mu - h)) / (2 * h)
        assert abs(3 * f4(mu) - f2 * (f2 - 1) - df) < 1e-7


def test_riccati_jets_match_finite_differences():
    lam = 0.1
    f4 = lambda m: lam / (1 - 3 * lam * m)  # noqa: E731

    def f4_jet(mu, order):
        # d^l/dmu^l of lam/(1-3 lam mu) = l! 3^l lam^(l+1) / (1-3 lam mu)^(l+1)
        return Jet([math.factorial(l) * 3**l * lam ** (l + 1) / (1 - 3 * lam * mu) ** (l + 1) for l in range(order + 1)], mu)

    fam = RiccatiFromF4(f4, 1e-12, f4_jet)
    mu, h = 1.0, 1e-3
    j = fam.jet(mu, 2)
    fd1 = (fam.value(mu + h) - fam.value(mu - h)) / (2 * h)
    fd2 = (fam.value(mu + h) - 2 * fam.value(mu) + fam.value(mu - h)) / h**2
    assert j.derivs[0] == pytest.approx(fam.value(mu), rel=1e-10)
    assert j.derivs[1] == pytest.approx(fd1, rel=1e-5)
    assert j.derivs[2] == pytest.approx(fd2, rel=1e-3)


def test_particular_solution_identity_symbolic():
    # with f2 = -3 f4 the Riccati residual is 3 (f4' - 3 f4^2) for any f4
    m = sp.symbols("mu")
    for f4 in (1 + m, 2 * m**2 - m + sp.Rational(1, 3)):
        f2 = -3 * f4
        residual = 3 * f4 - f2 * (f2 - 1) - sp.diff(f2, m)
        assert sp.expand(residual - 3 * (sp.diff(f4, m) - 3 * f4**2)) == 0
    lam = sp.symbols("lam")
    f4 = lam / (1 - 3 * lam * m)
    assert sp.simplify(3 * f4 - (-3 * f4) * (-3 * f4 - 1) - sp.diff(-3 * f4, m)) == 0


def test_family_roundtrip():
    fams = [
        BetaFlow(Fraction(1, 4), Fraction(1, 4), 10),
        BetaFlow(0.5, 0.5, 3.0, sign=1, offset=1),
        ReversedFlow(0.1, -2.0, 5.0),
        ScaleInvariant(1.1),
        TrivialAnsatz((Fraction(1, 10), Fraction(-1, 50))),
    ]
    for f in fams:
        assert family_from_dict(family_to_dict(f)) == f
    with pytest.raises(UsageError):
        family_from_dict({"kind": "nope"})
