import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mfflow.bounds import (
    BOUND_IDS,
    BoundSpec,
    direct_compare,
    evaluate,
    log_abs,
    log_geom2,
    make_record,
    margin_scan,
)
from mfflow.errors import UsageError
from mfflow.families import BetaFlow
from mfflow.hierarchy import C_LOOP, build_table
from mfflow.onepi import build_onepi_table


def geom2_table(delta, beta=0.25, mu_max=10.0, n_max=12, l_max=4, points=16):
    return build_table(BetaFlow(delta, beta, mu_max), n_max, l_max, np.linspace(0, mu_max, points))


def test_geom2_conforming_table():
    rep = evaluate(BoundSpec("geom2", {"K": 4, "delta": 1.0}), geom2_table(1.0))
    assert rep.ok and rep.min_margin >= 1


def test_geom2_violation_is_located():
    rep = evaluate(BoundSpec("geom2", {"K": 1, "delta": 2.0}), geom2_table(2.0, beta=1.0))
    assert rep.failures > 0 and rep.min_margin < 1
    fv = rep.first_violation
    assert (fv["n"], fv["l"]) == (2, 1) and fv["pass"] is False


def test_log_space_matches_direct():
    t = geom2_table(0.5, n_max=8, l_max=3)
    for n in t.ns():
        for i in range(len(t.mu_grid)):
            j = t.jet(n, i)
            for l in range(j.order + 1):
                rhs = math.exp(log_geom2(n, l, 4.0, 0.5))
                rec = make_record({}, j.derivs[l], log_geom2(n, l, 4.0, 0.5))
                assert rec.passed == direct_compare(j.derivs[l], rhs)


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-200, 1e200), st.floats(-400, 400))
def test_make_record_consistent(lhs, log_rhs):
    rec = make_record({}, lhs, log_rhs)
    assert rec.passed == (rec.log_margin >= 0)
    if abs(math.log(lhs) - log_rhs) > 1e-9:
        assert rec.passed == (math.log(lhs) <= log_rhs)


def test_zero_lhs_and_exact_inputs():
    rec = make_record({}, 0.0, -1000.0)
    assert rec.passed and rec.log_margin == math.inf
    big = Fraction(10**400 + 1, 10**400)
    assert log_abs(big) == pytest.approx(0.0, abs=1e-300)
    assert make_record({}, Fraction(1, 4), math.log(0.25)).passed
    assert not make_record({}, Fraction(1, 4) * (1 + Fraction(1, 10**10)), math.log(0.25)).passed


def test_require_positive():
    assert not make_record({}, -1e-3, 0.0, require_positive=True).passed
    assert make_record({}, 1e-3, 0.0, require_positive=True).passed


def test_spec_validation_and_data_kind():
    with pytest.raises(UsageError):
        BoundSpec("nope")
    with pytest.raises(UsageError):
        BoundSpec("geom2", {"K": 4})
    t = geom2_table(0.25, n_max=4, l_max=1, points=2)
    with pytest.raises(UsageError):
        evaluate(BoundSpec("pi4", {"K": 1, "delta": 0.1, "beta": 1, "mu_max": 1}), t)
    with pytest.raises(UsageError):
        evaluate(BoundSpec("jv", {}), t)
    with pytest.raises(UsageError):
        evaluate(BoundSpec("gnk", {"eps": 0.01, "N": 4}), t)
    assert len(BOUND_IDS) == 13


def test_report_counts_and_serialisation():
    rep = evaluate(BoundSpec("geom2", {"K": 1, "delta": 2.0}), geom2_table(2.0, beta=1.0, n_max=6, l_max=2, points=3))
    assert rep.failures == sum(not r.passed for r in rep.records)
    assert (rep.min_margin >= 1) == (rep.failures == 0)
    doc = json.loads(rep.to_json())
    assert doc["lemma"] == "geom2" and doc["summary"]["failures"] == rep.failures
    assert doc["first_violation"]["n"] == 2
    lines = rep.to_csv().splitlines()
    assert lines[0] == "system,n,l,mu,value,bound,pass" and len(lines) == rep.total + 1


def test_reports_are_deterministic():
    spec = BoundSpec("geom2", {"K": 4, "delta": 0.5})
    a = evaluate(spec, geom2_table(0.5)).to_json()
    b = evaluate(spec, geom2_table(0.5)).to_json()
    assert a == b


def test_margin_scan_geom2_toward_delta_one():
    # l >= 1 entries only: n = 2, l = 0 is saturated by construction
    def data(s):
        return geom2_table(s.params["delta"], n_max=10, l_max=3, points=8)

    spec = BoundSpec("geom2", {"K": 4, "delta": 0.25, "n_min": 4})
    curve = margin_scan(spec, "delta", [0.25, 0.5, 0.75, 0.95], data)
    margins = [m for _, m, _ in curve]
    assert all(f == 0 for _, _, f in curve)
    assert all(b <= a for a, b in zip(margins, margins[1:]))
    one = margin_scan(spec, "delta", [0.5], data)
    assert len(one) == 1


def test_margin_scan_pi4_in_K():
    d = C_LOOP / 8
    tab = build_onepi_table(d, 1.0, 4.0, 10, 2, [0.0, 2.0, 4.0])
    spec = BoundSpec("pi4", {"K": 4 / C_LOOP, "beta": 1.0, "delta": d, "mu_max": 4.0, "c": C_LOOP})
    Ks = [4 / C_LOOP * f for f in (0.25, 0.5, 1.0, 2.0)]
    curve = margin_scan(spec, "K", Ks, lambda s: tab)
    margins = [m for _, m, _ in curve]
    assert all(b >= a for a, b in zip(margins, margins[1:]))
    assert curve[2][2] == 0


def test_prodh_and_inga():
    from mfflow.onepi import inga_data

    assert evaluate(BoundSpec("prodh", {"v_max": 5, "l_max": 20, "n_max": 40}), None).ok
    assert not evaluate(BoundSpec("prodh", {"v_max": 3, "l_max": 20, "l_min_part": 0, "which": "prodhl"}), None).ok
    assert evaluate(BoundSpec("INga", {}), inga_data([0.1, 0.5, 0.9], 6, 4)).ok
