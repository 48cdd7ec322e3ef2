"""Bound-evaluation engine.

A :class:`BoundSpec` names an inequality and its constants; :func:`evaluate`
walks the matching data object and compares every entry against its bound in
log space.  Margins are ``rhs (1 + slack) / lhs`` so ``min_margin >= 1``
exactly when nothing fails.  A zero left-hand side passes with infinite margin.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable

from . import _io
from .errors import UsageError

FLOAT_SLACK = 1e-12
RHS_ROUNDING = 8 * sys.float_info.epsilon

BOUND_IDS = (
    "geom2",
    "geom",
    "dAbound",
    "Abound",
    "boundedaction",
    "g0g1",
    "gnk",
    "trivex",
    "jv",
    "jlv",
    "INga",
    "prodh",
    "pi4",
)


def log_abs(x) -> float:
    """``log|x|`` without overflow for big rationals; ``-inf`` for zero."""
    if x == 0:
        return -math.inf
    if isinstance(x, Fraction):
        return math.log(abs(x.numerator)) - math.log(x.denominator)
    if isinstance(x, int):
        return math.log(abs(x))
    return math.log(abs(float(x)))


def _exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


@dataclass(frozen=True)
class BoundSpec:
    id: str
    params: dict = field(default_factory=dict)
    log_space: bool = True

    def __post_init__(self):
        if self.id not in BOUND_IDS:
            raise UsageError(f"unknown bound id {self.id!r}")
        missing = [k for k in _REQUIRED.get(self.id, ()) if k not in self.params]
        if missing:
            raise UsageError(f"bound {self.id} needs parameters {missing}")

    def with_param(self, key, value) -> "BoundSpec":
        p = dict(self.params)
        p[key] = value
        return BoundSpec(self.id, p, self.log_space)


@dataclass
class Record:
    indices: dict
    lhs: object
    log_rhs: float
    passed: bool
    log_margin: float

    @property
    def rhs(self) -> float:
        return _exp(self.log_rhs)

    @property
    def margin(self) -> float:
        return _exp(self.log_margin)

    def as_dict(self):
        d = dict(self.indices)
        d.update(value=self.lhs, bound=self.rhs, log_bound=self.log_rhs, margin=self.margin)
        d["pass"] = self.passed
        return d


@dataclass
class BoundReport:
    spec: BoundSpec
    records: list

    @property
    def total(self) -> int:
        return len(self.records)

    @property
    def failures(self) -> int:
        return sum(not r.passed for r in self.records)

    @property
    def ok(self) -> bool:
        return self.failures == 0

    @property
    def min_margin(self) -> float:
        if not self.records:
            return math.inf
        return _exp(min(r.log_margin for r in self.records))

    @property
    def first_violation(self):
        for r in self.records:
            if not r.passed:
                return r.as_dict()
        return None

    def worst(self):
        return min(self.records, key=lambda r: r.log_margin) if self.records else None

    def summary(self) -> dict:
        return {
            "total": self.total,
            "failures": self.failures,
            "min_margin": self.min_margin,
            "first_violation": self.first_violation,
        }

    def summary_line(self) -> str:
        return (
            f"{self.spec.id}: {self.total} checks, {self.failures} failures, "
            f"min margin {_io.fmt_number(self.min_margin)}"
        )

    def to_json(self, path=None):
        doc = {
            "lemma": self.spec.id,
            "params": {k: v for k, v in self.spec.params.items() if not callable(v)},
            "grid": [r.as_dict() for r in self.records],
            "first_violation": self.first_violation,
            "summary": self.summary(),
        }
        return _io.write_json(path, doc)

    def to_csv(self, path=None):
        rows = []
        for r in self.records:
            ix = r.indices
            rows.append(
                (
                    self.spec.id,
                    ix.get("n", ""),
                    ix.get("l", ""),
                    ix.get("mu", ""),
                    r.lhs,
                    r.rhs,
                    "true" if r.passed else "false",
                )
            )
        return _io.write_csv(path, ["system", "n", "l", "mu", "value", "bound", "pass"], rows)


def make_record(indices, lhs, log_rhs, slack=None, require_positive=False) -> Record:
    """Compare ``|lhs|`` with ``exp(log_rhs)``; ``require_positive`` also demands ``lhs > 0``."""
    if slack is None:
        # exact lhs: only the float rounding of log_rhs itself is forgiven
        slack = RHS_ROUNDING if isinstance(lhs, (Fraction, int)) else FLOAT_SLACK
    ll = log_abs(lhs)
    if require_positive and not lhs > 0:
        return Record(indices, lhs, log_rhs, False, -math.inf)
    if ll == -math.inf:
        return Record(indices, lhs, log_rhs, True, math.inf)
    lm = log_rhs + math.log1p(slack) - ll
    return Record(indices, lhs, log_rhs, lm >= 0, lm)


def direct_compare(lhs, rhs, slack=FLOAT_SLACK) -> bool:
    """Plain comparison, used to cross-check the log-space path."""
    return abs(lhs) <= rhs * (1 + slack)


# ------------------------------------------------------------------ helpers


def _lfact(k) -> float:
    return math.lgamma(k + 1)


def _delta_mu(p, mu):
    """``delta(mu)`` of the beta family fixed at ``mu_max``."""
    d, b, m = float(p["delta"]), float(p.get("beta", 0.0)), float(p["mu_max"])
    return d / (1 + (m - float(mu)) * b * d)


def log_geom2(n, l, K, delta):
    return (
        (n + l - 2) * math.log(K)
        + (l + 1) * math.log(delta)
        - 2 * math.log(l + 1)
        + _lfact(n + l - 2)
        - _lfact(n - 2)
    )


def log_pi4(n, l, K, delta_mu):
    """``log B(n,l;mu)`` of the 1PI suite."""
    return (
        2 * math.log(delta_mu)
        + (n + l - 2) * math.log(K)
        - math.log((n + 2) * (n + 1) * (l + 2) * (l + 1))
        + _lfact(n + l - 2)
    )


def _table_l_cap(p, table):
    return int(p.get("l_max", table.l_max))


# ------------------------------------------------------------------ evaluators


def _ev_geom2(p, table):
    K, delta = float(p["K"]), float(p["delta"])
    lcap = _table_l_cap(p, table)
    n_min = int(p.get("n_min", 2))
    for n in table.ns():
        if n < n_min:
            continue
        for i, mu in enumerate(table.mu_grid):
            j = table.jet(n, i)
            for l in range(min(lcap, j.order) + 1):
                yield make_record({"n": n, "l": l, "mu": mu}, j.derivs[l], log_geom2(n, l, K, delta))


def _ev_geom(p, table):
    K = float(p["K"])
    lcap = _table_l_cap(p, table)
    n_min = int(p.get("n_min", 4))
    for n in table.ns():
        if n < n_min:
            continue
        for i, mu in enumerate(table.mu_grid):
            dm = _delta_mu(p, mu)
            j = table.jet(n, i)
            for l in range(min(lcap, j.order) + 1):
                lr = math.log(dm) + (n + l - 2) * math.log(K) - 2 * math.log(l + 1) + _lfact(n + l - 2) - _lfact(n - 2)
                yield make_record({"n": n, "l": l, "mu": mu}, j.derivs[l], lr, require_positive=True)


def _alpha(p, mu):
    return math.exp(float(mu) - float(p["mu_max"]))


def _ev_dAbound(p, table):
    from .hierarchy import C_LOOP, rescale_to_A

    K, delta = float(p["K"]), float(p["delta"])
    c = float(p.get("c", C_LOOP))
    for n in table.ns():
        for i, mu in enumerate(table.mu_grid):
            a = _alpha(p, mu)
            A = rescale_to_A(float(table.value(n, 0, i)), n, a, c)
            lr = math.log(delta) + (n - 2) / 2 * math.log(a * K * K / c) - math.log(a * n)
            yield make_record({"n": n, "l": 0, "mu": mu}, A, lr)


def _ev_Abound(p, table):
    from .hierarchy import C_LOOP, rescale_to_A

    K = float(p["K"])
    c = float(p.get("c", C_LOOP))
    for n in table.ns():
        for i, mu in enumerate(table.mu_grid):
            a = _alpha(p, mu)
            A = rescale_to_A(float(table.value(n, 0, i)), n, a, c)
            pre = (1.0 if n == 2 else 0.0) + _delta_mu(p, mu)
            lr = math.log(pre) + (n - 2) / 2 * math.log(a * K * K / c) - math.log(a * n)
            yield make_record({"n": n, "l": 0, "mu": mu}, A, lr, require_positive=True)


def _ev_boundedaction(p, table):
    from .sine_action import log_bound_B

    eps = float(p["eps"])
    for (n, l), v in sorted(table.items()):
        yield make_record({"n": n, "l": l}, v, log_bound_B(n, l, eps))


def _ev_g0g1(p, coeffs):
    eps = p["eps"]
    le = log_abs(eps)
    n_max = int(p.get("n_max", max(n for n, _ in coeffs.g)))
    yield make_record({"n": 2, "l": 1, "term": "f21"}, coeffs.f2k[1], le - math.log(2))
    yield make_record({"n": 4, "l": 1, "term": "g41"}, coeffs.g[(4, 1)], 2 * le - math.log(32))
    for n in range(6, n_max + 1, 2):
        e = (n // 2 - 1) * le
        yield make_record({"n": n, "l": 0, "term": "g0"}, coeffs.g[(n, 0)], e - math.log(2 * n * n))
        yield make_record({"n": n, "l": 1, "term": "g1"}, coeffs.g[(n, 1)], e - math.log(n * n))


def _ev_gnk(p, coeffs):
    eps = p["eps"]
    le = log_abs(eps)
    N = int(p["N"])
    for (n, k), v in sorted(coeffs.g.items()):
        if n + k <= N:
            lr = (k - 2) * math.log(2) + (n // 2 - 1) * le + _lfact(k + (n - 4) // 2)
            yield make_record({"n": n, "l": k, "term": "g"}, v, lr)
    for k, v in sorted(coeffs.f2k.items()):
        if 2 + k <= N:
            lr = k * math.log(2) + le + _lfact(abs(k - 1))
            yield make_record({"n": 2, "l": k, "term": "f2"}, v, lr)


def _ev_trivex(p, ansatz):
    eps = p["eps"]
    a = getattr(ansatz, "a", ansatz)
    for n, v in enumerate(a, start=1):
        lr = math.log(4) + n * math.log(0.75) + log_abs(eps)
        yield make_record({"n": n}, v, lr)


def _ev_jv(p, jt):
    c = float(p.get("c", jt.c))
    for i, mu in enumerate(jt.mu_grid):
        dm = jt.delta_values[i]
        gam = math.exp(-float(mu))
        J0 = float(jt.jet(0, i).value)
        yield make_record({"v": 0, "l": 0, "mu": mu, "side": "upper"}, J0, math.log(c) - 2 * math.log(1 - dm))
        # lower bound c/(1+delta)^2 <= J0, written as lhs <= rhs
        yield make_record(
            {"v": 0, "l": 0, "mu": mu, "side": "lower"}, c / (1 + dm) ** 2, math.log(J0) if J0 > 0 else -math.inf
        )
        for v in range(1, jt.v_max + 1):
            Jv = float(jt.jet(v, i).value)
            if gam >= 1.0:
                lr = -math.inf
            else:
                lr = math.log(c) + v * math.log1p(-gam) - (2 + v) * math.log(1 - dm)
            if gam >= 1.0:
                # mu = 0: J_v vanishes identically and the bound is 0
                yield make_record({"v": v, "l": 0, "mu": mu, "side": "upper"}, Jv, lr)
            else:
                yield make_record({"v": v, "l": 0, "mu": mu, "side": "upper"}, Jv, lr, require_positive=True)


def _ev_jlv(p, jt):
    lcap = int(p.get("l_max", jt.order))
    for i, mu in enumerate(jt.mu_grid):
        dm = jt.delta_values[i]
        gam = math.exp(-float(mu))
        for v in range(0, jt.v_max + 1):
            j = jt.jet(v, i)
            for l in range(1, min(lcap, j.order) + 1):
                if v == 0:
                    lr = math.log(dm * gam / (2 * math.pi**2)) + 3 * l * math.log(2) + _lfact(l + 1)
                else:
                    lr = math.log(gam / math.pi**2) + (2 * v + 3 * l) * math.log(2) + _lfact(l + 1)
                yield make_record({"v": v, "l": l, "mu": mu}, j.derivs[l], lr)


def _ev_INga(p, data):
    """``data``: iterable of ``(gamma, N, jet in mu of I_N)``."""
    for gam, N, j in data:
        for l in range(1, j.order + 1):
            lr = math.log(gam) + (N + 2 * l + 2) * math.log(2) + _lfact(l + 1)
            yield make_record({"gamma": gam, "N": N, "l": l}, j.derivs[l], lr)


def _ev_prodh(p, _data):
    from .onepi import prodhbl_sum, prodhl_sum

    v_max = int(p.get("v_max", 5))
    l_max = int(p.get("l_max", 20))
    n_max = int(p.get("n_max", 40))
    lo = int(p.get("l_min_part", 1))
    which = p.get("which", "both")
    if which in ("both", "prodhl"):
        for v in range(1, v_max + 1):
            for l in range(0, l_max + 1):
                s = prodhl_sum(v, l, lo)
                lr = v * math.log(1.5) - math.log((l + 2) * (l + 1))
                yield make_record({"lemma": "prodhl", "v": v, "l": l}, s, lr)
    if which in ("both", "prodhbl"):
        for v in range(2, v_max + 1):
            for n in range(2 * v, n_max + 1, 2):
                s = prodhbl_sum(v, n)
                lr = v * math.log(1.5) - math.log((n + 2) * (n + 1))
                yield make_record({"lemma": "prodhbl", "v": v, "n": n}, s, lr)


def _ev_pi4(p, table):
    from .hierarchy import C_LOOP

    K = float(p["K"])
    c = float(p.get("c", C_LOOP))
    beta = float(p.get("beta", 0.0))
    lcap = _table_l_cap(p, table)
    for i, mu in enumerate(table.mu_grid):
        dm = _delta_mu(p, mu)
        for n in table.ns():
            if n < 4:
                continue
            j = table.jet(n, i)
            for l in range(min(lcap, j.order) + 1):
                if n == 4 and l == 0:
                    lr = log_pi4(4, 0, K, dm) + math.log(4 * c / dm)
                else:
                    lr = log_pi4(n, l, K, dm)
                yield make_record({"n": n, "l": l, "mu": mu}, j.derivs[l], lr)
        # h4 > (1-delta)^2 (delta - beta delta^2)/c > 0
        h4 = float(table.value(4, 0, i))
        low = (1 - dm) ** 2 * (dm - beta * dm * dm) / c
        rec = make_record({"n": 4, "l": 0, "mu": mu, "check": "h4_lower"}, low, math.log(h4) if h4 > 0 else -math.inf)
        if not low > 0:
            rec.passed, rec.log_margin = False, -math.inf
        yield rec


_EVALUATORS: dict[str, Callable] = {
    "geom2": _ev_geom2,
    "geom": _ev_geom,
    "dAbound": _ev_dAbound,
    "Abound": _ev_Abound,
    "boundedaction": _ev_boundedaction,
    "g0g1": _ev_g0g1,
    "gnk": _ev_gnk,
    "trivex": _ev_trivex,
    "jv": _ev_jv,
    "jlv": _ev_jlv,
    "INga": _ev_INga,
    "prodh": _ev_prodh,
    "pi4": _ev_pi4,
}

_REQUIRED = {
    "geom2": ("K", "delta"),
    "geom": ("K", "delta", "beta", "mu_max"),
    "dAbound": ("K", "delta", "mu_max"),
    "Abound": ("K", "delta", "beta", "mu_max"),
    "boundedaction": ("eps",),
    "g0g1": ("eps",),
    "gnk": ("eps", "N"),
    "trivex": ("eps",),
    "pi4": ("K", "delta", "beta", "mu_max"),
}

_DATA_KIND = {
    "geom2": "flow",
    "geom": "flow",
    "dAbound": "flow",
    "Abound": "flow",
    "pi4": "1pi",
}


def evaluate(spec: BoundSpec, data=None) -> BoundReport:
    kind = _DATA_KIND.get(spec.id)
    if kind is not None:
        sys_tag = getattr(data, "system", None)
        if sys_tag != kind:
            raise UsageError(f"bound {spec.id} needs a {kind} table, got {sys_tag!r}")
    elif spec.id in ("jv", "jlv") and not hasattr(data, "delta_values"):
        raise UsageError(f"bound {spec.id} needs a JTable")
    elif spec.id in ("g0g1", "gnk") and not hasattr(data, "f2k"):
        raise UsageError(f"bound {spec.id} needs trivial-solution coefficients")
    return BoundReport(spec, list(_EVALUATORS[spec.id](spec.params, data)))


def margin_scan(spec: BoundSpec, param: str, values: Iterable, data_factory: Callable) -> list:
    """``[(value, min_margin, failures)]`` with ``data_factory(spec_i)`` building the data."""
    out = []
    for v in values:
        s = spec.with_param(param, v)
        rep = evaluate(s, data_factory(s))
        out.append((v, rep.min_margin, rep.failures))
    return out
