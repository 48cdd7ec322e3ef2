"""Two-point boundary families ``f2(mu)`` that drive the connected hierarchy.

Each family is an immutable descriptor with a ``jet(mu, order)`` method.
Rational parameters together with a rational ``mu`` give exact jets wherever
the closed form allows it (everything except the Riccati family).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .errors import NumericError, UsageError
from .jets import (
    Jet,
    constant_jet,
    delta_family_jet,
    jet_exp,
    jet_pow,
    jet_reciprocal,
    variable_jet,
)


def _exact(*xs):
    return all(isinstance(x, Rational) for x in xs)


@dataclass(frozen=True)
class BetaFlow:
    """``f2 = offset + sign * delta(mu)`` with ``delta' = beta delta^2``.

    ``delta(mu_max) = delta_end``; sign -1, offset 0 is the bounded family,
    sign +1, offset 1 the positive one.
    """

    delta_end: float
    beta: float
    mu_max: float
    sign: int = -1
    offset: int = 0
    kind: str = field(default="beta", init=False)

    def __post_init__(self):
        if not self.delta_end > 0:
            raise UsageError("delta_end must be positive")
        if self.sign not in (-1, 1) or self.offset not in (0, 1):
            raise UsageError("sign must be +-1 and offset 0 or 1")
        if 1 + self.mu_max * self.beta * self.delta_end <= 0:
            raise UsageError("delta(mu) blows up inside [0, mu_max]")

    def delta(self, mu):
        return self.delta_end / (1 + (self.mu_max - mu) * self.beta * self.delta_end)

    def jet(self, mu, order: int) -> Jet:
        _check_range(mu, self.mu_max)
        exact = _exact(self.delta_end, self.beta, self.mu_max, mu)
        if exact:
            d = Fraction(self.delta_end) / (1 + (Fraction(self.mu_max) - mu) * Fraction(self.beta) * Fraction(self.delta_end))
            j = delta_family_jet(d, Fraction(self.beta), order, mu)
        else:
            j = delta_family_jet(float(self.delta(mu)), float(self.beta), order, mu)
        return self.offset + self.sign * j


@dataclass(frozen=True)
class ReversedFlow:
    """``f2 = sign * delta(mu)``, ``delta(mu) = delta0 / (1 - mu beta delta0)``, beta < 0."""

    delta0: float
    beta: float
    mu_max: float
    sign: int = -1
    kind: str = field(default="reversed", init=False)

    def __post_init__(self):
        if not self.delta0 > 0:
            raise UsageError("delta0 must be positive")
        if 1 - self.mu_max * self.beta * self.delta0 <= 0:
            raise UsageError("delta(mu) blows up inside [0, mu_max]")

    def delta(self, mu):
        return self.delta0 / (1 - mu * self.beta * self.delta0)

    def jet(self, mu, order: int) -> Jet:
        _check_range(mu, self.mu_max)
        if _exact(self.delta0, self.beta, mu):
            d = Fraction(self.delta0) / (1 - Fraction(mu) * Fraction(self.beta) * Fraction(self.delta0))
            return self.sign * delta_family_jet(d, Fraction(self.beta), order, mu)
        return self.sign * delta_family_jet(float(self.delta(mu)), float(self.beta), order, mu)


@dataclass(frozen=True)
class ScaleInvariant:
    f2: float
    mu_max: float = math.inf
    kind: str = field(default="const", init=False)

    def jet(self, mu, order: int) -> Jet:
        _check_range(mu, self.mu_max)
        return constant_jet(self.f2, order, mu)


@dataclass(frozen=True)
class TrivialAnsatz:
    """``f2(mu) = sum_n a_n x^(n-1) / (1 + x^n)`` with ``x = n mu``.

    Float evaluation stops once ``16 eps (3/4)^(N+1)`` (the geometric tail of
    ``|a_n| <= 4 (3/4)^n eps``) drops below ``tail_tol``.
    """

    a: tuple
    eps: Optional[float] = None
    tail_tol: float = 1e-14
    mu_max: float = math.inf
    kind: str = field(default="trivial", init=False)

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(self.a))
        if any(abs(x) >= 1 for x in self.a):
            raise UsageError("ansatz coefficients must satisfy |a_n| < 1")

    @property
    def eps_effective(self) -> float:
        if self.eps is not None:
            return float(self.eps)
        if not self.a:
            return 0.0
        return max(abs(float(x)) / (4 * 0.75**n) for n, x in enumerate(self.a, start=1))

    def tail_bound(self, N: int) -> float:
        """Bound on ``sum_{n>N} |a_n|`` under the geometric decay."""
        return 16 * self.eps_effective * 0.75 ** (N + 1)

    def n_terms(self) -> int:
        if _exact(*self.a):
            return len(self.a)
        for N in range(len(self.a) + 1):
            if self.tail_bound(N) < self.tail_tol:
                return N
        return len(self.a)

    def term_jet(self, n: int, mu, order: int) -> Jet:
        """Jet of ``x^(n-1)/(1+x^n)``, ``x = n mu``."""
        x = variable_jet(mu, order, slope=n)
        if x.value > 1 and not x.exact:
            # y/(1+y^n) with y = 1/x keeps powers bounded
            y = jet_reciprocal(x)
            return y * jet_reciprocal(1 + jet_pow(y, n))
        return jet_pow(x, n - 1) * jet_reciprocal(1 + jet_pow(x, n))

    def jet(self, mu, order: int) -> Jet:
        if mu < 0 or mu > self.mu_max:
            raise UsageError(f"mu={mu} outside [0, {self.mu_max}]")
        exact = _exact(mu, *self.a)
        total = constant_jet(Fraction(0) if exact else 0.0, order, mu, exact=exact)
        for n in range(1, self.n_terms() + 1):
            a_n = self.a[n - 1]
            if a_n == 0:
                continue
            total = total + self.term_jet(n, mu, order) * a_n
        return total


def riccati_f2(f4: Callable[[float], float], mu: float, tol: float = 1e-10) -> float:
    """Closed-form two-point function with ``f2(0) = 0`` built from a prescribed ``f4``.

    ``f2 = 3 f4(0) e^P / (1 + 3 f4(0) int_0^mu e^P) - 3 f4(mu)`` with
    ``P(s) = int_0^s (6 f4 + 1)``.  Both integrals use adaptive Gauss-Kronrod.
    """
    if tol <= 0:
        raise UsageError("tol must be positive")
    if mu == 0:
        return 0.0
    s0 = 3.0 * f4(0.0)

    def P(s):
        val, err = integrate.quad(lambda t: 6.0 * f4(t) + 1.0, 0.0, s, epsabs=tol, epsrel=tol)
        if not np.isfinite(val) or err > 100 * tol * max(1.0, abs(val)):
            raise NumericError(f"inner quadrature failed at s={s}")
        return val

    Q, err = integrate.quad(lambda s: math.exp(P(s)), 0.0, mu, epsabs=tol, epsrel=tol)
    if not np.isfinite(Q) or err > 100 * tol * max(1.0, abs(Q)):
        raise NumericError(f"outer quadrature failed at mu={mu}")
    return s0 * math.exp(P(mu)) / (1.0 + s0 * Q) - 3.0 * f4(mu)


@dataclass(frozen=True)
class RiccatiFromF4:
    """Two-point family obtained from a prescribed four-point function.

    ``f4`` returns values; ``f4_jet(mu, order)`` (optional) returns the jet of
    ``f4`` and is needed for jets of order >= 1, which differentiate the closed
    form exactly: only ``P(mu)`` and ``int_0^mu e^P`` come from quadrature.
    """

    f4: Callable[[float], float]
    tol: float = 1e-10
    f4_jet: Optional[Callable[[float, int], Jet]] = None
    mu_max: float = math.inf
    kind: str = field(default="riccati", init=False)

    def value(self, mu):
        return riccati_f2(self.f4, mu, self.tol)

    def jet(self, mu, order: int) -> Jet:
        _check_range(mu, self.mu_max)
        if order == 0:
            return Jet([self.value(mu)], mu)
        if self.f4_jet is None:
            raise UsageError("RiccatiFromF4 needs f4_jet for jets of order >= 1")
        mu = float(mu)
        tol = self.tol
        P0 = integrate.quad(lambda t: 6.0 * self.f4(t) + 1.0, 0.0, mu, epsabs=tol, epsrel=tol)[0]
        Q0 = integrate.quad(
            lambda s: math.exp(integrate.quad(lambda t: 6.0 * self.f4(t) + 1.0, 0.0, s, epsabs=tol, epsrel=tol)[0]),
            0.0,
            mu,
            epsabs=tol,
            epsrel=tol,
        )[0]
        f4j = self.f4_jet(mu, order).to_float()
        dP = 6.0 * f4j + 1.0  # jet of P' at mu
        P = Jet(np.concatenate([[P0], dP.derivs[:-1]]), mu)
        E = jet_exp(P)
        Q = Jet(np.concatenate([[Q0], E.derivs[:-1]]), mu)
        s0 = 3.0 * float(self.f4(0.0))
        return s0 * E * jet_reciprocal(1.0 + s0 * Q) - 3.0 * f4j


def _check_range(mu, mu_max):
    if mu < 0 or mu > mu_max:
        raise UsageError(f"mu={mu} outside [0, {mu_max}]")


def family_jet(fam, mu, order: int) -> Jet:
    return fam.jet(mu, order)


_KINDS = {
    "beta": BetaFlow,
    "reversed": ReversedFlow,
    "const": ScaleInvariant,
    "trivial": TrivialAnsatz,
}


def family_to_dict(fam) -> dict:
    if isinstance(fam, RiccatiFromF4):
        raise UsageError("Riccati families hold a callable and do not serialise")
    d = asdict(fam)
    d["kind"] = fam.kind
    if "a" in d:
        d["a"] = [str(x) if isinstance(x, Fraction) else x for x in d["a"]]
    return {k: _jsonable(v) for k, v in d.items()}


def _jsonable(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, float) and math.isinf(v):
        return "inf"
    return v


def family_from_dict(d: dict):
    d = dict(d)
    kind = d.pop("kind", None)
    if kind not in _KINDS:
        raise UsageError(f"unknown family kind {kind!r}")
    cls = _KINDS[kind]
    if "a" in d:
        d["a"] = tuple(_parse_number(x) for x in d["a"])
    for k, v in list(d.items()):
        if k != "a" and isinstance(v, str):
            d[k] = _parse_number(v)
    return cls(**d)


def _parse_number(x):
    if isinstance(x, str):
        if x in ("inf", "Infinity"):
            return math.inf
        if "/" in x:
            return Fraction(x)
        return float(x)
    return x
