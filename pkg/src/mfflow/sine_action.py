"""Bounded (sine-type) bare actions at the bare scale ``mu = 0``.

The bare action ``sum_n Lt_n sin(alpha0^(n/2) phi^n) alpha0^(-n/2)`` expands
into monomials ``L_m = sum_{(2nu+1)n'=m} (-1)^nu / (2nu+1)! alpha0^(nu n') Lt_{n'}``.
In the rescaled variables ``Lt_n = alpha0^(n/2-2) a(n) / n`` the powers of
``alpha0`` cancel and the plain coefficients are
``a_m = sum_{(2nu+1)n'=m} (-1)^nu / (2nu)! a(n')``.

:func:`sine_step` evaluates the recursion for ``a(n+2, l)`` term group by
term group.  The quadratic group carries the weight
``(-1)^(nu1+nu2) / ((2nu1)! (2nu2)!)``; ``variant="printed"`` restores the
extra factor ``(1+2nu1)(1+2nu2)`` and the ``(n'-1)^2/n'`` coefficient of the
differentiated form, both of which break agreement with the plain system.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational

from .bounds import BoundReport, BoundSpec, evaluate
from .errors import UsageError
from .hierarchy import C_LOOP

_WEIGHTS = {2: Fraction(1, 4), 3: Fraction(1, 4), 5: Fraction(1, 2)}
_WEIGHT_LARGE = Fraction(9, 8)


def prime_exponents(n: int) -> dict:
    """Trial-division factorisation ``{p: e}``; ``{}`` for ``n = 1``."""
    if n < 1:
        raise UsageError("n must be >= 1")
    out = {}
    p = 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 1
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def prime_weight(p: int) -> Fraction:
    return _WEIGHTS.get(p, _WEIGHT_LARGE)


def log_B(n: int) -> float:
    """``log B(n)``; ``B`` is completely multiplicative."""
    return -sum(float(prime_weight(p)) * e * math.log(p) for p, e in prime_exponents(n).items())


def log_bound_B(n: int, l: int = 0, eps=None) -> float:
    """``log B(n) (n+l)!/n!`` and, with ``eps``, times ``eps^(l+1)``."""
    if l < 0:
        raise UsageError("l must be >= 0")
    v = log_B(n) + math.lgamma(n + l + 1) - math.lgamma(n + 1)
    if eps is not None:
        if not eps > 0:
            raise UsageError("eps must be positive")
        v += (l + 1) * math.log(eps)
    return v


def bound_B(n: int, l: int = 0, eps=None) -> float:
    try:
        return math.exp(log_bound_B(n, l, eps))
    except OverflowError:
        return math.inf


@dataclass(frozen=True)
class PrimeBound:
    n: int

    @property
    def exponents(self) -> dict:
        return {p: prime_weight(p) * e for p, e in prime_exponents(self.n).items()}

    def value(self, l: int = 0, eps=None) -> float:
        return bound_B(self.n, l, eps)


def odd_divisor_pairs(m: int) -> list:
    """All ``(nu, n')`` with ``(1 + 2 nu) n' = m`` and ``n'`` even."""
    if m < 2 or m % 2:
        raise UsageError("m must be even and >= 2")
    out = []
    for d in range(1, m + 1, 2):
        if m % d == 0 and (m // d) % 2 == 0:
            out.append(((d - 1) // 2, m // d))
    return out


def _fact(k):
    return math.factorial(k)


@dataclass
class SineTable:
    """``a[(n, l)] = d^l a(n) / d mu^l`` at ``mu = 0``."""

    a: dict
    c: object
    seed_order: int
    variant: str = "consistent"
    params: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.a[key]

    def items(self):
        return self.a.items()

    def restrict(self, n_max: int, l_max: int) -> "SineTable":
        sub = {k: v for k, v in self.a.items() if k[0] <= n_max and k[1] <= l_max}
        return SineTable(sub, self.c, self.seed_order, self.variant, dict(self.params))

    def ns(self):
        return sorted({n for n, _ in self.a})

    def max_l(self, n: int) -> int:
        return max(l for m, l in self.a if m == n)


def sine_step(table: SineTable, n: int, l: int, c=None, variant: str | None = None):
    """``a(n+2, l)`` from the six term groups."""
    if n < 2 or n % 2:
        raise UsageError("n must be even >= 2")
    a = table.a
    c = table.c if c is None else c
    variant = table.variant if variant is None else variant
    if variant not in ("consistent", "printed"):
        raise UsageError(f"unknown variant {variant!r}")
    exact = isinstance(c, Rational)
    one = Fraction(1) if exact else 1.0

    def get(m, k):
        try:
            return a[(m, k)]
        except KeyError:
            raise UsageError(f"sine_step(n={n}, l={l}) needs a({m},{k})") from None

    up = [p for p in odd_divisor_pairs(n + 2) if p[0] >= 1]
    same = [p for p in odd_divisor_pairs(n) if p[0] >= 1]
    pre = one / (n + 1)
    prec = 2 * one / ((n + 1) * c)

    t1 = pre * sum(((np_ - 1) * (-1) ** (nu - 1) * one / _fact(2 * nu) * get(np_, l) for nu, np_ in up), 0 * one)
    if variant == "printed" and l >= 1:
        w2 = lambda np_: Fraction((np_ - 1) ** 2, np_) * one  # noqa: E731
    else:
        w2 = lambda np_: np_ * one  # noqa: E731
    t2 = pre * sum((w2(np_) * (-1) ** (nu - 1) / _fact(2 * nu - 1) * get(np_, l) for nu, np_ in up), 0 * one)

    t3 = 0 * one
    for n1 in range(2, n + 1, 2):
        n2 = n + 2 - n1
        for nu1, p1 in odd_divisor_pairs(n1):
            for nu2, p2 in odd_divisor_pairs(n2):
                w = (-1) ** (nu1 + nu2) * one / (_fact(2 * nu1) * _fact(2 * nu2))
                if variant == "printed":
                    w *= (1 + 2 * nu1) * (1 + 2 * nu2)
                s = sum((math.comb(l, k) * get(p1, k) * get(p2, l - k) for k in range(l + 1)), 0 * one)
                t3 += w * s
    t3 = t3 * one / ((n + 1) * c)

    t4 = prec * (Fraction(n - 4, 2 * n) * one) * get(n, l)
    t4 += prec * sum(
        (Fraction(np_ - 4, 2 * np_) * (-1) ** nu * one / _fact(2 * nu + 1) * get(np_, l) for nu, np_ in same), 0 * one
    )
    t5 = prec * (one / n) * get(n, l + 1)
    t5 += prec * sum(((-1) ** nu * one / (np_ * _fact(2 * nu + 1)) * get(np_, l + 1) for nu, np_ in same), 0 * one)
    t6 = prec * sum(((-1) ** nu * nu * one / _fact(2 * nu + 1) * get(np_, l) for nu, np_ in same), 0 * one)
    return t1 + t2 + t3 + t4 + t5 + t6


def build_sine_table(seeds, n_max: int, c=C_LOOP, variant: str = "consistent") -> SineTable:
    """Table of ``a(n, l)`` from seeds ``a(2, l)``, ``l = 0..L``.

    ``a(n, l)`` is available for ``l <= L - (n-2)/2``.
    """
    seeds = list(seeds)
    L = len(seeds) - 1
    if n_max < 2 or n_max % 2:
        raise UsageError("n_max must be even >= 2")
    if L < (n_max - 2) // 2:
        raise UsageError(f"need at least {(n_max - 2) // 2 + 1} seed derivatives")
    tab = SineTable({(2, l): v for l, v in enumerate(seeds)}, c, L, variant)
    for n in range(2, n_max - 1, 2):
        top = L - n // 2  # order available for a(n+2)
        for l in range(top + 1):
            tab.a[(n + 2, l)] = sine_step(tab, n, l)
    return tab


# ------------------------------------------------------------------ monomial map


def sine_to_monomial(Lt: dict, alpha0, n_max: int | None = None) -> dict:
    """Plain monomial coefficients ``L_n`` from sine coefficients ``Lt_{n'}``."""
    n_max = max(Lt) if n_max is None else n_max
    out = {}
    for m in range(2, n_max + 1, 2):
        s = 0
        for nu, np_ in odd_divisor_pairs(m):
            if np_ in Lt:
                s += (-1) ** nu * Fraction(1, _fact(2 * nu + 1)) * alpha0 ** (nu * np_) * Lt[np_]
        out[m] = s
    return out


def sine_to_monomial_a(at: dict, n_max: int | None = None) -> dict:
    """Same map in rescaled variables; keys ``n`` or ``(n, l)``."""
    keyed = isinstance(next(iter(at)), tuple)
    if not keyed:
        at = {(n, 0): v for n, v in at.items()}
    n_top = max(n for n, _ in at) if n_max is None else n_max
    out = {}
    # sine coefficients above the largest given n count as zero
    n_in = max(n for n, _ in at)
    ls = sorted({l for _, l in at})
    for m, l in ((m, l) for m in range(2, n_top + 1, 2) for l in ls):
        if any((np_, l) not in at for _, np_ in odd_divisor_pairs(m) if np_ <= n_in):
            continue
        s = 0
        for nu, np_ in odd_divisor_pairs(m):
            if (np_, l) in at:
                s += (-1) ** nu * Fraction(1, _fact(2 * nu)) * at[(np_, l)]
        out[(m, l)] = s
    if not keyed:
        return {m: v for (m, _), v in out.items()}
    return out


def a_to_Ltilde(a, n: int, alpha0):
    """``Lt_n = alpha0^(n/2-2) a(n) / n``."""
    return alpha0 ** (n // 2 - 2) * a / n


# ------------------------------------------------------------------ seeds and lemma


def random_seeds(eps_prime, order: int, rng: random.Random, ratio=Fraction(84, 100), denom: int = 1000):
    """Rational ``a(2, l)`` with ``|a(2,l)| <= ratio (l+2)!/2! eps'^(l+1)``.

    ``ratio`` under-approximates ``B(2) = 2^(-1/4) = 0.8409...``.
    """
    eps_prime = Fraction(eps_prime)
    out = []
    for l in range(order + 1):
        cap = ratio * Fraction(_fact(l + 2), 2) * eps_prime ** (l + 1)
        out.append(cap * Fraction(rng.randint(-denom, denom), denom))
    return out


def boundary_seeds(eps_prime: float, order: int, signs=None):
    """``a(2, l) = s_l B_{eps'}(2, l)`` (float)."""
    signs = signs or [1] * (order + 1)
    return [signs[l] * bound_B(2, l, eps_prime) for l in range(order + 1)]


def lemma_bound_check(
    seed_eps_prime, eps, n_max: int, l_max: int, c=C_LOOP, seeds=None, variant="consistent"
) -> BoundReport:
    """``|a(n,l)| <= B_eps(n,l)`` for even ``n <= n_max``, ``l <= l_max``."""
    L = l_max + (n_max - 2) // 2
    if seeds is None:
        seeds = boundary_seeds(float(seed_eps_prime), L)
    if len(seeds) < L + 1:
        raise UsageError(f"need {L + 1} seeds")
    tab = build_sine_table(list(seeds)[: L + 1], n_max, c, variant).restrict(n_max, l_max)
    spec = BoundSpec(
        "boundedaction",
        {"eps": float(eps), "eps_prime": float(seed_eps_prime), "n_max": n_max, "l_max": l_max, "c": float(c)},
    )
    return evaluate(spec, tab)


# ------------------------------------------------------------------ envelope constants


def _inv_B(m: int) -> float:
    return math.exp(-log_B(m))


def envelope_sum(term: str, nu_max: int = 60) -> float:
    """Coefficient series of the inductive proof, summed to ``nu_max``.

    ``first``: sum B(2nu+1)^-1/(2nu+1)!; ``second``: sum B^-1/((2nu+1)(2nu-1)!);
    ``fourth``: 1 + first; ``sixth``: sum nu B^-1/(2nu+1)!;
    ``third``: sum (1+2nu1)(1+2nu2)^(5/4)/((2nu1)!(2nu2)!).
    """
    if term == "first":
        return sum(_inv_B(2 * v + 1) / _fact(2 * v + 1) for v in range(1, nu_max + 1))
    if term == "second":
        return sum(_inv_B(2 * v + 1) / ((2 * v + 1) * _fact(2 * v - 1)) for v in range(1, nu_max + 1))
    if term == "fourth":
        return 1.0 + envelope_sum("first", nu_max)
    if term == "sixth":
        return sum(v * _inv_B(2 * v + 1) / _fact(2 * v + 1) for v in range(1, nu_max + 1))
    if term == "third":
        a = sum((1 + 2 * v) / _fact(2 * v) for v in range(nu_max + 1))
        b = sum((1 + 2 * v) ** 1.25 / _fact(2 * v) for v in range(nu_max + 1))
        return a * b
    raise UsageError(f"unknown term {term!r}")


def term_ratio(n: int, term: str) -> float:
    """Actual coefficient of ``B(n+2)`` produced by the first/second group at ``n``.

    Sums ``|coef| B(n') / B(n+2)`` over ``(2nu+1) n' = n+2``, ``nu >= 1``.
    """
    tot = 0.0
    lb = log_B(n + 2)
    for nu, np_ in odd_divisor_pairs(n + 2):
        if nu < 1:
            continue
        r = math.exp(log_B(np_) - lb)
        if term == "first":
            tot += (np_ - 1) / _fact(2 * nu) * r
        elif term == "second":
            tot += np_ / _fact(2 * nu - 1) * r
        else:
            raise UsageError(f"unknown term {term!r}")
    return tot / (n + 1)


def constant_K() -> float:
    """``8 / ((1 - 2^-1/4)(1 - 3^-1/4)(1 - 5^-1/2))``."""
    return 8.0 / ((1 - 2**-0.25) * (1 - 3**-0.25) * (1 - 5**-0.5))
