"""Pure phi^4 boundary conditions and the trivial solution.

With ``f_n(0) = 0`` for ``n > 4`` the hierarchy admits ``f_n = mu^(n/2-2) g_n``
and formal Taylor series ``g_n = sum_k g_{n,k} mu^k``, ``f_2 = sum_k f_{2,k} mu^k``.
The two seeds ``f_{2,0}`` and ``g_{4,0}`` fix everything else.

Evaluation order used by :func:`build_coeffs` (triangle ``n + 2k <= M``):

1. ``g_{n,0}`` then ``g_{n,1}`` for all ``n`` from the regularity relations;
2. for ``k = 0, 1, ...``: ``f_{2,k+1}`` first, then ``g_{n,k+2}`` for ascending
   ``n``.  ``g_{n,k+2}`` needs ``g_{n+2,k}``, so the cone closes inside the
   triangle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational

from . import _io
from .errors import UsageError
from .families import TrivialAnsatz
from .hierarchy import FlowTable, build_table


@dataclass
class TrivialCoeffs:
    f2k: dict
    g: dict
    seeds: tuple
    epsilon: object = None
    M: int = 0

    def n_values(self):
        return sorted({n for n, _ in self.g})

    def f2k_list(self, count=None):
        ks = sorted(self.f2k)
        if count is not None:
            ks = ks[:count]
        return [self.f2k[k] for k in ks]

    def rows(self):
        for k in sorted(self.f2k):
            yield 2, k, self.f2k[k]
        for n, k in sorted(self.g):
            yield n, k, self.g[(n, k)]

    def to_csv(self, path=None):
        out = []
        for n, k, v in self.rows():
            v = Fraction(v)
            out.append((n, k, v.numerator, v.denominator))
        return _io.write_csv(path, ["n", "k", "numerator", "denominator"], out)


def default_seeds(eps=Fraction(1, 100)):
    """Seeds inside ``|f_{2,0}| <= eps/4`` and ``0 <= g_{4,0} <= eps/32``."""
    return -eps / 8, eps / 64


def seeds_from_bare(c02, c04, alpha0):
    """``(f_2(0), f_4(0))`` of a bare ``c02 phi^2 + c04 phi^4`` action."""
    return alpha0 * 2 * (2 * math.pi) ** 4 * c02, 4 * math.pi**2 * c04


def _pair_sum(g, n, k1, k2):
    # sum_{n1+n2=n+2, ni>=4} g_{n1,k1} g_{n2,k2}
    return sum((g[(n1, k1)] * g[(n + 2 - n1, k2)] for n1 in range(4, n - 1, 2)), 0)


def seed_g(n_max: int, f20, g40) -> dict:
    """``g_{n,0}`` and ``g_{n,1}`` for even ``4 <= n <= n_max``.

    ``g_{4,1} = -4 g_{4,0} f_{2,0}`` (the regularity relation at n=4).
    """
    if n_max < 4:
        raise UsageError("n_max must be >= 4")
    exact = isinstance(f20, Rational) and isinstance(g40, Rational)
    one = Fraction(1) if exact else 1.0
    g = {(4, 0): g40 * one}
    for n in range(6, n_max + 1, 2):
        g[(n, 0)] = -_pair_sum(g, n, 0, 0) * n * one / (n - 4)
    for n in range(4, n_max + 1, 2):
        s = 2 * sum((g[(n1, 0)] * g[(n + 2 - n1, 1)] for n1 in range(4, n - 1, 2)), 0)
        g[(n, 1)] = -(s + g[(n, 0)] * (2 * f20 + 1 - one * 4 / n)) * n * one / (n - 2)
    return g


def taylor_step(coeffs: TrivialCoeffs, n: int, k: int):
    """``f_{2,k+1}`` for ``n == 2``, else ``g_{n,k+2}``."""
    f2, g = coeffs.f2k, coeffs.g
    try:
        if n == 2:
            s = sum(f2[v] * f2[k - v] for v in range(k + 1))
            return (3 * g[(4, k)] + f2[k] - s) / (k + 1)
        if n < 4 or n % 2:
            raise UsageError("n must be 2 or even >= 4")
        d = n + 2 * k
        one = Fraction(1) if isinstance(g[(n, k)], Fraction) else 1.0
        t1 = -(n - 4) * one / d * g[(n, k + 1)]
        t2 = -2 * n * one / d * sum(g[(n, v)] * f2[k + 1 - v] for v in range(k + 2))
        t3 = -n * one / d * sum(
            g[(n1, v)] * g[(n + 2 - n1, k + 2 - v)]
            for n1 in range(4, n - 1, 2)
            for v in range(k + 3)
        )
        t4 = n * (n + 1) * one / d * g[(n + 2, k)]
        return t1 + t2 + t3 + t4
    except KeyError as e:
        raise UsageError(f"taylor_step(n={n}, k={k}) is missing coefficient {e.args[0]}") from None


def build_coeffs(f20, g40, M: int = 60, eps=None) -> TrivialCoeffs:
    """Full coefficient triangle ``n + 2k <= M`` (``M`` even)."""
    if M < 4 or M % 2:
        raise UsageError("M must be even and >= 4")
    coeffs = TrivialCoeffs({0: f20}, seed_g(M, f20, g40), (f20, g40), eps, M)
    for k in range(0, (M - 4) // 2 + 1):
        coeffs.f2k[k + 1] = taylor_step(coeffs, 2, k)
        for n in range(4, M + 1, 2):
            if n + 2 * (k + 2) > M:
                break
            coeffs.g[(n, k + 2)] = taylor_step(coeffs, n, k)
    return coeffs


# ------------------------------------------------------------------ bounds


def g0g1_bounds(n: int, eps):
    """``(|g_{n,0}| bound, |g_{n,1}| bound)`` for ``n >= 6``."""
    e = eps ** (n // 2 - 1)
    return e / (2 * n * n), e / (n * n)


def gnk_bound(n: int, k: int, eps):
    return Fraction(2) ** (k - 2) * eps ** (n // 2 - 1) * math.factorial(k + (n - 4) // 2)


def f2k_bound(k: int, eps):
    return 2**k * eps * math.factorial(abs(k - 1))


def trivex_bound(n: int, eps):
    return 4 * Fraction(3, 4) ** n * eps


def sign_alternates(coeffs: TrivialCoeffs, n_max: int) -> bool:
    for n in range(4, n_max + 1, 2):
        v = coeffs.g[(n, 0)]
        if v == 0 or (v > 0) != (n // 2 % 2 == 0):
            return False
    return True


# ------------------------------------------------------------------ ansatz


@dataclass
class AnsatzCoeffs:
    a: tuple

    def family(self, **kw) -> TrivialAnsatz:
        return TrivialAnsatz(self.a, **kw)


def solve_ansatz_coeffs(f2k) -> AnsatzCoeffs:
    """Invert ``f_{2,k} = (k+1)^k sum_rho a_{(k+1)/rho} (-1)^(rho-1) rho^(-k)``."""
    f2k = list(f2k)
    exact = all(isinstance(x, Rational) for x in f2k)
    a = {}
    for k, fk in enumerate(f2k):
        m = k + 1
        s = 0
        for rho in range(2, m + 1):
            if m % rho == 0:
                w = Fraction(1, rho**k) if exact else rho ** (-float(k))
                s += a[m // rho] * (-1) ** (rho - 1) * w
        a[m] = (Fraction(fk, m**k) if exact else fk / m**k) - s
    return AnsatzCoeffs(tuple(a[m] for m in range(1, len(f2k) + 1)))


def ansatz_taylor(a, count: int):
    """Forward map ``a -> f_{2,k}``, ``k < count`` (oracle for the inversion)."""
    out = []
    for k in range(count):
        m = k + 1
        s = 0
        for rho in range(1, m + 1):
            if m % rho == 0 and m // rho <= len(a):
                s += a[m // rho - 1] * (-1) ** (rho - 1) * Fraction(1, rho**k)
        out.append(m**k * s)
    return out


# ------------------------------------------------------------------ nullin


@dataclass
class NullinReport:
    checked: int
    violations: list = field(default_factory=list)
    scale: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.violations


def check_nullin(table: FlowTable, tol: float = 1e-10) -> NullinReport:
    """``d^l f_n(0) = 0`` for ``n >= 6``, ``0 <= l <= n/2 - 3``.

    Exact tables must give exact zeros; float tables are compared against
    ``tol`` times the largest ``|d^l f_n(0)|`` in the checked range.
    """
    try:
        i0 = next(i for i, mu in enumerate(table.mu_grid) if mu == 0)
    except StopIteration:
        raise UsageError("table has no mu=0 grid point") from None
    exact = table.exact
    items = []
    for n in table.ns():
        if n < 6:
            continue
        j = table.jet(n, i0)
        for l in range(0, min(n // 2 - 3, j.order) + 1):
            items.append((n, l, j.derivs[l]))
    scale = max((abs(float(table.jet(n, i0).derivs[0])) for n in table.ns()), default=0.0)
    thr = 0 if exact else tol * max(scale, 1.0)
    bad = [(n, l, v) for n, l, v in items if abs(v) > thr]
    return NullinReport(len(items), bad, scale)


def nullin_table(coeffs: TrivialCoeffs, n_max: int, backend: str = "rational") -> FlowTable:
    """Table at ``mu = 0`` from the ansatz fitted to the formal series."""
    need = n_max - 4  # jet order of f2 needed for l = n/2-3 at n = n_max
    count = need + 1
    if count > len(coeffs.f2k):
        raise UsageError(f"need {count} Taylor coefficients, have {len(coeffs.f2k)}")
    a = solve_ansatz_coeffs(coeffs.f2k_list(count)).a
    if backend == "float":
        a = tuple(float(x) for x in a)
    fam = TrivialAnsatz(a)
    l_max = max(0, n_max // 2 - 3)
    zero = Fraction(0) if backend == "rational" else 0.0
    return build_table(fam, n_max, l_max, [zero], backend=backend)


# ------------------------------------------------------------------ Landau


def landau_pole(g0, beta) -> float:
    """``1/(beta g0)``; ``inf`` when ``beta g0 <= 0`` (no pole)."""
    if g0 * beta <= 0:
        return math.inf
    return 1 / (beta * g0)


def landau_coupling(lam, g0, beta):
    """``g(lam) = g0 / (1 - beta g0 lam)``."""
    den = 1 - beta * g0 * lam
    if den == 0:
        return math.inf
    return g0 / den
