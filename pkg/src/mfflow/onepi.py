"""Mean-field 1PI system.

``J_0 h_{n+2} = sum_{v=2}^{n/2} (-1)^v J_{v-1} sum_{b} prod_k h_{b_k+2}
+ 2/(n(n-1)) h_n' + (n-4)/(n(n-1)) h_n`` with ``h_2 = -delta(mu)``.

The kernels are ``J_v = c sum_N C(N+v+1, N) delta^N I_{v+N}(gamma)``,
``gamma = e^(-mu)``, and the ``N``-fold integrals use the one-dimensional form
``I_N(gamma) = int_0^inf t e^-t [(e^(-gamma t) - e^-t)/t]^N dt``.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import integrate

from .bounds import BoundReport, BoundSpec, evaluate
from .errors import NumericError, UsageError
from .hierarchy import C_LOOP, FlowTable
from .jets import Jet, delta_family_jet, jet_div, jet_pow, jet_shift

# ------------------------------------------------------------------ combinatorics


@lru_cache(maxsize=None)
def _stirling_row(n: int) -> tuple:
    if n == 1:
        return (0, 1)
    prev = _stirling_row(n - 1)
    row = [0] * (n + 1)
    for nu in range(1, n + 1):
        row[nu] = nu * (prev[nu] if nu < len(prev) else 0) + prev[nu - 1]
    return tuple(row)


def stirling(n: int, nu: int) -> int:
    """Coefficients of ``(x d/dx)^n = sum_nu a(n,nu) x^nu d^nu/dx^nu``."""
    if not 1 <= nu <= n:
        raise UsageError(f"stirling needs 1 <= nu <= n, got n={n}, nu={nu}")
    return _stirling_row(n)[nu]


def stirling_table(n_max: int) -> list:
    return [[stirling(n, nu) for nu in range(1, n + 1)] for n in range(1, n_max + 1)]


def compositions(n: int, v: int):
    """Ordered tuples of ``v`` even parts ``>= 2`` summing to ``n``."""
    if v < 1 or n < 2 * v or n % 2:
        return
    if v == 1:
        yield (n,)
        return
    for b in range(2, n - 2 * (v - 1) + 1, 2):
        for rest in compositions(n - b, v - 1):
            yield (b,) + rest


def composition_count(n: int, v: int) -> int:
    if v < 1 or n < 2 * v or n % 2:
        return 0
    return math.comb(n // 2 - 1, v - 1)


@lru_cache(maxsize=None)
def prodhl_sum(v: int, l: int, l_min: int = 1) -> Fraction:
    """``sum prod_j 1/((l_j+2)(l_j+1))`` over ``l_1+...+l_v = l``, ``l_j >= l_min``."""
    if v == 1:
        return Fraction(1, (l + 2) * (l + 1)) if l >= l_min else Fraction(0)
    return sum(
        (Fraction(1, (k + 2) * (k + 1)) * prodhl_sum(v - 1, l - k, l_min) for k in range(l_min, l + 1)),
        Fraction(0),
    )


@lru_cache(maxsize=None)
def prodhbl_sum(v: int, n: int) -> Fraction:
    """Same product summed over compositions of ``n`` into ``v`` even parts."""
    if v == 1:
        return Fraction(1, (n + 2) * (n + 1)) if n >= 2 and n % 2 == 0 else Fraction(0)
    return sum(
        (Fraction(1, (b + 2) * (b + 1)) * prodhbl_sum(v - 1, n - b) for b in range(2, n - 1, 2)),
        Fraction(0),
    )


def multinomial_crosscheck(n: int, v: int, h: dict | None = None, seed: int = 0) -> bool:
    """Multinomial form with ``g_m = (m-2)! h_m`` equals ``n!`` times the plain form."""
    if h is None:
        import random

        rng = random.Random(seed)
        h = {m: Fraction(rng.randint(-99, 99), rng.randint(1, 99)) for m in range(4, n + 3, 2)}
    g = {m: math.factorial(m - 2) * hm for m, hm in h.items()}
    lhs = Fraction(0)
    rhs = Fraction(0)
    for b in compositions(n, v):
        multi = math.factorial(n)
        for bk in b:
            multi //= math.factorial(bk)
        lhs += multi * math.prod(g[bk + 2] for bk in b)
        rhs += math.prod(h[bk + 2] for bk in b)
    return lhs == math.factorial(n) * rhs


# ------------------------------------------------------------------ I_N


def _C_value(t, gamma):
    """``(e^(-gamma t) - e^-t)/t`` without cancellation at small ``t``."""
    if t == 0.0:
        return 1.0 - gamma
    if t < 1.0:
        return math.exp(-t) * math.expm1((1.0 - gamma) * t) / t
    return (math.exp(-gamma * t) - math.exp(-t)) / t


def _I_integrand_value(t, gamma, N):
    C = _C_value(t, gamma)
    return t * math.exp(-t) * C**N


def I_N(gamma: float, N: int, tol: float = 1e-12) -> float:
    """``int_gamma^1 ... int_gamma^1 (1 + sum gamma_i)^-2``; ``I_0 = 1``."""
    if N < 0:
        raise UsageError("N must be >= 0")
    if not 0.0 <= gamma <= 1.0:
        raise UsageError("gamma must lie in [0, 1]")
    if N == 0:
        return 1.0
    if gamma == 1.0:
        return 0.0
    val, err = integrate.quad(_I_integrand_value, 0.0, np.inf, args=(gamma, N), epsabs=tol, epsrel=tol, limit=200)
    if not np.isfinite(val) or err > 1e3 * tol * max(1.0, abs(val)):
        raise NumericError(f"I_{N}({gamma}) quadrature did not converge (err={err})")
    return val


def I_N_nested(gamma: float, N: int, tol: float = 1e-10) -> float:
    """Direct ``N``-dimensional quadrature (oracle, small ``N``)."""
    if N == 0:
        return 1.0
    f = lambda *x: 1.0 / (1.0 + sum(x)) ** 2  # noqa: E731
    val, _ = integrate.nquad(f, [[gamma, 1.0]] * N, opts={"epsabs": tol, "epsrel": tol})
    return val


def _taylor_mul(a, b):
    return np.convolve(a, b)[: len(a)]


def _C_taylor(t, gamma, L):
    """Taylor coefficients in mu of ``C = (e^(-gamma t) - e^-t)/t``, ``gamma = e^-mu``."""
    E = np.empty(L + 1)
    Eh = np.empty(L + 1)  # E_l / t
    E[0] = math.exp(-gamma * t)
    for l in range(1, L + 1):
        s = 0.0
        for k in range(l):
            s += math.comb(l - 1, k) * (-1) ** k * gamma * E[l - 1 - k]
        Eh[l] = s
        E[l] = t * s
    raw = np.empty(L + 1)
    raw[0] = _C_value(t, gamma)
    raw[1:] = Eh[1:]
    return raw / _FACT[: L + 1]


_FACT = np.array([math.factorial(k) for k in range(171)], dtype=np.float64)


def I_jets(mu: float, M_max: int, L: int, tol: float = 1e-12) -> np.ndarray:
    """Raw mu-derivatives of ``I_M(e^-mu)``: array ``(M_max+1, L+1)``.

    All entries come from one vector-valued adaptive quadrature; component
    ``(M, l)`` is scaled by ``2^(M+2l+2) (l+1)!`` so the error norm treats them
    evenly.
    """
    if mu < 0:
        raise UsageError("mu must be >= 0")
    gamma = math.exp(-mu)
    ls = np.arange(L + 1)
    Ms = np.arange(M_max + 1)
    scale = 2.0 ** (Ms[:, None] + 2 * ls[None, :] + 2) * _FACT[ls + 1][None, :]

    def f(t):
        c = _C_taylor(t, gamma, L)
        out = np.empty((M_max + 1, L + 1))
        p = np.zeros(L + 1)
        p[0] = 1.0
        out[0] = p
        for M in range(1, M_max + 1):
            p = _taylor_mul(p, c)
            out[M] = p
        w = t * math.exp(-t)
        return (w * out * _FACT[: L + 1][None, :] / scale).ravel()

    val, err = integrate.quad_vec(f, 0.0, np.inf, epsabs=tol, epsrel=tol, limit=2000)
    if not np.all(np.isfinite(val)):
        raise NumericError(f"I_N jets not finite at mu={mu}")
    if err > 1e4 * tol:
        raise NumericError(f"I_N jet quadrature did not converge at mu={mu} (err={err})")
    out = val.reshape(M_max + 1, L + 1) * scale
    if gamma == 1.0:
        out[1:, 0] = 0.0
    return out


# ------------------------------------------------------------------ J kernels


def series_cutoff(delta: float, beta: float, tol: float) -> int:
    """Smallest ``N`` whose certified relative tail ``(4d)^(N+1)/((1-4d)(1-b d/4))`` is below ``tol``."""
    if delta >= 1:
        raise UsageError("delta(mu) must be < 1")
    q = 4.0 * delta
    if q >= 0.9:
        raise NumericError(f"J series not certified: 4 delta = {q:.3g} exceeds 0.9")
    den = (1 - q) * (1 - abs(beta) * delta / 4)
    N = 0
    while q ** (N + 1) / den >= tol:
        N += 1
    return N


def J_kernel(
    v: int,
    mu: float,
    delta_jet: Jet,
    L: int,
    tol: float = 1e-13,
    c: float = C_LOOP,
    beta: float = 0.0,
    Ijets: np.ndarray | None = None,
) -> Jet:
    """Jet of ``J_v`` at ``mu`` of order ``L``."""
    d = float(delta_jet.value)
    if d >= 1:
        raise UsageError("delta(mu) must be < 1")
    dj = delta_jet.to_float().truncate(L)
    Nst = series_cutoff(d, beta, tol)
    if Ijets is None:
        Ijets = I_jets(mu, v + Nst, L)
    if Ijets.shape[0] < v + Nst + 1:
        raise UsageError("I_N jets do not reach the series cutoff")
    total = np.zeros(L + 1)
    dpow = Jet(np.eye(1, L + 1)[0], mu)
    for N in range(Nst + 1):
        term = dpow * Jet(Ijets[v + N, : L + 1], mu)
        total += math.comb(N + v + 1, N) * np.asarray(term.derivs)
        dpow = dpow * dj
    return Jet(c * total, mu)


def J_direct(v: int, mu: float, delta: float, c: float = C_LOOP, tol: float = 1e-12) -> float:
    """Resummed value ``c int u e^-u C^v / (1 - delta C)^(2+v) du`` (oracle)."""
    gamma = math.exp(-mu)

    def f(u):
        C = _C_value(u, gamma)
        return u * math.exp(-u) * C**v / (1.0 - delta * C) ** (2 + v)

    val, _ = integrate.quad(f, 0.0, np.inf, epsabs=tol, epsrel=tol, limit=200)
    return c * val


@dataclass
class JTable:
    mu_grid: list
    v_max: int
    order: int
    jets: dict
    delta_values: list
    c: float = C_LOOP
    params: dict = field(default_factory=dict)
    system: str = "1pi"

    def jet(self, v: int, i: int) -> Jet:
        return self.jets[v][i]

    def records(self):
        for v in range(self.v_max + 1):
            for i, mu in enumerate(self.mu_grid):
                for l, x in enumerate(self.jets[v][i].derivs):
                    yield v, l, mu, x

    def to_csv(self, path=None):
        from . import _io

        rows = (("1pi-J", v, l, mu, x) for v, l, mu, x in self.records())
        return _io.write_csv(path, ["system", "n", "l", "mu", "value"], rows)

    def to_json(self, path=None):
        from . import _io

        doc = {
            "system": "1pi",
            "table": "J",
            "params": self.params,
            "mu_grid": self.mu_grid,
            "records": [{"v": v, "l": l, "mu": mu, "value": x} for v, l, mu, x in self.records()],
        }
        return _io.write_json(path, doc)


def delta_of_mu(delta_end: float, beta: float, mu_max: float, mu: float) -> float:
    return delta_end / (1 + (mu_max - mu) * beta * delta_end)


def _jets_at(mu, delta_end, beta, mu_max, v_max, order, tol, c):
    d = delta_of_mu(delta_end, beta, mu_max, mu)
    dj = delta_family_jet(d, beta, order, mu)
    Nst = series_cutoff(d, beta, tol)
    Ij = I_jets(mu, v_max + Nst, order)
    return d, [J_kernel(v, mu, dj, order, tol, c, beta, Ij) for v in range(v_max + 1)]


def build_jtable(
    delta_end: float,
    beta: float,
    mu_max: float,
    mu_grid: Sequence,
    v_max: int,
    order: int,
    tol: float = 1e-13,
    c: float = C_LOOP,
    threads: int = 1,
) -> JTable:
    mu_grid = [float(m) for m in mu_grid]
    if any(m < 0 or m > mu_max for m in mu_grid):
        raise UsageError("mu grid must lie in [0, mu_max]")
    work = lambda mu: _jets_at(mu, delta_end, beta, mu_max, v_max, order, tol, c)  # noqa: E731
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            res = list(ex.map(work, mu_grid))
    else:
        res = [work(mu) for mu in mu_grid]
    jets = {v: [r[1][v] for r in res] for v in range(v_max + 1)}
    params = {"delta": delta_end, "beta": beta, "mu_max": mu_max, "tol": tol, "c": c}
    return JTable(mu_grid, v_max, order, jets, [r[0] for r in res], c, params)


# ------------------------------------------------------------------ h recursion


def composition_products(hs: dict, n: int, v_max: int, L: int) -> dict:
    """``P[v] = sum over compositions of n into v even parts of prod h_{b+2}`` (jets of order L)."""
    tr = {m: hs[m].truncate(L) for m in hs if m >= 4}
    # P[v][m] for m <= n
    P = {1: {m: tr[m + 2] for m in range(2, n + 1, 2) if m + 2 in tr}}
    for v in range(2, v_max + 1):
        P[v] = {}
        for m in range(2 * v, n + 1, 2):
            acc = None
            for b in range(2, m - 2 * (v - 1) + 1, 2):
                term = tr[b + 2] * P[v - 1][m - b]
                acc = term if acc is None else acc + term
            P[v][m] = acc
    return {v: P[v][n] for v in range(2, v_max + 1) if n in P[v]}


def onepi_step(hs: dict, Js: dict, n: int) -> Jet:
    """``h_{n+2}`` from ``h_2 .. h_n`` and the kernel jets at one point."""
    if n < 2 or n % 2:
        raise UsageError("n must be even >= 2")
    hn = hs[n]
    L = hn.order - 1
    if L < 0:
        raise UsageError(f"insufficient jet order to build h_{n + 2}")
    J0 = Js[0].to_float().truncate(L)
    if J0.value == 0:
        raise NumericError("J_0 has zero constant term")
    rhs = jet_shift(hn).to_float() * (2.0 / (n * (n - 1))) + hn.truncate(L).to_float() * ((n - 4) / (n * (n - 1)))
    if n >= 4:
        prods = composition_products(hs, n, n // 2, L)
        for v in range(2, n // 2 + 1):
            rhs = rhs + ((-1) ** v) * (Js[v - 1].to_float().truncate(L) * prods[v])
    return jet_div(rhs, J0)


@dataclass
class OnePiTable(FlowTable):
    jtable: JTable | None = None


def build_onepi_table(
    delta_end: float,
    beta: float,
    mu_max: float,
    n_max: int,
    l_max: int,
    mu_grid: Sequence,
    tol: float = 1e-13,
    c: float = C_LOOP,
    threads: int = 1,
) -> OnePiTable:
    """``h_n`` jets, ``n <= n_max`` even, with ``l_max`` derivatives kept at ``n_max``."""
    if n_max < 4 or n_max % 2:
        raise UsageError("n_max must be even >= 4")
    L = l_max + (n_max - 2) // 2
    v_max = max(0, n_max // 2 - 2)
    jt = build_jtable(delta_end, beta, mu_max, mu_grid, v_max, L - 1, tol, c, threads)
    entries = {n: [] for n in range(2, n_max + 1, 2)}
    for i, mu in enumerate(jt.mu_grid):
        d = jt.delta_values[i]
        hs = {2: -delta_family_jet(d, beta, L, mu)}
        Js = {v: jt.jet(v, i) for v in range(v_max + 1)}
        for n in range(2, n_max - 1, 2):
            hs[n + 2] = onepi_step(hs, Js, n)
        for n in entries:
            j = hs[n]
            if not np.all(np.isfinite(np.asarray(j.derivs, dtype=float))):
                raise NumericError(f"non-finite h_{n} at mu={mu}")
            entries[n].append(j)
    params = {"delta": delta_end, "beta": beta, "mu_max": mu_max, "c": c, "tol": tol}
    return OnePiTable(n_max, l_max, list(jt.mu_grid), entries, params, "1pi", jt)


def h4_closed_form(delta_mu: float, beta: float, J0: float) -> float:
    return (delta_mu - beta * delta_mu**2) / J0


def prop1pi4_suite(
    K: float,
    beta: float,
    delta: float,
    n_max: int,
    l_max: int,
    mu_grid: Sequence,
    mu_max: float | None = None,
    c: float = C_LOOP,
    tol: float = 1e-13,
    threads: int = 1,
    table: OnePiTable | None = None,
) -> BoundReport:
    mu_grid = list(mu_grid)
    mu_max = max(mu_grid) if mu_max is None else mu_max
    if table is None:
        table = build_onepi_table(delta, beta, mu_max, n_max, l_max, mu_grid, tol, c, threads)
    spec = BoundSpec(
        "pi4", {"K": K, "beta": beta, "delta": delta, "mu_max": mu_max, "c": c, "l_max": l_max}
    )
    return evaluate(spec, table)


def K_min(c: float = C_LOOP) -> float:
    return 4.0 / c


def inga_data(gammas: Sequence, N_max: int, l_max: int, tol: float = 1e-12) -> list:
    """``(gamma, N, jet of I_N in mu)`` for the envelope check."""
    out = []
    for g in gammas:
        mu = -math.log(g)
        arr = I_jets(mu, N_max, l_max, tol)
        for N in range(N_max + 1):
            out.append((g, N, Jet(arr[N], mu)))
    return out


def enumerate_prodhl(v: int, l: int, l_min: int = 1) -> Fraction:
    """Brute-force version of :func:`prodhl_sum` (oracle)."""
    tot = Fraction(0)
    for parts in itertools.product(range(l_min, l + 1), repeat=v):
        if sum(parts) == l:
            tot += math.prod(Fraction(1, (x + 2) * (x + 1)) for x in parts)
    return tot
