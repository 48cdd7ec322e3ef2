"""The connected mean-field hierarchy.

``f4 = (f2 (f2 - 1) + f2') / 3`` and, for even ``n >= 4``::

    f_{n+2} = [sum_{n1+n2=n+2, ni>=4} f_{n1} f_{n2} + f_n (2 f2 + 1 - 4/n)] / (n+1)
              + 2 f_n' / (n (n+1))

Every level consumes one derivative order, so ``f_n`` built from an order-L
``f2`` jet has order ``L - (n-2)/2``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Callable, Sequence

import numpy as np

from . import _io, _kernels
from .errors import NumericError, UsageError
from .jets import Jet, jet_shift

#: loop constant ``1/(16 pi^2)``
C_LOOP = 1.0 / (16.0 * math.pi**2)


def f4_from_f2(f2: Jet) -> Jet:
    if f2.order < 1:
        raise UsageError("f4 needs an f2 jet of order >= 1")
    lo = f2.truncate(f2.order - 1)
    return (lo * (lo - 1) + jet_shift(f2)) * _third(f2)


def _third(j: Jet):
    return Fraction(1, 3) if j.exact else 1.0 / 3.0


def fn_step(n: int, fs: dict, f2: Jet | None = None) -> Jet:
    """``f_{n+2}`` from ``fs = {2: f2, 4: f4, ..., n: f_n}``.

    Inputs are truncated to the order of ``f_n``; the result is one order lower.
    """
    if n < 4 or n % 2:
        raise UsageError("fn_step needs even n >= 4")
    f2 = fs[2] if f2 is None else f2
    missing = [m for m in range(4, n + 1, 2) if m not in fs]
    if missing:
        raise UsageError(f"fn_step({n}) is missing f_{missing[0]}")
    fn = fs[n]
    L = fn.order
    if L < 1:
        raise UsageError(f"insufficient jet order to build f_{n + 2}")
    if any(fs[m].order < L for m in range(4, n, 2)) or f2.order < L:
        raise UsageError(f"insufficient jet order to build f_{n + 2}")
    exact = fn.exact and f2.exact
    one = Fraction(1) if exact else 1.0
    tr = {m: fs[m].truncate(L - 1) for m in range(4, n + 1, 2)}
    f2t = f2.truncate(L - 1)
    acc = tr[n] * (2 * f2t + (one - Fraction(4, n) * one))
    for n1 in range(4, n - 1, 2):
        acc = acc + tr[n1] * tr[n + 2 - n1]
    return acc * (one / (n + 1)) + jet_shift(fn) * (one * 2 / (n * (n + 1)))


def jet_chain(f2: Jet, n_max: int) -> dict:
    """All ``f_n`` jets, ``n = 2..n_max`` even, at one anchor."""
    fs = {2: f2}
    if n_max >= 4:
        fs[4] = f4_from_f2(f2)
    for n in range(4, n_max - 1, 2):
        fs[n + 2] = fn_step(n, fs)
    return fs


@dataclass
class FlowTable:
    """``entries[n][i]`` is the jet of ``f_n`` (or ``h_n``) at ``mu_grid[i]``."""

    n_max: int
    l_max: int
    mu_grid: list
    entries: dict
    params: dict = field(default_factory=dict)
    system: str = "flow"

    def effective_order(self, n: int) -> int:
        return self.entries[n][0].order

    def jet(self, n: int, i: int) -> Jet:
        return self.entries[n][i]

    def value(self, n: int, l: int, i: int):
        return self.entries[n][i].derivs[l]

    @property
    def exact(self) -> bool:
        return self.entries[2][0].exact

    def ns(self):
        return sorted(self.entries)

    def records(self, l_max: int | None = None):
        """Rows ``(n, l, mu, value)`` with ``l <= min(l_max, effective order)``."""
        lm = self.l_max if l_max is None else l_max
        for n in self.ns():
            for i, mu in enumerate(self.mu_grid):
                j = self.entries[n][i]
                for l in range(min(lm, j.order) + 1):
                    yield n, l, mu, j.derivs[l]

    def to_csv(self, path=None, l_max: int | None = None):
        rows = ((self.system, n, l, mu, v) for n, l, mu, v in self.records(l_max))
        return _io.write_csv(path, ["system", "n", "l", "mu", "value"], rows)

    def to_json(self, path=None, l_max: int | None = None):
        doc = {
            "system": self.system,
            "params": self.params,
            "n_max": self.n_max,
            "l_max": self.l_max,
            "mu_grid": list(self.mu_grid),
            "records": [
                {"n": n, "l": l, "mu": mu, "value": v} for n, l, mu, v in self.records(l_max)
            ],
        }
        return _io.write_json(path, doc)


def required_order(n_max: int, l_max: int) -> int:
    """Order of ``f2`` jets needed so that ``f_{n_max}`` keeps ``l_max`` derivatives."""
    return l_max + (n_max - 2) // 2


def _family_params(family) -> dict:
    from .families import family_to_dict

    try:
        return family_to_dict(family)
    except UsageError:
        return {"kind": getattr(family, "kind", type(family).__name__)}


def build_table(
    family,
    n_max: int,
    l_max: int,
    mu_grid: Sequence,
    backend: str = "float",
    threads: int = 1,
) -> FlowTable:
    """Evaluate the hierarchy pointwise on ``mu_grid``.

    ``backend="rational"`` needs a family with rational parameters and a
    rational grid; ``"float"`` runs the batched kernel.
    """
    if n_max < 2 or n_max % 2:
        raise UsageError("n_max must be an even integer >= 2")
    if l_max < 0:
        raise UsageError("l_max must be >= 0")
    if backend not in ("float", "rational"):
        raise UsageError(f"unknown backend {backend!r}")
    mu_grid = list(mu_grid)
    if not mu_grid:
        raise UsageError("empty mu grid")
    L = required_order(n_max, l_max)
    f2jets = [family.jet(mu, L) for mu in mu_grid]
    params = {"family": _family_params(family), "backend": backend}
    if backend == "rational":
        if not all(j.exact for j in f2jets):
            raise UsageError("rational backend needs rational family parameters and grid")
        entries = {n: [] for n in range(2, n_max + 1, 2)}
        for j in f2jets:
            for n, fj in jet_chain(j, n_max).items():
                entries[n].append(fj)
        return FlowTable(n_max, l_max, mu_grid, entries, params)

    F2 = np.array([np.asarray(j.derivs, dtype=np.float64) for j in f2jets])
    if threads > 1 and len(mu_grid) > 1:
        chunks = np.array_split(np.arange(len(mu_grid)), threads)
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(lambda idx: _kernels.hierarchy_sweep(F2[idx], n_max), chunks))
        F = np.concatenate(parts, axis=1)
    else:
        F = _kernels.hierarchy_sweep(F2, n_max)
    entries = {}
    for i in range(n_max // 2):
        n = 2 * i + 2
        Lo = L - i
        block = F[i, :, : Lo + 1]
        bad = ~np.isfinite(block)
        if bad.any():
            g, l = np.argwhere(bad)[0]
            raise NumericError(f"non-finite f_{n} derivative l={l} at mu={mu_grid[g]}")
        entries[n] = [Jet(block[g].copy(), mu_grid[g]) for g in range(len(mu_grid))]
    return FlowTable(n_max, l_max, mu_grid, entries, params)


def fixed_point_sequence(f2, n_max: int) -> list:
    """``[f2, f4, ..., f_{n_max}]`` for a mu-independent two-point value.

    Exact when ``f2`` is rational.
    """
    if n_max < 2 or n_max % 2:
        raise UsageError("n_max must be an even integer >= 2")
    exact = isinstance(f2, Rational)
    f2 = Fraction(f2) if exact else float(f2)
    one = Fraction(1) if exact else 1.0
    f = {2: f2}
    if n_max >= 4:
        f[4] = f2 * (f2 - 1) * one / 3
    for n in range(4, n_max - 1, 2):
        s = sum((f[n1] * f[n + 2 - n1] for n1 in range(4, n - 1, 2)), 0 * one)
        f[n + 2] = (s + f[n] * (2 * f2 + 1 - one * 4 / n)) / (n + 1)
    return [f[n] for n in range(2, n_max + 1, 2)]


def rescale_to_A(f_n, n: int, alpha, c=C_LOOP):
    """``A_n = alpha^(n/2-2) c^((2-n)/2) f_n / n``."""
    if not alpha > 0:
        raise UsageError("alpha must be positive")
    if n < 2 or n % 2:
        raise UsageError("n must be even >= 2")
    k = n // 2
    return alpha ** (k - 2) * c ** (1 - k) * f_n / n


def rescale_to_G(h_n, n: int, alpha):
    """``G_n = alpha^(n/2-2) (n-2)! h_n``."""
    if not alpha > 0:
        raise UsageError("alpha must be positive")
    if n < 2 or n % 2:
        raise UsageError("n must be even >= 2")
    return alpha ** (n // 2 - 2) * math.factorial(n - 2) * h_n


@dataclass
class UVScan:
    mu_max_list: list
    at_zero: dict  # n -> [f_n(0) per mu_max]
    at_end: dict  # n -> [f_n(mu_max) per mu_max]
    params: dict = field(default_factory=dict)

    @staticmethod
    def diffs(seq):
        return [abs(b - a) for a, b in zip(seq, seq[1:])]

    def zero_decreasing(self, n) -> bool:
        """``|f_n(0)|`` strictly decreasing along the mu_max list."""
        s = [abs(v) for v in self.at_zero[n]]
        return all(b < a for a, b in zip(s, s[1:]))

    def end_diffs_shrinking(self, n) -> bool:
        """Successive differences of ``f_n(mu_max)`` strictly decreasing."""
        d = self.diffs(self.at_end[n])
        return all(b < a for a, b in zip(d, d[1:]))

    def end_decreasing(self, n) -> bool:
        s = [abs(v) for v in self.at_end[n]]
        return all(b < a for a, b in zip(s, s[1:]))

    def to_json(self, path=None):
        doc = {"params": self.params, "mu_max_list": self.mu_max_list, "series": []}
        for n in sorted(self.at_zero):
            doc["series"].append(
                {
                    "n": n,
                    "f_at_0": self.at_zero[n],
                    "f_at_mu_max": self.at_end[n],
                    "end_diffs": self.diffs(self.at_end[n]),
                    "zero_decreasing": self.zero_decreasing(n),
                    "end_diffs_shrinking": self.end_diffs_shrinking(n),
                }
            )
        return _io.write_json(path, doc)

    def to_csv(self, path=None):
        rows = []
        for n in sorted(self.at_zero):
            for m, a, b in zip(self.mu_max_list, self.at_zero[n], self.at_end[n]):
                rows.append(("uv", n, 0, 0, a, m))
                rows.append(("uv", n, 0, m, b, m))
        return _io.write_csv(path, ["system", "n", "l", "mu", "value", "mu_max"], rows)


def uv_limit_scan(
    family_template: Callable, mu_max_list: Sequence, n_max: int, backend: str = "float"
) -> UVScan:
    """Values of ``f_n`` at ``mu=0`` and ``mu=mu_max`` for each cutoff.

    ``family_template(mu_max)`` returns the family for that cutoff.
    """
    at0 = {n: [] for n in range(2, n_max + 1, 2)}
    at1 = {n: [] for n in range(2, n_max + 1, 2)}
    for m in mu_max_list:
        fam = family_template(m)
        zero = Fraction(0) if backend == "rational" else 0.0
        t = build_table(fam, n_max, 0, [zero, m], backend=backend)
        for n in at0:
            at0[n].append(t.value(n, 0, 0))
            at1[n].append(t.value(n, 0, 1))
    return UVScan(list(mu_max_list), at0, at1, {"n_max": n_max, "backend": backend})
