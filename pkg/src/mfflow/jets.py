"""Truncated Taylor jets in the logarithmic flow variable mu.

A :class:`Jet` stores *raw* derivatives ``d^l f / d mu^l`` at one anchor
point, ``l = 0..order``.  Two backends share the same code paths:

* float: ``derivs`` is a float64 array and products go through the batched
  kernel in :mod:`mfflow._kernels`;
* rational: ``derivs`` is an object array of :class:`fractions.Fraction` and
  every operation is exact.

Mixing a rational jet with a float jet yields a float jet.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

import numpy as np

from . import _kernels
from .errors import NumericError, UsageError


def _as_array(values):
    values = list(values) if not isinstance(values, np.ndarray) else values
    arr = np.asarray(values)
    if arr.dtype == object or any(isinstance(v, Fraction) for v in np.ravel(arr)):
        out = np.empty(len(arr), dtype=object)
        for i, v in enumerate(arr):
            if isinstance(v, Rational):
                out[i] = Fraction(v)
            else:
                return np.asarray(arr, dtype=np.float64)
        return out
    return np.asarray(arr, dtype=np.float64)


@dataclass(frozen=True, eq=False)
class Jet:
    derivs: np.ndarray
    anchor_mu: float | Fraction = 0.0

    def __post_init__(self):
        arr = _as_array(self.derivs)
        if arr.ndim != 1 or len(arr) == 0:
            raise UsageError("a jet needs a non-empty 1-d list of derivatives")
        if arr.dtype != object and not np.all(np.isfinite(arr)):
            raise NumericError("non-finite jet entry at mu=%r" % (self.anchor_mu,))
        arr.setflags(write=False)
        object.__setattr__(self, "derivs", arr)

    # -- basic properties
    @property
    def order(self) -> int:
        return len(self.derivs) - 1

    @property
    def exact(self) -> bool:
        return self.derivs.dtype == object

    @property
    def value(self):
        return self.derivs[0]

    def __len__(self):
        return len(self.derivs)

    def __getitem__(self, l):
        return self.derivs[l]

    def __repr__(self):
        vals = ", ".join(str(v) for v in self.derivs)
        return f"Jet([{vals}], anchor_mu={self.anchor_mu})"

    def tolist(self):
        return list(self.derivs)

    def truncate(self, order: int) -> "Jet":
        if order > self.order or order < 0:
            raise UsageError(f"cannot truncate order {self.order} jet to {order}")
        return Jet(self.derivs[: order + 1], self.anchor_mu)

    def to_float(self) -> "Jet":
        return Jet(np.array([float(v) for v in self.derivs]), float(self.anchor_mu))

    def taylor(self):
        """Taylor coefficients ``derivs[l] / l!``."""
        return [_div(v, math.factorial(l)) for l, v in enumerate(self.derivs)]

    @classmethod
    def from_taylor(cls, coeffs, anchor_mu=0.0) -> "Jet":
        return cls([c * math.factorial(l) for l, c in enumerate(coeffs)], anchor_mu)

    # -- operator sugar
    def __add__(self, other):
        return jet_add(self, _lift(other, self))

    __radd__ = __add__

    def __neg__(self):
        return jet_scale(self, -1)

    def __sub__(self, other):
        return jet_add(self, -_lift(other, self))

    def __rsub__(self, other):
        return jet_add(_lift(other, self), -self)

    def __mul__(self, other):
        if isinstance(other, Jet):
            return jet_mul(self, other)
        return jet_scale(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return jet_div(self, other)
        return jet_scale(self, _inv(other))

    def __rtruediv__(self, other):
        return jet_div(_lift(other, self), self)

    def __pow__(self, k: int):
        return jet_pow(self, k)


def _inv(x):
    if isinstance(x, Rational):
        return Fraction(1) / Fraction(x)
    return 1.0 / x


def _div(v, k):
    if isinstance(v, Fraction):
        return v / k
    return v / k


def _lift(other, like: Jet) -> Jet:
    if isinstance(other, Jet):
        return other
    return constant_jet(other, like.order, like.anchor_mu, exact=like.exact and isinstance(other, Rational))


def _check_pair(a: Jet, b: Jet):
    if a.order != b.order:
        raise UsageError(f"jet order mismatch: {a.order} vs {b.order}")
    if a.anchor_mu != b.anchor_mu:
        raise UsageError(f"jet anchor mismatch: {a.anchor_mu} vs {b.anchor_mu}")


def _pair_arrays(a: Jet, b: Jet):
    if a.exact and b.exact:
        return a.derivs, b.derivs, True
    return (np.asarray(a.derivs, dtype=np.float64), np.asarray(b.derivs, dtype=np.float64), False)


# ---------------------------------------------------------------- constructors


def constant_jet(c, order: int, anchor_mu=0.0, exact=None) -> Jet:
    if exact is None:
        exact = isinstance(c, Rational)
    zero = Fraction(0) if exact else 0.0
    vals = [Fraction(c) if exact else float(c)] + [zero] * order
    return Jet(np.array(vals, dtype=object if exact else np.float64), anchor_mu)


def zero_jet(order: int, anchor_mu=0.0, exact=False) -> Jet:
    return constant_jet(Fraction(0) if exact else 0.0, order, anchor_mu, exact)


def unit_jet(order: int, anchor_mu=0.0, exact=False) -> Jet:
    return constant_jet(Fraction(1) if exact else 1.0, order, anchor_mu, exact)


def variable_jet(mu, order: int, slope=1) -> Jet:
    """Jet of the affine map ``mu -> slope * mu`` at ``mu``."""
    exact = isinstance(mu, Rational) and isinstance(slope, Rational)
    vals = [slope * mu, slope] + [0] * (order - 1)
    vals = vals[: order + 1]
    if exact:
        return Jet(np.array([Fraction(v) for v in vals], dtype=object), mu)
    return Jet(np.array(vals, dtype=np.float64), mu)


def delta_family_jet(delta_at_mu, beta, order: int, anchor_mu=0.0) -> Jet:
    """Jet of a solution of ``d delta / d mu = beta * delta**2``.

    ``derivs[l] = beta**l * delta**(l+1) * l!``.
    """
    if not delta_at_mu > 0:
        raise UsageError("delta_at_mu must be positive")
    exact = isinstance(delta_at_mu, Rational) and isinstance(beta, Rational)
    if exact:
        d, b = Fraction(delta_at_mu), Fraction(beta)
        vals = [b**l * d ** (l + 1) * math.factorial(l) for l in range(order + 1)]
        return Jet(np.array(vals, dtype=object), anchor_mu)
    d, b = float(delta_at_mu), float(beta)
    # derivs[l] = derivs[l-1] * l * beta * delta
    steps = np.arange(1, order + 1) * (b * d)
    vals = d * np.concatenate([[1.0], np.cumprod(steps)])
    if not np.all(np.isfinite(vals)):
        raise NumericError("delta jet overflows at order %d" % order)
    return Jet(vals, anchor_mu)


def exp_neg_mu_jet(mu, order: int) -> Jet:
    """Jet of ``gamma(mu) = exp(-mu)``."""
    if mu < 0:
        raise UsageError("mu must be >= 0")
    g = math.exp(-float(mu))
    return Jet(np.array([(-1) ** l * g for l in range(order + 1)], dtype=np.float64), mu)


# ---------------------------------------------------------------- arithmetic


def jet_add(a: Jet, b: Jet) -> Jet:
    _check_pair(a, b)
    x, y, exact = _pair_arrays(a, b)
    return Jet(x + y, a.anchor_mu)


def jet_scale(a: Jet, s) -> Jet:
    if a.exact and isinstance(s, Rational):
        return Jet(a.derivs * Fraction(s), a.anchor_mu)
    return Jet(np.asarray(a.derivs, dtype=np.float64) * float(s), a.anchor_mu)


def _mul_exact(x, y):
    L = len(x) - 1
    out = np.empty(L + 1, dtype=object)
    for l in range(L + 1):
        out[l] = sum((math.comb(l, k) * x[k] * y[l - k] for k in range(l + 1)), Fraction(0))
    return out


def jet_mul(a: Jet, b: Jet) -> Jet:
    """Leibniz product of two jets of equal order and anchor."""
    _check_pair(a, b)
    x, y, exact = _pair_arrays(a, b)
    if exact:
        return Jet(_mul_exact(x, y), a.anchor_mu)
    return Jet(_kernels.leibniz_mul(x, y)[0], a.anchor_mu)


def jet_shift(a: Jet) -> Jet:
    """The derivative jet: order drops by one."""
    if a.order < 1:
        raise UsageError("cannot differentiate an order-0 jet")
    return Jet(a.derivs[1:], a.anchor_mu)


def jet_pow(a: Jet, k: int) -> Jet:
    if k < 0:
        return jet_reciprocal(jet_pow(a, -k))
    result = unit_jet(a.order, a.anchor_mu, exact=a.exact)
    base = a
    while k:
        if k & 1:
            result = jet_mul(result, base)
        k >>= 1
        if k:
            base = jet_mul(base, base)
    return result


def jet_reciprocal(a: Jet) -> Jet:
    """Jet of ``1/f``; requires a nonzero constant term."""
    if a.derivs[0] == 0:
        raise NumericError("reciprocal of a jet with zero constant term")
    t = a.taylor()
    r = [_inv(t[0]) if a.exact else 1.0 / float(t[0])]
    for k in range(1, len(t)):
        s = sum(t[j] * r[k - j] for j in range(1, k + 1))
        r.append(-s * r[0])
    return Jet.from_taylor(r, a.anchor_mu)


def jet_div(a: Jet, b: Jet) -> Jet:
    return jet_mul(a, jet_reciprocal(b))


def jet_exp(a: Jet) -> Jet:
    """Jet of ``exp(f)`` (float backend)."""
    t = [float(v) for v in a.taylor()]
    y = [math.exp(t[0])]
    for k in range(1, len(t)):
        y.append(sum(j * t[j] * y[k - j] for j in range(1, k + 1)) / k)
    return Jet.from_taylor(y, a.anchor_mu)


def jets_close(a: Jet, b: Jet, rtol=1e-12, atol=0.0) -> bool:
    if a.order != b.order:
        return False
    x = np.asarray(a.derivs, dtype=np.float64)
    y = np.asarray(b.derivs, dtype=np.float64)
    return bool(np.allclose(x, y, rtol=rtol, atol=atol))


def jets_equal(a: Jet, b: Jet) -> bool:
    return a.order == b.order and all(x == y for x, y in zip(a.derivs, b.derivs))
