"""Float64 hot loops: batched Leibniz products and the connected hierarchy.

Every kernel exists twice, a numba ``@njit`` version and a plain numpy
version with identical semantics.  ``leibniz_mul`` and ``hierarchy_sweep``
dispatch to one of them according to :mod:`mfflow._config`.  Both variants
are importable directly so tests and the benchmark can compare them.
"""

import numpy as np

from . import _config


def binomial_table(order):
    """Pascal triangle as float64, ``B[l, k] = C(l, k)``."""
    B = np.zeros((order + 1, order + 1))
    for l in range(order + 1):
        B[l, 0] = 1.0
        for k in range(1, l + 1):
            B[l, k] = B[l - 1, k - 1] + (B[l - 1, k] if k <= l - 1 else 0.0)
    return B


# ---------------------------------------------------------------- numpy path


def leibniz_mul_numpy(a, b):
    """Raw-derivative product of jets stored along the last axis."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    L = a.shape[-1] - 1
    B = binomial_table(L)
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape))
    for l in range(L + 1):
        # sum_k C(l,k) a_k b_{l-k}
        out[..., l] = np.sum(B[l, : l + 1] * a[..., : l + 1] * b[..., l::-1], axis=-1)
    return out


def hierarchy_sweep_numpy(f2, n_max):
    """Connected hierarchy for a batch of f2 jets.

    ``f2`` has shape ``(G, L+1)``.  Returns ``F`` of shape
    ``(n_max//2, G, L+1)`` with ``F[i]`` the jets of ``f_{2i+2}``; entries past
    the effective order ``L - i`` are NaN.
    """
    f2 = np.asarray(f2, dtype=np.float64)
    G, L1 = f2.shape
    L = L1 - 1
    levels = n_max // 2
    F = np.full((levels, G, L1), np.nan)
    F[0] = f2
    if levels < 2:
        return F
    if L < 1:
        raise ValueError("f2 jets need order >= 1 to reach f4")
    # f4 = (f2^2 - f2)/3 + f2'/3
    sq = leibniz_mul_numpy(f2, f2)
    F[1, :, :L] = (sq[:, :L] - f2[:, :L]) / 3.0 + f2[:, 1:] / 3.0
    for i in range(1, levels - 1):
        n = 2 * i + 2
        Lo = L - i  # order of f_n; f_{n+2} gets Lo - 1
        if Lo < 1:
            raise ValueError("insufficient jet order for f_%d" % (n + 2))
        acc = np.zeros((G, Lo))
        for j in range(1, i):  # n1 = 2j+2 >= 4, n2 = n+2-n1 >= 4
            k = i - j
            prod = leibniz_mul_numpy(F[j, :, : Lo + 1], F[k, :, : Lo + 1])
            acc += prod[:, :Lo]
        fn = F[i, :, : Lo + 1]
        lin = 2.0 * leibniz_mul_numpy(fn, f2[:, : Lo + 1])[:, :Lo] + (1.0 - 4.0 / n) * fn[:, :Lo]
        F[i + 1, :, :Lo] = (acc + lin) / (n + 1) + 2.0 / (n * (n + 1)) * fn[:, 1:]
    return F


# ---------------------------------------------------------------- numba path

if _config.HAVE_NUMBA:
    from numba import njit

    @njit(**_config.NUMBA_OPTS)
    def _binom_nb(order):
        B = np.zeros((order + 1, order + 1))
        for l in range(order + 1):
            B[l, 0] = 1.0
            for k in range(1, l + 1):
                B[l, k] = B[l - 1, k - 1] + (B[l - 1, k] if k <= l - 1 else 0.0)
        return B

    @njit(**_config.NUMBA_OPTS)
    def _mul_into(a, b, B, out, upto):
        for l in range(upto):
            s = 0.0
            for k in range(l + 1):
                s += B[l, k] * a[k] * b[l - k]
            out[l] = s

    @njit(**_config.NUMBA_OPTS)
    def leibniz_mul_numba(a, b):
        G, L1 = a.shape
        B = _binom_nb(L1 - 1)
        out = np.zeros((G, L1))
        for g in range(G):
            _mul_into(a[g], b[g], B, out[g], L1)
        return out

    @njit(**_config.NUMBA_OPTS)
    def hierarchy_sweep_numba(f2, n_max):
        G, L1 = f2.shape
        L = L1 - 1
        levels = n_max // 2
        F = np.full((levels, G, L1), np.nan)
        for g in range(G):
            for l in range(L1):
                F[0, g, l] = f2[g, l]
        if levels < 2:
            return F
        B = _binom_nb(L)
        tmp = np.zeros(L1)
        for g in range(G):
            _mul_into(f2[g], f2[g], B, tmp, L)
            for l in range(L):
                F[1, g, l] = (tmp[l] - f2[g, l]) / 3.0 + f2[g, l + 1] / 3.0
        for i in range(1, levels - 1):
            n = 2 * i + 2
            Lo = L - i
            for g in range(G):
                for l in range(Lo):
                    acc = 0.0
                    for j in range(1, i):
                        k = i - j
                        for m in range(l + 1):
                            acc += B[l, m] * F[j, g, m] * F[k, g, l - m]
                    lin = 0.0
                    for m in range(l + 1):
                        lin += B[l, m] * F[i, g, m] * f2[g, l - m]
                    lin = 2.0 * lin + (1.0 - 4.0 / n) * F[i, g, l]
                    F[i + 1, g, l] = (acc + lin) / (n + 1) + 2.0 / (n * (n + 1)) * F[i, g, l + 1]
        return F

else:  # pragma: no cover
    leibniz_mul_numba = None
    hierarchy_sweep_numba = None


def leibniz_mul(a, b):
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    if _config.USE_NUMBA:
        a, b = np.broadcast_arrays(a, b)
        return leibniz_mul_numba(np.ascontiguousarray(a), np.ascontiguousarray(b))
    with np.errstate(over="ignore", invalid="ignore"):
        return leibniz_mul_numpy(a, b)


def hierarchy_sweep(f2, n_max):
    f2 = np.ascontiguousarray(np.atleast_2d(np.asarray(f2, dtype=np.float64)))
    if n_max >= 4 and f2.shape[1] - 1 < n_max // 2 - 1:
        raise ValueError("f2 jets need order >= n_max/2 - 1")
    if _config.USE_NUMBA:
        return hierarchy_sweep_numba(f2, int(n_max))
    # overflow shows up as inf/nan in the result; callers report it
    with np.errstate(over="ignore", invalid="ignore"):
        return hierarchy_sweep_numpy(f2, int(n_max))
