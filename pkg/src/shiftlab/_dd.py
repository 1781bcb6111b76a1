"""Vectorised double-double helpers for long sums of logarithms.

Cumulative log-moduli reach magnitudes of 10^5 while the ratio of two such
series can be as small as 10^-12. Plain float64 cumulative sums lose that
signal, so partial sums are kept as unevaluated pairs ``hi + lo``.
"""
from __future__ import annotations

import numpy as np

_SPLIT = 134217729.0  # 2**27 + 1


def two_sum(a, b):
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


def _split(a):
    c = _SPLIT * a
    hi = c - (c - a)
    return hi, a - hi


def two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    err = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, err


def normalize(hi, lo):
    return two_sum(hi, lo)


def add(x, y):
    """Sum of two double-double values ``(hi, lo)``."""
    s, e = two_sum(x[0], y[0])
    e = e + (x[1] + y[1])
    return normalize(s, e)


def scale_int(n, c):
    """Exact double-double value of ``n * c`` for integer arrays ``n``."""
    n = np.asarray(n, dtype=float)
    return two_prod(n, np.full_like(n, c))


def cumsum(x):
    """Double-double cumulative sum with a leading zero.

    Relies on ``np.cumsum`` being a sequential left fold, so that each
    rounding error can be recovered exactly with ``two_sum``.
    """
    x = np.asarray(x, dtype=float)
    s = np.concatenate([[0.0], np.cumsum(x)])
    a = s[:-1]
    _, err = two_sum(a, x)
    # two_sum recomputes a + x, which equals s[1:] under a sequential fold
    lo = np.concatenate([[0.0], np.cumsum(err)])
    return normalize(s, lo)


def sub(x, y):
    """Float value of ``x - y`` for double-double arrays."""
    return (x[0] - y[0]) + (x[1] - y[1])
