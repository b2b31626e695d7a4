"""Rank and normal-distribution primitives used by the scoring and test modules.

The normal survival function is computed from a power series / continued
fraction for erfc rather than the platform math library, so p-values are
reproducible bit-for-bit across environments.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

_SQRT_PI = math.sqrt(math.pi)
_SQRT_2 = math.sqrt(2.0)


def midranks(values: Sequence[float]) -> np.ndarray:
    """1-based ranks with ties assigned the mean rank of their group."""
    arr = np.asarray(values, dtype=float)
    order = np.argsort(arr, kind="mergesort")
    ranks = np.empty(arr.shape[0], dtype=float)
    i = 0
    n = arr.shape[0]
    while i < n:
        j = i
        while j + 1 < n and arr[order[j + 1]] == arr[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _erf_series(x: float) -> float:
    # Maclaurin series; used for |x| < 2 where cancellation stays benign.
    total = term = x
    x2 = x * x
    n = 0
    while True:
        n += 1
        term *= -x2 / n
        contrib = term / (2 * n + 1)
        total += contrib
        if abs(contrib) <= 1e-18 * abs(total):
            return total * 2.0 / _SQRT_PI

def _erfc_cf(x: float) -> float:
    # Legendre continued fraction via modified Lentz; accurate for x >= 2.
    tiny = 1e-300
    b = x
    c = 1.0 / tiny
    d = 1.0 / b
    f = d
    n = 0
    while n < 400:
        n += 1
        a = n / 2.0
        d = 1.0 / (x + a * d)
        c = x + a / c
        delta = c * d
        f *= delta
        if abs(delta - 1.0) < 1e-17:
            break
    return math.exp(-x * x) / _SQRT_PI * f


def erfc(x: float) -> float:
    """Complementary error function, accurate to ~1e-15 relative."""
    if x < 0.0:
        return 2.0 - erfc(-x)
    if x < 2.0:
        return 1.0 - _erf_series(x)
    if x > 27.0:
        return 0.0  # below double underflow of exp(-x^2)
    return _erfc_cf(x)


def normal_sf(z: float) -> float:
    """Standard normal survival function P(Z >= z)."""
    return 0.5 * erfc(z / _SQRT_2)


def normal_cdf(z: float) -> float:
    """Standard normal cumulative distribution function."""
    return 0.5 * erfc(-z / _SQRT_2)
