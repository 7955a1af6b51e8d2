"""Bessel functions of the first kind and their zeros.

J_m is evaluated with Miller's downward recurrence, normalized through
the identity J_0(x) + 2 (J_2(x) + J_4(x) + ...) = 1, which keeps the
package free of special-function tables.  Zeros are bracketed by a
coarse scan and polished with Brent's method; every returned zero is
re-checked to satisfy |J_m(a)| < 1e-12.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from ..errors import NumericalError


def bessel_j(m: int, x) -> np.ndarray | float:
    """J_m(x) for integer m >= 0, vectorized over x."""
    if m < 0:
        raise ValueError("order must be a nonnegative integer")
    xa = np.asarray(x, dtype=float)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa)
    out = np.empty_like(xa)
    sign = np.where((xa < 0.0) & (m % 2 == 1), -1.0, 1.0)
    ax = np.abs(xa)
    zero = ax < 1e-300
    out[zero] = 1.0 if m == 0 else 0.0
    if np.any(~zero):
        xv = ax[~zero]
        start = int(max(m, math.ceil(np.max(xv)))) + 28
        if start % 2:
            start += 1
        jp = np.zeros_like(xv)
        jc = np.full_like(xv, 1e-30)
        target = np.zeros_like(xv)
        norm = 2.0 * jc.copy()
        for n in range(start, 0, -1):
            jm1 = (2.0 * n / xv) * jc - jp
            jp, jc = jc, jm1
            if n - 1 == m:
                target = jc.copy()
            if (n - 1) % 2 == 0:
                norm += jc if n - 1 == 0 else 2.0 * jc
            big = np.abs(jc) > 1e250
            if np.any(big):
                scale = np.where(big, 1e-250, 1.0)
                jp = jp * scale
                jc = jc * scale
                target = target * scale
                norm = norm * scale
        out[~zero] = target / norm
    out *= sign
    return float(out[0]) if scalar else out


def bessel_j_prime(m: int, x) -> np.ndarray | float:
    """d/dx J_m(x) via J_m'(x) = (m/x) J_m(x) - J_{m+1}(x)."""
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    scalar = np.asarray(x).ndim == 0
    out = np.empty_like(xa)
    zero = np.abs(xa) < 1e-300
    out[zero] = 0.5 if m == 1 else 0.0
    if np.any(~zero):
        xv = xa[~zero]
        out[~zero] = (m / xv) * bessel_j(m, xv) - bessel_j(m + 1, xv)
    return float(out[0]) if scalar else out


@lru_cache(maxsize=None)
def zeros_of_j(m: int, count: int) -> tuple[float, ...]:
    """First ``count`` positive zeros of J_m, each accurate to ~1e-13."""
    if count < 1:
        raise ValueError("count must be positive")
    f = lambda t: float(bessel_j(m, t))
    zeros: list[float] = []
    x = m + 0.1
    fx = f(x)
    step = 0.25
    while len(zeros) < count:
        x2 = x + step
        fx2 = f(x2)
        if fx == 0.0:
            zeros.append(x)
        elif fx * fx2 < 0.0:
            root = brentq(f, x, x2, xtol=1e-14, rtol=8.9e-16)
            if abs(f(root)) > 1e-12:
                raise NumericalError(f"zero of J_{m} near {root} failed the residual check")
            zeros.append(root)
        x, fx = x2, fx2
        if x > m + 8.0 * (count + 2):
            raise NumericalError(f"could not bracket {count} zeros of J_{m}")
    return tuple(zeros[:count])
