"""Special functions used by the Levy-measure computations.

``lower_incomplete_gamma`` is implemented directly (series below the
crossing point, continued fraction above) because it sits inside the
Levy densities and their asymptotics; relative accuracy target 1e-12.
The tail formulas additionally need the upper incomplete gamma with
parameter in (-1, 0], which scipy does not expose; ``upper_gamma_ext``
extends ``scipy.special.gammaincc`` via the one-step recurrence plus an
asymptotic series for large arguments.
"""

from __future__ import annotations

import numpy as np
from scipy.special import exp1, gammaincc, gammaln

_EPS = np.finfo(float).eps
_MAX_ITER = 600


def _lig_series(s, x):
    """gamma(s, x) for x < s + 1 via the ascending series."""
    s = np.broadcast_to(np.asarray(s, dtype=float), x.shape).copy()
    total = 1.0 / s
    term = total.copy()
    active = np.ones(x.shape, dtype=bool)
    denom = s.copy()
    for _ in range(_MAX_ITER):
        denom[active] += 1.0
        term[active] *= x[active] / denom[active]
        total[active] += term[active]
        active &= np.abs(term) > _EPS * np.abs(total)
        if not active.any():
            break
    return np.exp(s * np.log(np.maximum(x, np.finfo(float).tiny)) - x) * total


def _uig_cf(s, x):
    """Gamma(s, x) for x >= s + 1 via the Lentz continued fraction."""
    s = np.broadcast_to(np.asarray(s, dtype=float), x.shape)
    tiny = 1e-300
    b = x + 1.0 - s
    c = np.full(x.shape, 1.0 / tiny)
    d = 1.0 / b
    h = d.copy()
    active = np.ones(x.shape, dtype=bool)
    for i in range(1, _MAX_ITER):
        an = -i * (i - s)
        b = b + 2.0
        d = an * d + b
        d = np.where(np.abs(d) < tiny, tiny, d)
        c = b + an / c
        c = np.where(np.abs(c) < tiny, tiny, c)
        d = 1.0 / d
        delta = d * c
        h = np.where(active, h * delta, h)
        active &= np.abs(delta - 1.0) > _EPS
        if not active.any():
            break
    return np.exp(-x + s * np.log(x)) * h


def lower_incomplete_gamma(s, x):
    """Unregularized lower incomplete gamma integral on [0, x].

    Requires s > 0 and x >= 0; gamma(s, 0) = 0 and gamma(s, x) tends to
    Gamma(s) as x grows.
    """
    s_arr = np.asarray(s, dtype=float)
    x_arr = np.asarray(x, dtype=float)
    if np.any(s_arr <= 0):
        raise ValueError("s must be positive")
    if np.any(x_arr < 0):
        raise ValueError("x must be nonnegative")
    s_b, x_b = np.broadcast_arrays(s_arr, x_arr)
    out = np.empty(x_b.shape, dtype=float)
    series = x_b < s_b + 1.0
    if series.any():
        out[series] = _lig_series(s_b[series], x_b[series])
    cf = ~series
    if cf.any():
        full = np.exp(gammaln(s_b[cf]))
        out[cf] = full - _uig_cf(s_b[cf], x_b[cf])
    out[x_b == 0.0] = 0.0
    if np.isscalar(s) and np.isscalar(x):
        return float(out)
    return out


def _uig_asymptotic(a, x):
    """Gamma(a, x) ~ x^(a-1) e^-x sum_k (a-1)...(a-k) / x^k for large x."""
    a = np.broadcast_to(np.asarray(a, dtype=float), x.shape)
    total = np.ones(x.shape)
    term = np.ones(x.shape)
    factor = a - 1.0
    active = np.ones(x.shape, dtype=bool)
    for k in range(1, 60):
        new = term * (a - float(k)) / x if k > 1 else term * factor / x
        # stop once terms no longer shrink (asymptotic series)
        active &= np.abs(new) < np.abs(term)
        term = np.where(active, new, 0.0)
        total += term
        active &= np.abs(term) > _EPS * np.abs(total)
        if not active.any():
            break
    return np.exp((a - 1.0) * np.log(x) - x) * total


def upper_gamma_ext(a: float, x):
    """Unregularized Gamma(a, x) = int_x^inf t^(a-1) e^-t dt for a > -1.

    Handles the a in (-1, 0] range needed by the tilted-tail formulas;
    a = 0 is the exponential integral E1.
    """
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr <= 0) and a <= 0:
        raise ValueError("x must be positive when a <= 0")
    if a > 0:
        out = np.exp(gammaln(a)) * gammaincc(a, x_arr)
    elif a == 0.0:
        out = exp1(x_arr)
    else:
        out = np.empty(x_arr.shape, dtype=float)
        large = x_arr > 32.0
        if large.any():
            out[large] = _uig_asymptotic(np.full(large.sum(), a), x_arr[large])
        small = ~large
        if small.any():
            xs = x_arr[small]
            upper_next = np.exp(gammaln(a + 1.0)) * gammaincc(a + 1.0, xs)
            out[small] = (np.exp(a * np.log(xs) - xs) - upper_next) / (-a)
    if np.isscalar(x):
        return float(out)
    return out
