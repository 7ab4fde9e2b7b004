"""Numpy reference implementation of the numerical kernels.

Every function here has a compiled twin in ``_core`` (Cython).  The two
backends must agree to near machine precision; ``tests/test_kernels.py``
enforces that.  This module is the fallback selected at import time when
the extension is unavailable.

Conventions shared by both backends:

* ``x`` / ``u`` arguments are 1D float64 arrays.
* Burr means the three-parameter Burr XII family with shapes ``c``, ``k``
  and scale ``lam``:  F(x) = 1 - (1 + (x/lam)^c)^(-k) on x >= 0.
* Beta is the standard two-parameter family on [0, 1].
* PPF bisection tolerance is 1e-12 in the measurement coordinate.
"""

from __future__ import annotations

import numpy as np
from scipy.special import betainc, betaln

NAME = "python"

_PPF_TOL = 1e-12


def burr_pdf(x, c, k, lam):
    """Burr XII density, zero for x < 0; may be +inf at x = 0 when c < 1."""
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    pos = x > 0.0
    logt = np.log(x[pos] / lam)
    # log form keeps t^c from overflowing for large shapes
    out[pos] = np.exp(
        np.log(c * k / lam)
        + (c - 1.0) * logt
        - (k + 1.0) * np.logaddexp(0.0, c * logt)
    )
    zero = x == 0.0
    if np.any(zero):
        if c < 1.0:
            out[zero] = np.inf
        elif c == 1.0:
            out[zero] = k / lam
    return out


def burr_cdf(x, c, k, lam):
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    pos = x > 0.0
    logt = np.log(x[pos] / lam)
    out[pos] = -np.expm1(-k * np.logaddexp(0.0, c * logt))
    return out


def burr_ppf(u, c, k, lam):
    """Closed-form inverse of the Burr XII CDF; u == 1 maps to inf."""
    u = np.asarray(u, dtype=np.float64)
    with np.errstate(divide="ignore"):
        return lam * np.expm1(-np.log1p(-u) / k) ** (1.0 / c)


def burr_log_likelihood(x, c, k, lam):
    """Sum of log Burr densities; -inf when any point has zero density."""
    x = np.asarray(x, dtype=np.float64)
    if np.any(x <= 0.0):
        return -np.inf
    logt = np.log(x / lam)
    logs = (
        np.log(c * k / lam)
        + (c - 1.0) * logt
        - (k + 1.0) * np.logaddexp(0.0, c * logt)
    )
    return float(np.sum(logs))


def beta_pdf(x, a, b):
    """Beta density on [0, 1]; may be +inf at boundary for shapes < 1."""
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    inside = (x > 0.0) & (x < 1.0)
    xi = x[inside]
    out[inside] = np.exp(
        (a - 1.0) * np.log(xi) + (b - 1.0) * np.log1p(-xi) - betaln(a, b)
    )
    if np.any(x == 0.0):
        out[x == 0.0] = _beta_edge(a, b)
    if np.any(x == 1.0):
        out[x == 1.0] = _beta_edge(b, a)
    return out


def _beta_edge(shape_here, shape_other):
    if shape_here < 1.0:
        return np.inf
    if shape_here > 1.0:
        return 0.0
    return float(np.exp(-betaln(shape_here, shape_other)))


def beta_cdf(x, a, b):
    x = np.asarray(x, dtype=np.float64)
    return betainc(a, b, np.clip(x, 0.0, 1.0))


def beta_ppf(u, a, b):
    """Inverse beta CDF by bisection on [0, 1] to 1e-12.

    Exact-edge targets return the support endpoints directly; bisection
    against a numerically saturated CDF would land on an arbitrary
    interior point instead.
    """
    u = np.asarray(u, dtype=np.float64)
    lo = np.zeros_like(u)
    hi = np.ones_like(u)
    # 0.5 * 2^-n < 1e-12 after 40 halvings of the unit interval
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        below = betainc(a, b, mid) < u
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    out = 0.5 * (lo + hi)
    return np.where(u <= 0.0, 0.0, np.where(u >= 1.0, 1.0, out))


def beta_log_likelihood(x, a, b):
    """Sum of log beta densities; -inf when any point has zero density."""
    x = np.asarray(x, dtype=np.float64)
    if np.any((x < 0.0) | (x > 1.0)):
        return -np.inf
    edge = (x == 0.0) | (x == 1.0)
    if np.any(edge):
        dens = beta_pdf(x[edge], a, b)
        if np.any(dens == 0.0):
            return -np.inf
        if np.any(np.isinf(dens)):
            return np.inf
    inside = ~edge
    xi = x[inside]
    n_edge = int(np.count_nonzero(edge))
    total = float(
        np.sum((a - 1.0) * np.log(xi) + (b - 1.0) * np.log1p(-xi))
        - (xi.size + n_edge) * betaln(a, b)
    )
    if n_edge:
        total += float(np.sum(np.log(beta_pdf(x[edge], a, b))))
        total += n_edge * float(betaln(a, b))
    return total


def count_in_intervals(x, lows, highs, closed_hi):
    """Count points in a union of intervals, half-open [lo, hi).

    ``closed_hi`` marks intervals whose upper edge is the support endpoint
    and therefore counts as included.
    """
    x = np.sort(np.asarray(x, dtype=np.float64))
    lows = np.asarray(lows, dtype=np.float64)
    highs = np.asarray(highs, dtype=np.float64)
    closed_hi = np.asarray(closed_hi, dtype=bool)
    total = 0
    for lo, hi, closed in zip(lows, highs, closed_hi):
        side = "right" if closed else "left"
        total += int(
            np.searchsorted(x, hi, side=side) - np.searchsorted(x, lo, side="left")
        )
    return total


def refine_crossings(glo_sign, lo, hi, gfun, tol=_PPF_TOL):
    """Bisect sign changes of ``gfun`` inside brackets ``[lo, hi]``.

    ``glo_sign`` holds the sign of g at each left endpoint; the right
    endpoint is assumed to carry the opposite strict sign.  ``gfun`` must
    accept a 1D array.  Returns the refined crossing locations.
    """
    lo = np.array(lo, dtype=np.float64, copy=True)
    hi = np.array(hi, dtype=np.float64, copy=True)
    glo_sign = np.asarray(glo_sign, dtype=np.float64)
    if lo.size == 0:
        return lo
    width = float(np.max(hi - lo))
    n_iter = max(1, int(np.ceil(np.log2(max(width, tol) / tol))))
    for _ in range(n_iter):
        mid = 0.5 * (lo + hi)
        gm = gfun(mid)
        same = np.sign(gm) == glo_sign
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
    return 0.5 * (lo + hi)
