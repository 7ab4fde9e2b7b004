"""Level-set construction of optimal measurement subdomains.

For a mixture with prevalence ``q``, the ratio ``q (P - N) / N`` orders
the axis by how favorable each point is to the positive population.  The
plus-branch domain at level ``delta`` collects the points where
``q (P - N) > delta N`` holds strictly; the minus branch flips the
inequality.  Sweeping ``delta`` sweeps the mixture measure of the domain
monotonically, so a target measure is solved by bracketing and bisection
on ``delta``.  When the ratio is constant on a region of positive
measure, the measure jumps as ``delta`` crosses that level; the solver
then fills just enough of the tie region, taking its left-most portion.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels
from .dist import DomainSet, measure, mixture_measure
from .errors import UnattainableTargetError

DEFAULT_NODES = 4096
DEFAULT_MEASURE_TOL = 1e-8
_EDGE_TOL = 1e-12
# levels beyond this are treated as the infinite-level limit when probing
# the attainable range of targets
_LEVEL_CAP = 1e15


def bathtub_ratio(pop, r):
    """The level function ``q (P(r) - N(r)) / N(r)``.

    Where ``N`` vanishes the ratio is ``+inf`` if ``P`` is positive there
    and 0 when both densities vanish.  The value never drops below ``-q``.
    """
    r = np.asarray(r, dtype=np.float64)
    scalar = r.ndim == 0
    r1 = np.atleast_1d(r)
    p = np.atleast_1d(pop.positive.pdf(r1))
    n = np.atleast_1d(pop.negative.pdf(r1))
    out = np.empty_like(p)
    pos_n = n > 0.0
    with np.errstate(invalid="ignore"):
        out[pos_n] = pop.q * (p[pos_n] - n[pos_n]) / n[pos_n]
    zero_n = ~pos_n
    out[zero_n] = np.where(p[zero_n] > 0.0, np.inf, 0.0)
    # an unbounded P against finite N is still +inf up the same branch
    out[np.isnan(out)] = np.inf
    return float(out[0]) if scalar else out


@lru_cache(maxsize=64)
def _scan_table(pop, nodes):
    """Uniform scan of q(P - N) and N over the support; cached per pop."""
    lo, hi = pop.support
    r = np.linspace(lo, hi, int(nodes))
    a = pop.q * (pop.positive.pdf(r) - pop.negative.pdf(r))
    b = pop.negative.pdf(r)
    # unbounded endpoint densities break the sign arithmetic; treat the
    # node as sitting just inside instead
    for arr in (a, b):
        bad = ~np.isfinite(arr)
        if np.any(bad):
            shift = (hi - lo) * 1e-9
            r_in = np.clip(r[bad], lo + shift, hi - shift)
            if arr is a:
                arr[bad] = pop.q * (pop.positive.pdf(r_in) - pop.negative.pdf(r_in))
            else:
                arr[bad] = pop.negative.pdf(r_in)
    for arr in (r, a, b):
        arr.flags.writeable = False
    return r, a, b


def _branch_sign(branch):
    if branch == "plus":
        return 1.0
    if branch == "minus":
        return -1.0
    raise ValueError(f"branch must be 'plus' or 'minus', got {branch!r}")


def super_level_set(pop, delta, branch, nodes=DEFAULT_NODES):
    """The domain where the strict branch inequality holds.

    Plus branch: ``q (P - N) > delta N``; minus branch: the reversed
    strict inequality.  Crossings are located on a uniform scan of
    ``nodes`` points and refined by bisection to 1e-12.
    """
    sign = _branch_sign(branch)
    delta = float(delta)
    lo, hi = pop.support
    r, a, b = _scan_table(pop, nodes)
    g = sign * (a - delta * b)
    inside = g > 0.0
    if not np.any(inside):
        return DomainSet.empty(pop.support)

    def gfun(x):
        p = pop.positive.pdf(x)
        n = pop.negative.pdf(x)
        return sign * (pop.q * (p - n) - delta * n)

    # maximal runs of inside nodes
    flags = inside.astype(np.int8)
    starts = np.flatnonzero(np.diff(flags) == 1) + 1
    ends = np.flatnonzero(np.diff(flags) == -1)
    if inside[0]:
        starts = np.concatenate(([0], starts))
    if inside[-1]:
        ends = np.concatenate((ends, [flags.size - 1]))

    # brackets to refine: (outside node, inside node) on each open edge
    b_lo, b_hi, b_sign = [], [], []
    left_edges = np.empty(starts.size)
    right_edges = np.empty(ends.size)
    for j, i in enumerate(starts):
        if i == 0:
            left_edges[j] = lo
        else:
            b_lo.append(r[i - 1])
            b_hi.append(r[i])
            b_sign.append(np.sign(g[i - 1]))
            left_edges[j] = np.nan
    for j, i in enumerate(ends):
        if i == flags.size - 1:
            right_edges[j] = hi
        else:
            b_lo.append(r[i])
            b_hi.append(r[i + 1])
            b_sign.append(np.sign(g[i]))
            right_edges[j] = np.nan
    if b_lo:
        refined = _kernels.refine_crossings(
            np.array(b_sign), np.array(b_lo), np.array(b_hi), gfun, _EDGE_TOL
        )
        pos = 0
        for j in range(starts.size):
            if np.isnan(left_edges[j]):
                left_edges[j] = refined[pos]
                pos += 1
        for j in range(ends.size):
            if np.isnan(right_edges[j]):
                right_edges[j] = refined[pos]
                pos += 1
    intervals = [
        (a_, b_)
        for a_, b_ in zip(left_edges, right_edges)
        if b_ - a_ > _EDGE_TOL * (hi - lo)
    ]
    return DomainSet(intervals, pop.support)


def level_measure_curve(pop, delta, branch, nodes=DEFAULT_NODES):
    """Mixture measure of the strict level set at ``delta``.

    Nonincreasing in ``delta`` on the plus branch, nondecreasing on the
    minus branch.
    """
    return mixture_measure(pop, super_level_set(pop, delta, branch, nodes))


def resolution_self_check(pop, deltas, branch, nodes=DEFAULT_NODES):
    """Largest measure change from doubling the scan resolution.

    Guards against narrow intervals slipping between scan nodes; the
    default resolution is adequate when this stays at or below 1e-6.
    """
    worst = 0.0
    for delta in np.atleast_1d(deltas):
        base = level_measure_curve(pop, float(delta), branch, nodes)
        fine = level_measure_curve(pop, float(delta), branch, 2 * int(nodes))
        worst = max(worst, abs(fine - base))
    return worst


@dataclass(frozen=True)
class BathtubSolution:
    """A solved domain with its level and measures."""

    branch: str
    delta: float
    set: DomainSet
    q_measure: float
    p_measure: float
    n_measure: float
    plateau_adjusted: bool


def _attainable_range(pop, branch, nodes):
    """Measure limits of the strict level sets on this branch."""
    if branch == "plus":
        hi = level_measure_curve(pop, -pop.q, branch, nodes)
        lo = level_measure_curve(pop, _LEVEL_CAP, branch, nodes)
    else:
        lo = 0.0
        hi = level_measure_curve(pop, _LEVEL_CAP, branch, nodes)
    return lo, hi


def _fill_plateau(pop, base_set, wide_set, q_hat, tol):
    """Left-most portion of ``wide - base`` topping the measure up to ``q_hat``."""
    need = q_hat - mixture_measure(pop, base_set)
    pieces = list(base_set.intervals)
    for a, b in wide_set.difference(base_set).intervals:
        m = mixture_measure(pop, DomainSet([(a, b)], pop.support))
        if m <= need + 1e-12:
            pieces.append((a, b))
            need -= m
            if need <= 1e-12:
                break
        else:
            # partial piece: cut where the mixture measure of [a, x] hits
            # the remainder; monotone in x, so bisect
            x_lo, x_hi = a, b
            for _ in range(80):
                mid = 0.5 * (x_lo + x_hi)
                got = mixture_measure(pop, DomainSet([(a, mid)], pop.support))
                if abs(got - need) <= 0.1 * tol:
                    x_hi = mid
                    break
                if got < need:
                    x_lo = mid
                else:
                    x_hi = mid
            pieces.append((a, x_hi))
            need = 0.0
            break
    return DomainSet(pieces, pop.support)


def solve_delta(pop, q_hat, branch, nodes=DEFAULT_NODES, tol=DEFAULT_MEASURE_TOL):
    """Find the level whose strict set carries mixture measure ``q_hat``.

    Brackets the level from ``-q`` upward, then bisects until the measure
    matches within ``tol``.  If the measure jumps across ``q_hat`` (the
    ratio is constant on a region of positive measure), the strict set on
    the small side is topped up with the left-most portion of the tie
    region and the solution is flagged ``plateau_adjusted``.

    Raises
    ------
    UnattainableTargetError
        When no level set reaches ``q_hat``, reporting the attainable
        measure range for this branch.
    """
    q_hat = float(q_hat)
    if not 0.0 < q_hat < 1.0:
        raise ValueError("target measure must lie strictly inside (0, 1)")
    _branch_sign(branch)

    def curve(delta):
        return level_measure_curve(pop, delta, branch, nodes)

    def finish(delta, dom, plateau):
        p_d = measure(pop.positive, dom)
        n_d = measure(pop.negative, dom)
        return BathtubSolution(
            branch=branch,
            delta=float(delta),
            set=dom,
            q_measure=pop.q * p_d + (1.0 - pop.q) * n_d,
            p_measure=p_d,
            n_measure=n_d,
            plateau_adjusted=plateau,
        )

    # establish a bracket [d_lo, d_hi]; the plus curve falls with the
    # level, the minus curve rises, so orient the tests by branch
    rising = branch == "minus"
    d_lo = -pop.q
    m_lo = curve(d_lo)
    if abs(m_lo - q_hat) <= tol:
        return finish(d_lo, super_level_set(pop, d_lo, branch, nodes), False)
    if (m_lo > q_hat) if rising else (m_lo < q_hat):
        # already past the target at the lowest level: the minus set is
        # empty there, so this only happens on the plus branch
        lo_lim, hi_lim = _attainable_range(pop, branch, nodes)
        raise UnattainableTargetError(q_hat, lo_lim, hi_lim, branch)
    d_hi, step = d_lo, 1.0
    m_hi = m_lo
    for _ in range(60):
        d_hi = d_hi + step
        step *= 4.0
        m_hi = curve(d_hi)
        if abs(m_hi - q_hat) <= tol:
            return finish(d_hi, super_level_set(pop, d_hi, branch, nodes), False)
        if (m_hi > q_hat) if rising else (m_hi < q_hat):
            break
        if d_hi > _LEVEL_CAP:
            break
    else:
        d_hi = _LEVEL_CAP
    if ((m_hi < q_hat) if rising else (m_hi > q_hat)) and d_hi >= _LEVEL_CAP:
        lo_lim, hi_lim = _attainable_range(pop, branch, nodes)
        raise UnattainableTargetError(q_hat, lo_lim, hi_lim, branch)

    for _ in range(200):
        mid = 0.5 * (d_lo + d_hi)
        m_mid = curve(mid)
        if abs(m_mid - q_hat) <= tol:
            return finish(mid, super_level_set(pop, mid, branch, nodes), False)
        if (m_mid < q_hat) if rising else (m_mid > q_hat):
            d_lo = mid
        else:
            d_hi = mid
        if d_hi - d_lo <= 1e-13 * max(1.0, abs(d_lo), abs(d_hi)):
            break

    # the curve jumps across the target at this level: a ratio plateau
    # carries the missing measure, so fill its left-most portion
    level = 0.5 * (d_lo + d_hi)
    small, wide = (d_lo, d_hi) if rising else (d_hi, d_lo)
    base = super_level_set(pop, small, branch, nodes)
    wide_set = super_level_set(pop, wide, branch, nodes)
    dom = _fill_plateau(pop, base, wide_set, q_hat, tol)
    return finish(level, dom, True)
