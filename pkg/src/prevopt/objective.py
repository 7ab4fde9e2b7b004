"""Variance branches over domain measure and their minimization.

For a solved domain ``D`` at target measure ``q_hat``, the estimator
variance factor is ``q_hat (1 - q_hat) / (P_D - N_D)^2``; the
per-estimate variance with ``M`` samples is this factor divided by ``M``.
Each branch (plus/minus) produces its own factor, the two are mirror
images under ``q_hat -> 1 - q_hat``, and both diverge toward the ends of
(0, 1), so the minimization runs a guard grid first and then refines the
best bracket per branch by golden-section search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bathtub import DEFAULT_NODES, solve_delta
from .errors import PrevoptError, UnattainableTargetError

GRID_LO = 0.01
GRID_HI = 0.99
DEFAULT_GRID_SIZE = 101
DEFAULT_TOL = 1e-6
# a squared measure difference at or below this floor means the domain
# cannot distinguish the populations; the variance is reported infinite
DENOMINATOR_FLOOR = 1e-14

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class TracePoint:
    """One grid evaluation: both branch variances and signed differences."""

    q_hat: float
    sigma2_plus: float
    sigma2_minus: float
    diff_plus: float
    diff_minus: float


@dataclass(frozen=True)
class OptimizationResult:
    """The minimizing target measure, branch, and supporting evidence."""

    q_hat_star: float
    branch: str
    sigma2_star: float
    solution: object
    trace: tuple
    reflected_sigma2: float


def _check_q_hat(q_hat):
    q_hat = float(q_hat)
    if not 0.0 < q_hat < 1.0:
        raise ValueError("q_hat must lie strictly inside (0, 1)")
    return q_hat


def _branch_eval(pop, q_hat, branch, nodes):
    """(variance factor, P_D - N_D, solution) for one branch."""
    sol = solve_delta(pop, q_hat, branch, nodes)
    diff = sol.p_measure - sol.n_measure
    f_val = diff * diff
    if f_val <= DENOMINATOR_FLOOR:
        return float("inf"), diff, sol
    return q_hat * (1.0 - q_hat) / f_val, diff, sol


def variance_branch(pop, q_hat, branch, nodes=DEFAULT_NODES):
    """Variance factor ``q_hat (1 - q_hat) / (P_D - N_D)^2`` on a branch.

    Returns ``+inf`` when the squared difference falls below the
    denominator floor; an unattainable target propagates as
    :class:`UnattainableTargetError`.
    """
    q_hat = _check_q_hat(q_hat)
    sigma2, _, _ = _branch_eval(pop, q_hat, branch, nodes)
    return sigma2


def f_of_qhat(pop, q_hat, nodes=DEFAULT_NODES):
    """Largest squared measure difference over the two branches.

    A branch whose target is unattainable is skipped; if both are, the
    error propagates.
    """
    q_hat = _check_q_hat(q_hat)
    best = None
    last_error = None
    for branch in ("plus", "minus"):
        try:
            _, diff, _ = _branch_eval(pop, q_hat, branch, nodes)
        except UnattainableTargetError as err:
            last_error = err
            continue
        value = diff * diff
        if best is None or value > best:
            best = value
    if best is None:
        raise last_error
    return best


def _golden_section(fun, lo, hi, tol, seed_x, seed_f):
    """Minimize ``fun`` on [lo, hi] to bracket width ``tol``.

    ``seed_x``/``seed_f`` is a known evaluation inside the bracket (the
    best grid point); the returned best never falls behind it.
    """
    best_x, best_f = seed_x, seed_f
    c = hi - (hi - lo) * _INVPHI
    d = lo + (hi - lo) * _INVPHI
    fc, fd = fun(c), fun(d)
    for x, f in ((c, fc), (d, fd)):
        if f < best_f:
            best_x, best_f = x, f
    while hi - lo > tol:
        if fc <= fd:
            hi, d, fd = d, c, fc
            c = hi - (hi - lo) * _INVPHI
            fc = fun(c)
            if fc < best_f:
                best_x, best_f = c, fc
        else:
            lo, c, fc = c, d, fd
            d = lo + (hi - lo) * _INVPHI
            fd = fun(d)
            if fd < best_f:
                best_x, best_f = d, fd
    return best_x, best_f


def minimize(pop, grid_size=DEFAULT_GRID_SIZE, tol=DEFAULT_TOL, nodes=DEFAULT_NODES):
    """Minimize the variance factor over the target measure.

    Evaluates both branches on a uniform grid over [0.01, 0.99], refines
    each branch around its best grid point by golden-section search to a
    bracket width of ``tol``, and reports the smaller branch optimum
    (ties break toward the smaller ``q_hat``, then the plus branch).  The
    mirrored variance at ``1 - q_hat_star`` on the other branch is kept
    as a cross-check.  Grid points whose target is unattainable on a
    branch contribute ``+inf`` for that branch.  Fully deterministic.
    """
    grid_size = int(grid_size)
    if grid_size < 21:
        raise ValueError("grid_size must be at least 21")
    tol = float(tol)
    if not tol > 0.0:
        raise ValueError("tol must be positive")

    def guarded(q_hat, branch):
        try:
            sigma2, diff, _ = _branch_eval(pop, q_hat, branch, nodes)
        except UnattainableTargetError:
            return float("inf"), float("nan")
        return sigma2, diff

    grid = np.linspace(GRID_LO, GRID_HI, grid_size)
    trace = []
    values = {"plus": [], "minus": []}
    for q_hat in grid:
        sp, dp = guarded(float(q_hat), "plus")
        sm, dm = guarded(float(q_hat), "minus")
        values["plus"].append(sp)
        values["minus"].append(sm)
        trace.append(
            TracePoint(
                q_hat=float(q_hat),
                sigma2_plus=sp,
                sigma2_minus=sm,
                diff_plus=dp,
                diff_minus=-dm,
            )
        )

    candidates = []
    for branch in ("plus", "minus"):
        arr = np.array(values[branch])
        if not np.any(np.isfinite(arr)):
            continue
        i = int(np.argmin(arr))
        lo = float(grid[max(i - 1, 0)])
        hi = float(grid[min(i + 1, grid_size - 1)])
        x, f = _golden_section(
            lambda q, b=branch: guarded(q, b)[0],
            lo,
            hi,
            tol,
            float(grid[i]),
            float(arr[i]),
        )
        candidates.append((f, x, branch))
    if not candidates:
        raise PrevoptError("no target measure on the grid is attainable")
    # deterministic selection: smallest variance wins; the two branches
    # mirror each other, so their optima often agree to solver noise, and
    # near-ties (relative 1e-9) break toward the smaller q_hat, then the
    # plus branch (candidate order puts plus first)
    best_f = min(c[0] for c in candidates)
    near = [c for c in candidates if c[0] <= best_f * (1.0 + 1e-9) + 1e-15]
    _, q_star, branch = min(near, key=lambda c: c[1])

    solution = solve_delta(pop, q_star, branch, nodes)
    diff = solution.p_measure - solution.n_measure
    f_val = diff * diff
    sigma2_star = (
        float("inf") if f_val <= DENOMINATOR_FLOOR else q_star * (1.0 - q_star) / f_val
    )
    other = "minus" if branch == "plus" else "plus"
    reflected, _ = guarded(1.0 - q_star, other)
    return OptimizationResult(
        q_hat_star=q_star,
        branch=branch,
        sigma2_star=sigma2_star,
        solution=solution,
        trace=tuple(trace),
        reflected_sigma2=reflected,
    )
