"""Prevalence point estimation and iterative domain refinement.

Given a test batch of normalized instrument readings, an accepted domain
``D``, and fitted positive/negative models, the prevalence estimate is the
linear unmixing of the empirical domain measure:

    q_tilde = (Q_tilde_D - N_D) / (P_D - N_D)

where ``Q_tilde_D`` is the fraction of test readings that fall in ``D`` and
``P_D`` / ``N_D`` are the model measures of ``D``.  The estimator is exact in
expectation whenever the models are exact, regardless of which domain is
used, but its variance depends strongly on the domain; :mod:`prevopt.objective`
supplies the variance-minimizing one.

Because the optimal domain itself depends on the unknown prevalence, the
:func:`refine` loop alternates the two steps — optimize the domain at the
current prevalence guess, then re-estimate prevalence on that domain — until
the iterates settle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .dist import DomainSet, MixturePopulation, measure
from .errors import DegenerateDomainError, DomainMismatchError
from .mle import SampleBatch
from .objective import DEFAULT_GRID_SIZE, DEFAULT_TOL, minimize
from .bathtub import DEFAULT_NODES

__all__ = [
    "EstimateReport",
    "RefinementStep",
    "RefinementTrace",
    "empirical_measure",
    "estimate_batch",
    "point_estimate",
    "refine",
]

#: Smallest |P_D - N_D| for which the unmixing is considered well posed.
DENOMINATOR_MIN = 1e-12

#: Refinement iterates are clamped to [PREVALENCE_CLAMP, 1 - PREVALENCE_CLAMP]
#: so the optimizer always sees a proper mixture.
PREVALENCE_CLAMP = 1e-4

DEFAULT_REFINE_TOL = 1e-3
DEFAULT_MAX_ITER = 25

_STOP_REASONS = ("tolerance", "max_iterations", "cycle_detected")


@dataclass(frozen=True)
class EstimateReport:
    """Prevalence estimate on one domain, with its predicted precision.

    ``q_tilde_raw`` is the exact linear unmixing and may fall outside
    ``[0, 1]`` due to sampling noise; ``q_tilde_clamped`` is the same value
    clipped to ``[0, 1]``.  ``predicted_std_error`` is the model-based
    standard error ``sqrt(Q(1 - Q) / (M (P_D - N_D)^2))`` evaluated at the
    observed domain measure ``Q = q_empirical_measure``; it is ``None`` when
    the report was built without a sample count.
    """

    q_tilde_raw: float
    q_tilde_clamped: float
    q_empirical_measure: float
    p_measure: float
    n_measure: float
    sample_count: int | None
    predicted_std_error: float | None


@dataclass(frozen=True)
class RefinementStep:
    """One refinement iteration: optimize at ``q_k``, then re-estimate.

    ``q_hat_star`` and ``delta`` describe the optimizer's solution at
    prevalence ``q_k``; ``q_tilde_next`` is the clamped prevalence estimate
    computed on that solution's domain, which becomes the next iterate.
    """

    q_k: float
    q_hat_star: float
    delta: float
    q_tilde_next: float


@dataclass(frozen=True)
class RefinementTrace:
    """Full history of a :func:`refine` run.

    ``stop_reason`` is one of ``"tolerance"`` (successive iterates moved less
    than the tolerance), ``"max_iterations"``, or ``"cycle_detected"`` (the
    iterates entered a two-cycle).  ``converged`` is true only for the
    tolerance stop.
    """

    iterations: tuple[RefinementStep, ...]
    converged: bool
    stop_reason: str


def empirical_measure(batch, domain):
    """Fraction of the batch's values that fall inside ``domain``.

    Interval membership follows the domain's half-open convention: each
    interval ``[lo, hi)`` excludes its upper endpoint except when ``hi`` is
    the top of the support, where the interval is closed.

    :param batch: :class:`~prevopt.mle.SampleBatch` of normalized values.
    :param domain: :class:`~prevopt.dist.DomainSet` whose support contains
        the batch values.
    :returns: count inside / batch size, in ``[0, 1]``.
    :raises ValueError: if the batch is empty.
    :raises DomainMismatchError: if any value lies outside the domain's
        support.
    """
    values = np.asarray(batch.values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("cannot compute an empirical measure of an empty batch")
    lo, hi = domain.support
    if values.min() < lo or values.max() > hi:
        raise DomainMismatchError(
            f"batch values fall outside the domain support [{lo:g}, {hi:g}]"
        )
    if not domain.intervals:
        return 0.0
    lows = [a for a, _ in domain.intervals]
    highs = [b for _, b in domain.intervals]
    closed = [b >= hi for b in highs]
    count = _kernels.count_in_intervals(values, lows, highs, closed)
    return float(count) / float(values.size)


def point_estimate(q_tilde_d, p_measure, n_measure, sample_count=None):
    """Unmix an observed domain measure into a prevalence estimate.

    Solves ``q * p_measure + (1 - q) * n_measure = q_tilde_d`` for ``q``:

        q_tilde = (q_tilde_d - n_measure) / (p_measure - n_measure)

    :param q_tilde_d: observed fraction of test samples in the domain.
    :param p_measure: model measure of the domain under the positive model.
    :param n_measure: model measure of the domain under the negative model.
    :param sample_count: optional batch size ``M``; when given, the report
        carries the predicted standard error at the observed measure.
    :returns: :class:`EstimateReport`.
    :raises DegenerateDomainError: when ``|p_measure - n_measure|`` is below
        ``DENOMINATOR_MIN`` — a domain whose measures under the two component
        models are equal carries no prevalence information.
    """
    q_tilde_d = float(q_tilde_d)
    p_measure = float(p_measure)
    n_measure = float(n_measure)
    gap = p_measure - n_measure
    if not np.isfinite(gap) or abs(gap) < DENOMINATOR_MIN:
        raise DegenerateDomainError(
            "domain measures under the positive and negative models are equal "
            f"(|P_D - N_D| = {abs(gap):.3g} < {DENOMINATOR_MIN:g}); such a "
            "domain cannot distinguish the components, so the prevalence "
            "estimate is undefined"
        )
    raw = (q_tilde_d - n_measure) / gap
    clamped = float(min(1.0, max(0.0, raw)))
    std_error = None
    count = None
    if sample_count is not None:
        count = int(sample_count)
        if count < 1:
            raise ValueError("sample_count must be a positive integer")
        spread = max(q_tilde_d * (1.0 - q_tilde_d), 0.0)
        std_error = float(np.sqrt(spread / (count * gap * gap)))
    return EstimateReport(
        q_tilde_raw=float(raw),
        q_tilde_clamped=clamped,
        q_empirical_measure=q_tilde_d,
        p_measure=p_measure,
        n_measure=n_measure,
        sample_count=count,
        predicted_std_error=std_error,
    )


def estimate_batch(batch, positive, negative, domain):
    """Full pipeline on a fixed domain: count, measure, unmix.

    :param batch: :class:`~prevopt.mle.SampleBatch` of test readings.
    :param positive: positive-component :class:`~prevopt.dist.ProbabilityModel`.
    :param negative: negative-component :class:`~prevopt.dist.ProbabilityModel`.
    :param domain: accepted :class:`~prevopt.dist.DomainSet`.
    :returns: :class:`EstimateReport` with the predicted standard error.
    """
    q_tilde_d = empirical_measure(batch, domain)
    p_d = measure(positive, domain)
    n_d = measure(negative, domain)
    return point_estimate(q_tilde_d, p_d, n_d, batch.size)


def refine(
    batch,
    positive,
    negative,
    q0,
    tol=DEFAULT_REFINE_TOL,
    max_iter=DEFAULT_MAX_ITER,
    grid_size=DEFAULT_GRID_SIZE,
    optimizer_tol=DEFAULT_TOL,
    nodes=DEFAULT_NODES,
):
    """Alternate domain optimization and prevalence estimation to a fixed point.

    Starting from the guess ``q0``, each iteration builds the mixture at the
    current prevalence iterate, finds the variance-minimizing domain for it,
    estimates prevalence on that domain from the batch, and clamps the result
    to ``[PREVALENCE_CLAMP, 1 - PREVALENCE_CLAMP]`` to keep the next mixture
    proper.  The loop stops when successive iterates differ by less than
    ``tol`` (converged), when a two-cycle is detected (the new iterate
    returns to the value from two steps earlier within ``tol / 10`` while
    still moving more than ``tol``), or after ``max_iter`` iterations.

    :param batch: :class:`~prevopt.mle.SampleBatch` of test readings.
    :param positive: positive-component :class:`~prevopt.dist.ProbabilityModel`.
    :param negative: negative-component :class:`~prevopt.dist.ProbabilityModel`.
    :param q0: starting prevalence guess, strictly inside ``(0, 1)``.
    :param tol: stopping tolerance on successive prevalence iterates.
    :param max_iter: maximum number of optimize/estimate iterations (>= 1).
    :param grid_size: grid resolution forwarded to the domain optimizer.
    :param optimizer_tol: refinement tolerance forwarded to the optimizer.
    :param nodes: level-set scan resolution forwarded to the optimizer.
    :returns: ``(trace, report)`` — the :class:`RefinementTrace` and the
        :class:`EstimateReport` from the final iteration's domain.
    """
    q0 = float(q0)
    if not 0.0 < q0 < 1.0:
        raise ValueError("q0 must lie strictly inside (0, 1)")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    if tol <= 0.0:
        raise ValueError("tol must be positive")

    q_k = float(min(max(q0, PREVALENCE_CLAMP), 1.0 - PREVALENCE_CLAMP))
    steps = []
    history = [q_k]
    report = None
    converged = False
    stop_reason = "max_iterations"
    for _ in range(int(max_iter)):
        pop = MixturePopulation(q_k, positive, negative)
        result = minimize(pop, grid_size=grid_size, tol=optimizer_tol, nodes=nodes)
        sol = result.solution
        q_tilde_d = empirical_measure(batch, sol.set)
        report = point_estimate(q_tilde_d, sol.p_measure, sol.n_measure, batch.size)
        q_next = float(
            min(max(report.q_tilde_clamped, PREVALENCE_CLAMP), 1.0 - PREVALENCE_CLAMP)
        )
        steps.append(
            RefinementStep(
                q_k=q_k,
                q_hat_star=result.q_hat_star,
                delta=sol.delta,
                q_tilde_next=q_next,
            )
        )
        if abs(q_next - q_k) < tol:
            converged = True
            stop_reason = "tolerance"
            break
        if len(history) >= 2 and abs(q_next - history[-2]) < tol / 10.0:
            stop_reason = "cycle_detected"
            break
        history.append(q_next)
        q_k = q_next

    trace = RefinementTrace(
        iterations=tuple(steps), converged=converged, stop_reason=stop_reason
    )
    return trace, report
