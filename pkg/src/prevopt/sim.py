"""Monte Carlo validation of the prevalence estimator.

Each trial draws ``samples_per_trial`` readings from a known mixture, counts
how many land in a fixed domain, and unmixes the count into a raw prevalence
estimate.  Across many trials the estimator mean should match the true
prevalence (unbiasedness) and the spread should match the model-predicted
variance ``Q_D (1 - Q_D) / (M (P_D - N_D)^2)``.

Trials are reproducible and order-independent: trial ``t`` uses its own
random stream derived from ``(seed, t)``, and the moments are computed from
the collected per-trial estimates with pairwise summation, so the report is
bit-identical for identical ``(seed, configuration)`` regardless of how the
work would be scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .bathtub import DEFAULT_NODES, super_level_set
from .dist import DomainSet, MixturePopulation, measure, mixture_measure
from .errors import DegenerateDomainError
from .objective import DEFAULT_GRID_SIZE, DEFAULT_TOL, minimize

__all__ = [
    "DOMAIN_POLICIES",
    "SimReport",
    "classification_set",
    "resolve_domain",
    "run_trials",
]

DOMAIN_POLICIES = (
    "optimal-at-true-q",
    "optimal-at-guess",
    "classification-set",
    "custom",
)

MIN_SAMPLES_PER_TRIAL = 10
MIN_TRIALS = 100

_DENOMINATOR_MIN = 1e-12


@dataclass(frozen=True)
class SimReport:
    """Summary of one Monte Carlo run.

    ``mean_estimate`` and ``empirical_variance`` are the sample mean and
    (ddof=1) sample variance of the raw per-trial estimates;
    ``predicted_variance`` is the model value ``Q_D (1 - Q_D) / (M (P_D -
    N_D)^2)`` at the true mixture measure of the domain.  ``bias_z_score`` is
    ``(mean_estimate - q_true) / sqrt(empirical_variance / trials)`` — the
    standardized deviation of the observed mean from the truth.
    """

    q_true: float
    samples_per_trial: int
    trials: int
    domain_policy: str
    domain_intervals: tuple
    p_measure: float
    n_measure: float
    q_measure: float
    mean_estimate: float
    empirical_variance: float
    predicted_variance: float
    bias_z_score: float


def classification_set(positive, negative, nodes=DEFAULT_NODES):
    """Domain a plain classifier would accept: ``{r : P(r) > N(r)}``.

    This is the zero-level super-level set of ``P - N`` and does not depend
    on prevalence; it serves as the baseline domain against which the
    variance-optimal domain is compared.
    """
    pop = MixturePopulation(0.5, positive, negative)
    return super_level_set(pop, 0.0, "plus", nodes=nodes)


def resolve_domain(
    pop,
    policy,
    guess=None,
    domain=None,
    grid_size=DEFAULT_GRID_SIZE,
    tol=DEFAULT_TOL,
    nodes=DEFAULT_NODES,
):
    """Turn a domain policy into a concrete :class:`~prevopt.dist.DomainSet`.

    Policies: ``"optimal-at-true-q"`` optimizes the variance objective at the
    population's true prevalence; ``"optimal-at-guess"`` optimizes at
    ``guess`` instead (the realistic setting where the truth is unknown);
    ``"classification-set"`` uses ``{r : P(r) > N(r)}``; ``"custom"`` uses
    the caller-supplied ``domain`` unchanged.
    """
    if policy not in DOMAIN_POLICIES:
        raise ValueError(
            f"unknown domain policy {policy!r}; expected one of {DOMAIN_POLICIES}"
        )
    if policy == "optimal-at-true-q":
        result = minimize(pop, grid_size=grid_size, tol=tol, nodes=nodes)
        return result.solution.set
    if policy == "optimal-at-guess":
        if guess is None:
            raise ValueError("policy 'optimal-at-guess' requires a prevalence guess")
        guess_pop = MixturePopulation(float(guess), pop.positive, pop.negative)
        result = minimize(guess_pop, grid_size=grid_size, tol=tol, nodes=nodes)
        return result.solution.set
    if policy == "classification-set":
        return classification_set(pop.positive, pop.negative, nodes=nodes)
    if domain is None:
        raise ValueError("policy 'custom' requires an explicit domain")
    if not isinstance(domain, DomainSet):
        raise TypeError("custom domain must be a DomainSet")
    return domain


def run_trials(
    pop,
    samples_per_trial,
    trials,
    seed,
    policy="optimal-at-true-q",
    guess=None,
    domain=None,
    grid_size=DEFAULT_GRID_SIZE,
    tol=DEFAULT_TOL,
    nodes=DEFAULT_NODES,
    return_estimates=False,
):
    """Run a Monte Carlo study of the estimator on one domain policy.

    :param pop: true :class:`~prevopt.dist.MixturePopulation` generating the
        data.
    :param samples_per_trial: readings per trial ``M`` (at least 10).
    :param trials: number of independent trials ``T`` (at least 100).
    :param seed: integer base seed; trial ``t`` draws from the stream seeded
        by ``(seed, t)``.
    :param policy: one of :data:`DOMAIN_POLICIES`.
    :param guess: prevalence guess, required by ``"optimal-at-guess"``.
    :param domain: explicit domain, required by ``"custom"``.
    :param return_estimates: when true, also return the per-trial raw
        estimates as an array.
    :returns: :class:`SimReport`, or ``(SimReport, estimates)`` when
        ``return_estimates`` is set.
    :raises DegenerateDomainError: if the resolved domain has equal measures
        under the two component models.
    """
    samples_per_trial = int(samples_per_trial)
    trials = int(trials)
    if samples_per_trial < MIN_SAMPLES_PER_TRIAL:
        raise ValueError(
            f"samples_per_trial must be at least {MIN_SAMPLES_PER_TRIAL}"
        )
    if trials < MIN_TRIALS:
        raise ValueError(f"trials must be at least {MIN_TRIALS}")
    seed = int(seed)

    chosen = resolve_domain(
        pop,
        policy,
        guess=guess,
        domain=domain,
        grid_size=grid_size,
        tol=tol,
        nodes=nodes,
    )
    p_d = measure(pop.positive, chosen)
    n_d = measure(pop.negative, chosen)
    gap = p_d - n_d
    if abs(gap) < _DENOMINATOR_MIN:
        raise DegenerateDomainError(
            "resolved domain has equal measures under the positive and "
            f"negative models (|P_D - N_D| = {abs(gap):.3g}); it cannot "
            "distinguish the components, so the simulation would be "
            "uninformative"
        )
    q_d = mixture_measure(pop, chosen)

    support_hi = pop.support[1]
    lows = [a for a, _ in chosen.intervals]
    highs = [b for _, b in chosen.intervals]
    closed = [b >= support_hi for b in highs]

    estimates = np.empty(trials, dtype=np.float64)
    inv_m = 1.0 / float(samples_per_trial)
    for t in range(trials):
        values = pop.sample(samples_per_trial, (seed, t))
        if lows:
            count = _kernels.count_in_intervals(values, lows, highs, closed)
        else:
            count = 0
        estimates[t] = (count * inv_m - n_d) / gap

    # numpy reduces contiguous float64 arrays with pairwise summation, so
    # these moments are a pure function of the per-trial values — the same
    # digits no matter how the trial loop itself would be scheduled.
    mean = float(np.sum(estimates) / trials)
    centered = estimates - mean
    emp_var = float(np.sum(centered * centered) / (trials - 1))
    predicted = q_d * (1.0 - q_d) / (samples_per_trial * gap * gap)
    if emp_var > 0.0:
        bias_z = float((mean - pop.q) / np.sqrt(emp_var / trials))
    else:
        bias_z = 0.0 if mean == pop.q else float("inf") * np.sign(mean - pop.q)

    report = SimReport(
        q_true=float(pop.q),
        samples_per_trial=samples_per_trial,
        trials=trials,
        domain_policy=policy,
        domain_intervals=chosen.intervals,
        p_measure=float(p_d),
        n_measure=float(n_d),
        q_measure=float(q_d),
        mean_estimate=mean,
        empirical_variance=emp_var,
        predicted_variance=float(predicted),
        bias_z_score=bias_z,
    )
    if return_estimates:
        return report, estimates
    return report
