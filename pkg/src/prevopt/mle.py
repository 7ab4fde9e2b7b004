"""Data normalization and maximum-likelihood fitting of probability models.

Raw instrument readings are shifted by a small ``epsilon`` and divided by
the largest shifted value in the positive training set, so every batch
lands in (0, 1] on a shared axis and the positive maximum is exactly 1.
Parametric families are then fit by multi-start simplex descent on
log-transformed parameters.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy import optimize
from scipy.stats import qmc

from . import _kernels
from .dist import ProbabilityModel, model_to_spec

DEFAULT_EPSILON = 0.01
DEFAULT_STARTS = 8
_MAX_ITER = 2000
_XATOL = 1e-8
_MIN_FIT_SIZE = 10
# relative inward shift applied to values sitting exactly on a support
# endpoint, so families with a vanishing boundary density keep a finite
# likelihood at the scaling point (the positive maximum is exactly 1)
_BOUNDARY_SHIFT = 1e-9

LABELS = ("negative-training", "positive-training", "test", "unlabeled")

# log-space multi-start boxes per family parameter
_START_BOXES = {
    "burr-truncated": (("c", 0.5, 30.0), ("k", 0.05, 30.0), ("scale", 1e-3, 3.0)),
    "beta": (("a", 0.2, 50.0), ("b", 0.2, 50.0)),
}
# hard plausibility bounds: three decades beyond the start box on each
# side; at extreme magnitudes the truncated-family likelihood develops
# spurious floating-point minima (subnormal parameters), so the search
# is confined to where the arithmetic is trustworthy
_HARD_MARGIN = np.log(1e3)


@dataclass(frozen=True)
class Normalization:
    """The shift and scale applied to every batch."""

    epsilon: float
    scale: float


@dataclass(frozen=True)
class SampleBatch:
    """An ordered batch of measurements with a provenance label."""

    values: np.ndarray
    label: str
    normalization: Normalization | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1 or values.size == 0:
            raise ValueError("values must be a nonempty 1D array")
        if not np.all(np.isfinite(values)):
            raise ValueError("values must be finite")
        if self.label not in LABELS:
            raise ValueError(f"label must be one of {LABELS}, got {self.label!r}")
        object.__setattr__(self, "values", values)

    @property
    def size(self):
        return int(self.values.size)


@dataclass(frozen=True)
class FitResult:
    """Best model found by maximum likelihood."""

    model: ProbabilityModel
    negative_log_likelihood: float
    converged: bool
    iterations: int


def normalize(raw_batches, epsilon=DEFAULT_EPSILON):
    """Shift raw batches by ``epsilon`` and scale by the positive maximum.

    Every value maps to ``(value + epsilon) / scale`` where ``scale`` is
    the largest shifted value over the positive-training batches.  The
    same scale applies to all batches, so the positive-training maximum
    becomes exactly 1 and everything lies in (0, 1].

    Parameters
    ----------
    raw_batches : sequence of SampleBatch
        Must include at least one ``positive-training`` batch.  Raw
        values must be nonnegative.
    epsilon : float
        Nonnegative shift added to all values before scaling.

    Returns
    -------
    (list of SampleBatch, Normalization)
        New batches carrying the normalization record, and the record.
    """
    batches = list(raw_batches)
    if not batches:
        raise ValueError("at least one batch is required")
    epsilon = float(epsilon)
    if not (np.isfinite(epsilon) and epsilon >= 0.0):
        raise ValueError("epsilon must be a nonnegative finite real")
    positives = [b for b in batches if b.label == "positive-training"]
    if not positives:
        raise ValueError("a positive-training batch is required for scaling")
    for b in batches:
        if np.any(b.values < 0.0):
            raise ValueError(f"raw values must be nonnegative in batch {b.label!r}")
    pos_max = max(float(np.max(b.values)) for b in positives)
    if pos_max == 0.0 and epsilon == 0.0:
        raise ValueError("positive-training batch is all zero; cannot set a scale")
    scale = pos_max + epsilon
    record = Normalization(epsilon=epsilon, scale=scale)
    out = []
    for b in batches:
        values = (b.values + epsilon) / scale
        if np.any(values > 1.0):
            raise ValueError(
                f"batch {b.label!r} exceeds the positive-training maximum; "
                "normalized values must lie in (0, 1]"
            )
        out.append(SampleBatch(values, b.label, record))
    return out, record


# how far beyond the unit interval a normalized test value may fall and
# still be treated as sampling fluctuation (the scale is a training-batch
# maximum, so fresh data overshooting it slightly is routine)
NORMALIZATION_SLACK = 0.02


def apply_normalization(values, record, label="test"):
    """Normalize a raw batch with a previously computed record.

    Used for test batches measured after training: the same shift and
    scale map them onto the unit interval the models were fitted on.
    Values overshooting that interval by at most ``NORMALIZATION_SLACK``
    are clamped to the nearer support edge; larger excursions mean the
    record does not belong to this data and raise instead.
    """
    values = (np.asarray(values, dtype=np.float64) + record.epsilon) / record.scale
    if np.any(values > 1.0 + NORMALIZATION_SLACK) or np.any(
        values < -NORMALIZATION_SLACK
    ):
        raise ValueError(
            f"batch {label!r} leaves [0, 1] under the stored normalization "
            f"(normalized range [{float(np.min(values)):.4f}, "
            f"{float(np.max(values)):.4f}]); the record does not match this data"
        )
    return SampleBatch(np.clip(values, 0.0, 1.0), label, record)


def _prepare_values(values, support):
    """Clip values on the support boundary inward by a relative 1e-9.

    Likelihood evaluation only: a value exactly on an endpoint (the
    positive maximum is 1 by construction) would zero out the likelihood
    of any family whose density vanishes there.
    """
    lo, hi = support
    shift = _BOUNDARY_SHIFT * (hi - lo)
    return np.clip(np.asarray(values, dtype=np.float64), lo + shift, hi - shift)


def negative_log_likelihood(model, values):
    """``-sum(log pdf)`` with boundary values shifted inward by 1e-9."""
    x = _prepare_values(values, model.support)
    if model.family == "burr-truncated":
        impl = model._impl
        ll = _kernels.burr_log_likelihood(x, impl.c, impl.k, impl.lam)
        return float(-(ll - x.size * np.log(impl.z)))
    if model.family == "beta":
        impl = model._impl
        return float(-_kernels.beta_log_likelihood(x, impl.a, impl.b))
    dens = model.pdf(x)
    if np.any(dens <= 0.0):
        return float("inf")
    return float(-np.sum(np.log(dens)))


def _nll_for_family(family, x, support, log_params, names, log_bounds):
    log_lo, log_hi = log_bounds
    if np.any(log_params < log_lo) or np.any(log_params > log_hi):
        return float("inf")
    params = dict(zip(names, np.exp(log_params)))
    try:
        model = ProbabilityModel(family, params, support)
    except ValueError:
        return float("inf")
    nll = negative_log_likelihood(model, x)
    return nll if np.isfinite(nll) else float("inf")


def start_points(family, starts=DEFAULT_STARTS):
    """Multi-start initial parameters: Latin-hypercube over fixed boxes.

    Points are spaced in log-parameter space and are deterministic for a
    given family and count.  Returns an array of shape (starts, n_params)
    in natural (not log) scale, columns ordered as the family lists its
    parameters.
    """
    if family not in _START_BOXES:
        raise ValueError(f"no start box for family {family!r}")
    starts = int(starts)
    if starts < 1:
        raise ValueError("starts must be a positive count")
    box = _START_BOXES[family]
    log_lo = np.log([b_lo for _, b_lo, _ in box])
    log_hi = np.log([b_hi for _, _, b_hi in box])
    sampler = qmc.LatinHypercube(d=len(box), seed=0)
    return np.exp(log_lo + sampler.random(starts) * (log_hi - log_lo))


def fit(family, batch, starts=DEFAULT_STARTS, support=(0.0, 1.0), bins=None):
    """Fit a model family to a batch by maximum likelihood.

    Parametric families (``burr-truncated``, ``beta``) are minimized by
    Nelder-Mead simplex descent on log-transformed parameters, with
    ``starts`` initial points drawn from a Latin hypercube over fixed
    per-family boxes; the run is deterministic.  Parameters are confined
    to a generous hard box (three decades beyond each start-box edge);
    outside it the truncated-family likelihood degenerates into
    floating-point noise.  Convergence means the simplex collapsed below
    1e-8 in log-parameter space within 2000 iterations; if no start
    converges the best candidate is still returned with
    ``converged=False``.

    Parameter-free families evaluate directly.  ``histogram`` requires
    ``bins`` and uses the closed-form bin-proportion estimate.
    """
    if batch.size < _MIN_FIT_SIZE:
        raise ValueError(f"need at least {_MIN_FIT_SIZE} values to fit, got {batch.size}")
    lo, hi = (float(support[0]), float(support[1]))
    values = batch.values
    if np.any((values < lo) | (values > hi)):
        raise ValueError("batch values must lie within the family support")

    if family in ("uniform", "triangular-up", "triangular-down"):
        model = ProbabilityModel(family, {}, (lo, hi))
        return FitResult(model, negative_log_likelihood(model, values), True, 0)
    if family == "histogram":
        if bins is None:
            raise ValueError("histogram fitting requires a bin count")
        edges = np.linspace(lo, hi, int(bins) + 1)
        counts, _ = np.histogram(values, bins=edges)
        params = {f"w{i}": float(c) for i, c in enumerate(counts)}
        model = ProbabilityModel("histogram", params, (lo, hi))
        return FitResult(model, negative_log_likelihood(model, values), True, 0)
    if family not in _START_BOXES:
        raise ValueError(f"unknown family {family!r}")

    box = _START_BOXES[family]
    names = [name for name, _, _ in box]
    log_bounds = (
        np.log([b_lo for _, b_lo, _ in box]) - _HARD_MARGIN,
        np.log([b_hi for _, _, b_hi in box]) + _HARD_MARGIN,
    )
    points = np.log(start_points(family, starts))
    x = _prepare_values(values, (lo, hi))

    def objective(theta):
        return _nll_for_family(family, x, (lo, hi), theta, names, log_bounds)

    best = None
    for theta0 in points:
        res = optimize.minimize(
            objective,
            theta0,
            method="Nelder-Mead",
            options={"xatol": _XATOL, "fatol": np.inf, "maxiter": _MAX_ITER},
        )
        if best is None or res.fun < best.fun:
            best = res
    params = dict(zip(names, np.exp(best.x)))
    model = ProbabilityModel(family, params, (lo, hi))
    return FitResult(
        model=model,
        negative_log_likelihood=float(best.fun),
        converged=bool(best.success),
        iterations=int(best.nit),
    )


def fit_result_to_spec(result):
    """Model JSON augmented with the fit bookkeeping fields."""
    spec = model_to_spec(result.model)
    spec["nll"] = float(result.negative_log_likelihood)
    spec["converged"] = bool(result.converged)
    return spec


def read_csv_batch(path, label):
    """Read a one-column CSV of measurements; optional header ``value``."""
    rows = []
    with open(path, newline="") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            cell = row[0].strip()
            if i == 0 and cell.lower() == "value":
                continue
            if len(row) != 1:
                raise ValueError(f"{path}: expected one column, got {len(row)} in row {i + 1}")
            try:
                rows.append(float(cell))
            except ValueError:
                raise ValueError(f"{path}: row {i + 1} is not a number: {cell!r}") from None
    if not rows:
        raise ValueError(f"{path}: no measurements found")
    return SampleBatch(np.array(rows), label)


def write_csv_batch(path, batch):
    """Write a batch as a one-column CSV with a ``value`` header."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["value"])
        for v in batch.values:
            writer.writerow([repr(float(v))])
