"""Probability models, mixtures, domain sets, and set-measure quadrature.

The measurement axis carries two densities: ``P`` for the positive
population and ``N`` for the negative one.  A :class:`MixturePopulation`
combines them with prevalence ``q`` into the observable density
``Q(r) = q P(r) + (1 - q) N(r)``.  A :class:`DomainSet` is a finite union
of disjoint intervals on the shared support; its probability under a model
is the sum of CDF differences, with adaptive Simpson quadrature available
as an independent route.
"""

from __future__ import annotations

import math

import numpy as np

from . import _kernels
from .errors import DomainMismatchError

_QUAD_TOL = 1e-10
_QUAD_MAX_DEPTH = 50

_FAMILIES = (
    "burr-truncated",
    "beta",
    "uniform",
    "triangular-up",
    "triangular-down",
    "histogram",
)


def _as_float_array(r):
    return np.asarray(r, dtype=np.float64)


class ProbabilityModel:
    """A normalized density on a finite support interval.

    Parameters
    ----------
    family : str
        One of ``burr-truncated`` (shapes ``c``, ``k``, scale ``scale``,
        truncated to the support and renormalized), ``beta`` (shapes
        ``a``, ``b`` on [0, 1]), ``uniform``, ``triangular-up``,
        ``triangular-down`` (no parameters), or ``histogram`` (equal-width
        bin weights ``w0`` .. ``w{n-1}``, nonnegative, not all zero).
    params : dict
        Family-specific parameters; the key set must match exactly.
    support : tuple of float
        Closed interval ``[lo, hi]`` with ``lo < hi``.

    Models are immutable and hashable; all evaluation methods are pure.
    """

    __slots__ = ("family", "params", "support", "_impl", "_hash")

    def __init__(self, family, params, support):
        lo, hi = (float(support[0]), float(support[1]))
        if len(tuple(support)) != 2 or not (math.isfinite(lo) and math.isfinite(hi)):
            raise ValueError("support must be a finite interval [lo, hi]")
        if not lo < hi:
            raise ValueError(f"support must satisfy lo < hi, got [{lo}, {hi}]")
        if family not in _FAMILIES:
            raise ValueError(f"unknown family {family!r}")
        params = {str(k): float(v) for k, v in dict(params).items()}
        object.__setattr__(self, "family", family)
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "support", (lo, hi))
        object.__setattr__(self, "_impl", _build_impl(family, params, (lo, hi)))
        key = (family, tuple(sorted(params.items())), (lo, hi))
        object.__setattr__(self, "_hash", hash(key))

    def __setattr__(self, name, value):
        raise AttributeError("ProbabilityModel is immutable")

    def __eq__(self, other):
        if not isinstance(other, ProbabilityModel):
            return NotImplemented
        return (
            self.family == other.family
            and self.params == other.params
            and self.support == other.support
        )

    def __hash__(self):
        return self._hash

    def __repr__(self):
        ps = ", ".join(f"{k}={v:g}" for k, v in sorted(self.params.items()))
        return f"ProbabilityModel({self.family}, {{{ps}}}, support={list(self.support)})"

    def pdf(self, r):
        """Density at ``r``; zero outside the support."""
        r = _as_float_array(r)
        scalar = r.ndim == 0
        r1 = np.atleast_1d(r)
        lo, hi = self.support
        out = np.zeros_like(r1)
        inside = (r1 >= lo) & (r1 <= hi)
        if np.any(inside):
            out[inside] = self._impl.pdf(r1[inside])
        return float(out[0]) if scalar else out

    def cdf(self, r):
        """Cumulative probability; clamped to 0 below and 1 above support."""
        r = _as_float_array(r)
        scalar = r.ndim == 0
        r1 = np.atleast_1d(r)
        lo, hi = self.support
        out = self._impl.cdf(np.clip(r1, lo, hi))
        out = np.clip(out, 0.0, 1.0)
        return float(out[0]) if scalar else out

    def ppf(self, u):
        """Inverse CDF for ``u`` in [0, 1]."""
        u = _as_float_array(u)
        scalar = u.ndim == 0
        u1 = np.atleast_1d(u)
        if np.any((u1 < 0.0) | (u1 > 1.0)):
            raise ValueError("ppf argument must lie in [0, 1]")
        out = self._impl.ppf(u1)
        lo, hi = self.support
        out = np.clip(out, lo, hi)
        return float(out[0]) if scalar else out

    def sample(self, count, rng_seed):
        """Draw ``count`` i.i.d. values by inverse-CDF; seed-deterministic."""
        if count < 1:
            raise ValueError("count must be a positive integer")
        rng = _make_rng(rng_seed)
        return self.ppf(rng.random(int(count)))


class _BurrTruncatedImpl:
    __slots__ = ("c", "k", "lam", "lo", "hi", "flo", "z")

    def __init__(self, params, support):
        _require_keys(params, {"c", "k", "scale"}, "burr-truncated")
        self.c = _positive(params["c"], "c")
        self.k = _positive(params["k"], "k")
        self.lam = _positive(params["scale"], "scale")
        self.lo, self.hi = support
        if self.lo < 0.0:
            raise ValueError("burr-truncated support must lie in [0, inf)")
        self.flo = float(_kernels.burr_cdf(np.array([self.lo]), self.c, self.k, self.lam)[0])
        fhi = float(_kernels.burr_cdf(np.array([self.hi]), self.c, self.k, self.lam)[0])
        self.z = fhi - self.flo
        if not self.z > 0.0:
            raise ValueError("burr-truncated support carries zero probability")

    def pdf(self, r):
        return _kernels.burr_pdf(r, self.c, self.k, self.lam) / self.z

    def cdf(self, r):
        return (_kernels.burr_cdf(r, self.c, self.k, self.lam) - self.flo) / self.z

    def ppf(self, u):
        return _kernels.burr_ppf(self.flo + u * self.z, self.c, self.k, self.lam)


class _BetaImpl:
    __slots__ = ("a", "b")

    def __init__(self, params, support):
        _require_keys(params, {"a", "b"}, "beta")
        self.a = _positive(params["a"], "a")
        self.b = _positive(params["b"], "b")
        if support != (0.0, 1.0):
            raise ValueError("beta family requires support [0, 1]")

    def pdf(self, r):
        return _kernels.beta_pdf(r, self.a, self.b)

    def cdf(self, r):
        return _kernels.beta_cdf(r, self.a, self.b)

    def ppf(self, u):
        return _kernels.beta_ppf(u, self.a, self.b)


class _UniformImpl:
    __slots__ = ("lo", "hi")

    def __init__(self, params, support):
        _require_keys(params, set(), "uniform")
        self.lo, self.hi = support

    def pdf(self, r):
        return np.full_like(r, 1.0 / (self.hi - self.lo))

    def cdf(self, r):
        return (r - self.lo) / (self.hi - self.lo)

    def ppf(self, u):
        return self.lo + u * (self.hi - self.lo)


class _TriangularUpImpl:
    __slots__ = ("lo", "hi")

    def __init__(self, params, support):
        _require_keys(params, set(), "triangular-up")
        self.lo, self.hi = support

    def pdf(self, r):
        w = self.hi - self.lo
        return 2.0 * (r - self.lo) / (w * w)

    def cdf(self, r):
        t = (r - self.lo) / (self.hi - self.lo)
        return t * t

    def ppf(self, u):
        return self.lo + (self.hi - self.lo) * np.sqrt(u)


class _TriangularDownImpl:
    __slots__ = ("lo", "hi")

    def __init__(self, params, support):
        _require_keys(params, set(), "triangular-down")
        self.lo, self.hi = support

    def pdf(self, r):
        w = self.hi - self.lo
        return 2.0 * (self.hi - r) / (w * w)

    def cdf(self, r):
        t = (self.hi - r) / (self.hi - self.lo)
        return 1.0 - t * t

    def ppf(self, u):
        return self.hi - (self.hi - self.lo) * np.sqrt(1.0 - u)


class _HistogramImpl:
    """Equal-width bins over the support.

    Weights are nonnegative and need not sum to one; zero-weight bins are
    allowed so a density can vanish on part of the axis.
    """

    __slots__ = ("edges", "heights", "cum")

    def __init__(self, params, support):
        n = len(params)
        if n == 0:
            raise ValueError("histogram requires at least one weight")
        expected = {f"w{i}" for i in range(n)}
        _require_keys(params, expected, "histogram")
        w = np.array([params[f"w{i}"] for i in range(n)], dtype=np.float64)
        if np.any(w < 0.0) or not np.all(np.isfinite(w)):
            raise ValueError("histogram weights must be finite and nonnegative")
        total = float(np.sum(w))
        if total <= 0.0:
            raise ValueError("histogram weights must not all be zero")
        lo, hi = support
        self.edges = np.linspace(lo, hi, n + 1)
        width = (hi - lo) / n
        self.heights = w / (total * width)
        self.cum = np.concatenate(([0.0], np.cumsum(w) / total))
        self.cum[-1] = 1.0

    def _bin_index(self, r):
        idx = np.searchsorted(self.edges, r, side="right") - 1
        return np.clip(idx, 0, self.heights.size - 1)

    def pdf(self, r):
        return self.heights[self._bin_index(r)]

    def cdf(self, r):
        idx = self._bin_index(r)
        left = self.edges[idx]
        width = self.edges[1] - self.edges[0]
        return self.cum[idx] + self.heights[idx] * (r - left)

    def ppf(self, u):
        idx = np.searchsorted(self.cum[1:], u, side="left")
        idx = np.clip(idx, 0, self.heights.size - 1)
        gap = self.cum[idx + 1] - self.cum[idx]
        width = self.edges[1] - self.edges[0]
        # Flat CDF stretch (zero-weight bin): land on the left edge.
        frac = np.where(gap > 0.0, (u - self.cum[idx]) / np.where(gap > 0.0, gap, 1.0), 0.0)
        return self.edges[idx] + frac * width


_IMPLS = {
    "burr-truncated": _BurrTruncatedImpl,
    "beta": _BetaImpl,
    "uniform": _UniformImpl,
    "triangular-up": _TriangularUpImpl,
    "triangular-down": _TriangularDownImpl,
    "histogram": _HistogramImpl,
}


def _build_impl(family, params, support):
    return _IMPLS[family](params, support)


def _require_keys(params, expected, family):
    got = set(params)
    if got != expected:
        raise ValueError(
            f"{family} expects params {sorted(expected)}, got {sorted(got)}"
        )


def _positive(value, name):
    value = float(value)
    if not (math.isfinite(value) and value > 0.0):
        raise ValueError(f"parameter {name} must be a positive finite real")
    return value


def _make_rng(rng_seed):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(rng_seed)))


class DomainSet:
    """A finite union of disjoint intervals within a common support.

    Intervals are stored sorted ascending with positive widths; abutting
    intervals are merged at construction so the representation is
    canonical.  The complement within the support is again a valid
    :class:`DomainSet`.
    """

    __slots__ = ("intervals", "support", "_hash")

    def __init__(self, intervals, support):
        lo, hi = (float(support[0]), float(support[1]))
        if not lo < hi:
            raise ValueError("support must satisfy lo < hi")
        cleaned = []
        for a, b in intervals:
            a, b = float(a), float(b)
            if not b > a:
                raise ValueError(f"interval ({a}, {b}) has nonpositive width")
            cleaned.append((a, b))
        cleaned.sort()
        merged: list[list[float]] = []
        for a, b in cleaned:
            if merged and a < merged[-1][1]:
                raise ValueError("intervals must be pairwise disjoint")
            if merged and a == merged[-1][1]:
                merged[-1][1] = b
            else:
                merged.append([a, b])
        if merged:
            if merged[0][0] < lo or merged[-1][1] > hi:
                raise ValueError("intervals must lie within the support")
        ivals = tuple((a, b) for a, b in merged)
        object.__setattr__(self, "intervals", ivals)
        object.__setattr__(self, "support", (lo, hi))
        object.__setattr__(self, "_hash", hash((ivals, (lo, hi))))

    def __setattr__(self, name, value):
        raise AttributeError("DomainSet is immutable")

    def __eq__(self, other):
        if not isinstance(other, DomainSet):
            return NotImplemented
        return self.intervals == other.intervals and self.support == other.support

    def __hash__(self):
        return self._hash

    def __repr__(self):
        parts = ", ".join(f"({a:g}, {b:g})" for a, b in self.intervals)
        return f"DomainSet([{parts}], support={list(self.support)})"

    @classmethod
    def empty(cls, support):
        return cls((), support)

    @classmethod
    def full(cls, support):
        return cls(((support[0], support[1]),), support)

    @property
    def is_empty(self):
        return not self.intervals

    @property
    def total_length(self):
        return sum(b - a for a, b in self.intervals)

    def complement(self):
        """The support minus this set."""
        lo, hi = self.support
        gaps = []
        cursor = lo
        for a, b in self.intervals:
            if a > cursor:
                gaps.append((cursor, a))
            cursor = b
        if cursor < hi:
            gaps.append((cursor, hi))
        return DomainSet(gaps, self.support)

    def intersect(self, other):
        """Intersection with another set on the same support."""
        if other.support != self.support:
            raise DomainMismatchError("sets must share a support")
        out = []
        for a, b in self.intervals:
            for c, d in other.intervals:
                lo, hi = max(a, c), min(b, d)
                if hi > lo:
                    out.append((lo, hi))
        return DomainSet(out, self.support)

    def difference(self, other):
        """This set minus another set on the same support."""
        return self.intersect(other.complement())

    def contains(self, r):
        """Membership mask under the half-open counting convention.

        Each interval counts as ``[lo, hi)`` except that an interval ending
        at the support's upper endpoint includes it.  The convention only
        matters for empirical counting; interval endpoints carry no
        probability under a continuous model.
        """
        r = _as_float_array(r)
        scalar = r.ndim == 0
        r1 = np.atleast_1d(r)
        mask = np.zeros(r1.shape, dtype=bool)
        sup_hi = self.support[1]
        for a, b in self.intervals:
            if b == sup_hi:
                mask |= (r1 >= a) & (r1 <= b)
            else:
                mask |= (r1 >= a) & (r1 < b)
        return bool(mask[0]) if scalar else mask


def pdf(model, r):
    """Density of ``model`` at ``r``."""
    return model.pdf(r)


def _check_set_in_support(model, domain):
    lo, hi = model.support
    for a, b in domain.intervals:
        if a < lo or b > hi:
            raise DomainMismatchError(
                f"interval ({a}, {b}) lies outside model support [{lo}, {hi}]"
            )


def measure(model, domain):
    """Probability of ``domain`` under ``model`` via CDF differences."""
    _check_set_in_support(model, domain)
    total = 0.0
    for a, b in domain.intervals:
        total += float(model.cdf(b)) - float(model.cdf(a))
    return min(max(total, 0.0), 1.0)


def measure_by_quadrature(model, domain, tol=_QUAD_TOL):
    """Probability of ``domain`` by adaptive Simpson quadrature on the pdf.

    Independent of the CDF route; used to cross-check it and to serve
    families whose CDF would lack a closed form.
    """
    _check_set_in_support(model, domain)
    total = 0.0
    for a, b in domain.intervals:
        total += _adaptive_simpson(model.pdf, a, b, tol)
    return total


def _safe_eval(f, x, lo, hi):
    v = float(f(x))
    if math.isfinite(v):
        return v
    # Unbounded endpoint density (e.g. beta shapes < 1): nudge inward.
    nudge = 1e-13 * (hi - lo)
    if x <= lo + nudge:
        return float(f(lo + nudge))
    return float(f(hi - nudge))


def _adaptive_simpson(f, lo, hi, tol):
    fa = _safe_eval(f, lo, lo, hi)
    fb = _safe_eval(f, hi, lo, hi)
    m = 0.5 * (lo + hi)
    fm = _safe_eval(f, m, lo, hi)
    whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb)
    return _simpson_recurse(f, lo, hi, fa, fm, fb, whole, tol, _QUAD_MAX_DEPTH)


def _simpson_recurse(f, lo, hi, fa, fm, fb, whole, tol, depth):
    m = 0.5 * (lo + hi)
    lm = 0.5 * (lo + m)
    rm = 0.5 * (m + hi)
    flm = _safe_eval(f, lm, lo, hi)
    frm = _safe_eval(f, rm, lo, hi)
    left = (m - lo) / 6.0 * (fa + 4.0 * flm + fm)
    right = (hi - m) / 6.0 * (fm + 4.0 * frm + fb)
    if depth <= 0 or abs(left + right - whole) <= 15.0 * tol:
        return left + right + (left + right - whole) / 15.0
    half = 0.5 * tol
    return _simpson_recurse(
        f, lo, m, fa, flm, fm, left, half, depth - 1
    ) + _simpson_recurse(f, m, hi, fm, frm, fb, right, half, depth - 1)


class MixturePopulation:
    """Prevalence ``q`` with positive density ``P`` and negative ``N``.

    The observable density is ``Q(r) = q P(r) + (1 - q) N(r)``.  Both
    component models must share one support.
    """

    __slots__ = ("q", "positive", "negative", "_hash")

    def __init__(self, q, positive, negative):
        q = float(q)
        if not (0.0 <= q <= 1.0):
            raise ValueError("prevalence q must lie in [0, 1]")
        if positive.support != negative.support:
            raise DomainMismatchError(
                "positive and negative models must share a support, got "
                f"{list(positive.support)} and {list(negative.support)}"
            )
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "positive", positive)
        object.__setattr__(self, "negative", negative)
        object.__setattr__(self, "_hash", hash((q, positive, negative)))

    def __setattr__(self, name, value):
        raise AttributeError("MixturePopulation is immutable")

    def __eq__(self, other):
        if not isinstance(other, MixturePopulation):
            return NotImplemented
        return (
            self.q == other.q
            and self.positive == other.positive
            and self.negative == other.negative
        )

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return (
            f"MixturePopulation(q={self.q:g}, positive={self.positive!r}, "
            f"negative={self.negative!r})"
        )

    @property
    def support(self):
        return self.positive.support

    def mixture_pdf(self, r):
        return self.q * self.positive.pdf(r) + (1.0 - self.q) * self.negative.pdf(r)

    def sample(self, count, rng_seed):
        """Unlabeled mixture draws: component P with probability ``q``."""
        values, _ = self.sample_labeled(count, rng_seed)
        return values

    def sample_labeled(self, count, rng_seed):
        """Mixture draws plus the boolean positive-component labels."""
        if count < 1:
            raise ValueError("count must be a positive integer")
        rng = _make_rng(rng_seed)
        u = rng.random((int(count), 2))
        labels = u[:, 0] < self.q
        values = np.empty(int(count), dtype=np.float64)
        values[labels] = self.positive.ppf(u[labels, 1])
        values[~labels] = self.negative.ppf(u[~labels, 1])
        return values, labels


def mixture_pdf(pop, r):
    """Observable mixture density ``q P(r) + (1 - q) N(r)``."""
    return pop.mixture_pdf(r)


def mixture_measure(pop, domain):
    """Probability of ``domain`` under the mixture: q P_D + (1 - q) N_D."""
    return pop.q * measure(pop.positive, domain) + (1.0 - pop.q) * measure(
        pop.negative, domain
    )


def sample(pop_or_model, count, rng_seed):
    """Draw ``count`` values from a model or mixture; seed-deterministic."""
    return pop_or_model.sample(count, rng_seed)


_SPEC_KEYS = {"family", "params", "support"}
# Fit outputs round-trip through the loader; they may carry these
# bookkeeping fields on top of the model spec and nothing else.
_FIT_EXTRA_KEYS = {"nll", "converged", "normalization"}


def model_to_spec(model):
    """Serialize a model to the JSON-object form."""
    return {
        "family": model.family,
        "params": {k: float(v) for k, v in sorted(model.params.items())},
        "support": [model.support[0], model.support[1]],
    }


def model_from_spec(spec):
    """Build a model from the JSON-object form; unknown fields rejected."""
    if not isinstance(spec, dict):
        raise ValueError("model spec must be a JSON object")
    keys = set(spec)
    unknown = keys - _SPEC_KEYS - _FIT_EXTRA_KEYS
    missing = _SPEC_KEYS - keys
    if unknown or missing:
        parts = []
        if unknown:
            parts.append(f"unknown fields {sorted(unknown)}")
        if missing:
            parts.append(f"missing fields {sorted(missing)}")
        raise ValueError("invalid model spec: " + "; ".join(parts))
    family = spec["family"]
    params = spec["params"]
    support = spec["support"]
    if not isinstance(family, str):
        raise ValueError("model spec field 'family' must be a string")
    if not isinstance(params, dict):
        raise ValueError("model spec field 'params' must be an object")
    if not isinstance(support, (list, tuple)) or len(support) != 2:
        raise ValueError("model spec field 'support' must be [lo, hi]")
    return ProbabilityModel(family, params, (support[0], support[1]))
