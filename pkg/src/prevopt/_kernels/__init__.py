"""Numerical kernel backend selection.

The package ships an optional compiled extension (``_core``) carrying the
hot inner loops: distribution family math, log-likelihood sums, interval
counting and crossing refinement.  When the extension is missing, or the
environment variable ``PREVOPT_DISABLE_EXTENSION`` is set to a non-empty
value, the pure-numpy reference backend is used instead.  Both backends
expose the same functions and agree to near machine precision.
"""

from __future__ import annotations

import os

from . import reference

_backend = None
if not os.environ.get("PREVOPT_DISABLE_EXTENSION"):
    try:
        from . import _core as _backend  # type: ignore[attr-defined]
    except ImportError:
        _backend = None
if _backend is None:
    _backend = reference

BACKEND = _backend.NAME


def get_backend():
    """Return the active kernel module (compiled if available)."""
    return _backend


def available_backends():
    """Names of importable backends, compiled first when present."""
    names = []
    try:
        from . import _core

        names.append(_core.NAME)
    except ImportError:
        pass
    names.append(reference.NAME)
    return names


burr_pdf = _backend.burr_pdf
burr_cdf = _backend.burr_cdf
burr_ppf = _backend.burr_ppf
burr_log_likelihood = _backend.burr_log_likelihood
beta_pdf = _backend.beta_pdf
beta_cdf = _backend.beta_cdf
beta_ppf = _backend.beta_ppf
beta_log_likelihood = _backend.beta_log_likelihood
count_in_intervals = _backend.count_in_intervals
refine_crossings = _backend.refine_crossings
