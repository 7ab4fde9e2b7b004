"""Exception types shared across the package."""


class PrevoptError(Exception):
    """Base class for all package-specific errors."""


class DomainMismatchError(PrevoptError):
    """A domain set lies (partly) outside the support of a model."""


class DegenerateDomainError(PrevoptError):
    """The domain cannot separate the populations: P_D equals N_D.

    Prevalence cannot be recovered on such a domain because the estimator
    denominator P_D - N_D vanishes.
    """


class UnattainableTargetError(PrevoptError):
    """The requested mixture measure cannot be reached on this branch.

    Carries the attainable range so callers can adjust the target.
    """

    def __init__(self, target, attainable_lo, attainable_hi, branch):
        self.target = target
        self.attainable_lo = attainable_lo
        self.attainable_hi = attainable_hi
        self.branch = branch
        super().__init__(
            f"target measure {target:.6g} not attainable on branch "
            f"'{branch}'; attainable range is "
            f"({attainable_lo:.6g}, {attainable_hi:.6g})"
        )
