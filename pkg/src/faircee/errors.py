"""Exception hierarchy shared across the package."""


class FairCEEError(Exception):
    """Base class for all package errors."""


class ConfigError(FairCEEError):
    """Bad column mapping, bad generator parameters or bad options."""


class ParseError(FairCEEError):
    def __init__(self, row, col, value):
        self.row = row
        self.col = col
        self.value = value
        super().__init__(f"cannot parse {value!r} as a number (row {row}, column {col!r})")


class ValidationError(FairCEEError):
    """Input data violates a Dataset or estimator invariant."""


class EstimatorError(FairCEEError):
    """An estimator cannot be evaluated (e.g. one group is empty)."""


class DegenerateConstraintError(FairCEEError):
    """Constraint matrix is zero, rank deficient or has more rows than columns."""


class StratificationError(FairCEEError):
    def __init__(self, K, msg=None):
        self.K = K
        super().__init__(msg or f"cannot split into {K} non-empty strata")


class MultiMDInfeasible(FairCEEError):
    """A propensity stratum contains only one value of the sensitive feature."""

    def __init__(self, k, K):
        self.k = k
        self.K = K
        super().__init__(
            f"stratum {k} of {K} has a one-sided sensitive feature; its MD is undefined"
        )


class HarnessError(FairCEEError):
    """Every requested method failed in an experiment run."""
