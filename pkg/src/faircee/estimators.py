"""Causal-effect estimators and the affine constraints they induce on weights.

Every estimator here is linear in the outcome vector, so "estimator of the
model outputs equals zero" becomes a linear equality ``P w = q`` on the
weights of a linear model.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.special import expit

from .data import Task, index_sets
from .errors import (
    DegenerateConstraintError,
    EstimatorError,
    MultiMDInfeasible,
    StratificationError,
)
from .propensity import fit_logistic

MAX_COND = 1e12
OUTCOME_RIDGE = 1e-6


class ConstraintKind(str, enum.Enum):
    SINGLE_MD = "single_md"
    MULTI_MD = "multi_md"
    IPW = "ipw"
    DR = "dr"


@dataclass(frozen=True, eq=False)
class ConstraintSystem:
    """Affine constraint ``P w = q`` with one row per fairness constraint."""

    P: np.ndarray
    q: np.ndarray
    kind: ConstraintKind
    K: int | None = None
    strata: tuple = field(default=(), repr=False)

    def __post_init__(self):
        P = np.atleast_2d(np.asarray(self.P, dtype=float))
        q = np.atleast_1d(np.asarray(self.q, dtype=float)).ravel()
        m, d = P.shape
        if q.shape[0] != m:
            raise ValueError(f"q has length {q.shape[0]}, expected {m}")
        if not (np.all(np.isfinite(P)) and np.all(np.isfinite(q))):
            raise DegenerateConstraintError("constraint contains non-finite values")
        if m > d:
            raise DegenerateConstraintError(f"{m} constraints on {d} weights")
        if np.any(np.all(P == 0.0, axis=1)):
            raise DegenerateConstraintError("constraint matrix has an all-zero row")
        if np.linalg.cond(P @ P.T) > MAX_COND:
            raise DegenerateConstraintError("constraint rows are (numerically) linearly dependent")
        P.setflags(write=False)
        q.setflags(write=False)
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "kind", ConstraintKind(self.kind))

    @property
    def m(self):
        return self.P.shape[0]

    @cached_property
    def projector(self):
        """``P^T (P P^T)^{-1}``, the correction map used by the projection."""
        return np.linalg.solve(self.P @ self.P.T, self.P).T

    def residual(self, w):
        return float(np.max(np.abs(self.P @ w - self.q)))


@dataclass(frozen=True, eq=False)
class OutcomeModels:
    g_plus: np.ndarray
    g_minus: np.ndarray
    weights_plus: np.ndarray  # explanatory coefficients, then intercept
    weights_minus: np.ndarray
    ridge_plus: bool = False
    ridge_minus: bool = False


def _groups(s):
    plus, minus = index_sets(s)
    if plus.size == 0 or minus.size == 0:
        raise EstimatorError("both sensitive groups must be non-empty")
    return plus, minus


def mean_difference(y, s):
    """Mean of ``y`` over S=1 minus mean over S=0."""
    y = np.asarray(y, dtype=float)
    plus, minus = _groups(s)
    return float(y[plus].mean() - y[minus].mean())


def md_constraint_vector(s):
    s = np.asarray(s, dtype=float)
    _groups(s)
    return s / s.sum() - (1.0 - s) / (1.0 - s).sum()


def ipw_weights(s, z):
    """``a = s/z`` and ``b = (1-s)/(1-z)``."""
    s = np.asarray(s, dtype=float)
    z = np.asarray(z, dtype=float)
    if s.shape != z.shape:
        raise EstimatorError("s and z must have the same length")
    if np.any(z <= 0.0) or np.any(z >= 1.0):
        raise EstimatorError("propensity scores must lie strictly inside (0, 1)")
    return s / z, (1.0 - s) / (1.0 - z)


def ipw_constraint_vector(s, z):
    _groups(s)
    a, b = ipw_weights(s, z)
    return a / a.sum() - b / b.sum()


def ipw_estimate(y, s, z):
    """Normalised inverse-probability-weighted difference of group means."""
    y = np.asarray(y, dtype=float)
    _groups(s)
    a, b = ipw_weights(s, z)
    return float((a @ y) / a.sum() - (b @ y) / b.sum())


def _outcome_design(Xe):
    return np.hstack([Xe, np.ones((Xe.shape[0], 1))])


def _fit_group(A, y, task):
    n, p = A.shape
    use_ridge = n <= p
    pen = np.r_[np.ones(p - 1), 0.0]
    if task is Task.CLASSIFICATION:
        w, _, _ = fit_logistic(A, y, ridge=OUTCOME_RIDGE if use_ridge else 0.0, penalize=pen)
    elif use_ridge:
        w = np.linalg.solve(A.T @ A + OUTCOME_RIDGE * np.diag(pen), A.T @ y)
    else:
        w = np.linalg.lstsq(A, y, rcond=None)[0]
    return w, use_ridge


def fit_outcome_models(dataset):
    """Fit G+ on S=1 rows and G- on S=0 rows, using explanatory columns only.

    Regression uses least squares, classification logistic MLE with predicted
    probabilities as outputs. Groups with no more rows than coefficients get a
    tiny ridge on the non-intercept coefficients.
    """
    dataset.require_explanatory()
    plus, minus = _groups(dataset.s)
    A = _outcome_design(dataset.X_e)
    wp, rp = _fit_group(A[plus], dataset.y[plus], dataset.task)
    wm, rm = _fit_group(A[minus], dataset.y[minus], dataset.task)
    gp, gm = A @ wp, A @ wm
    if dataset.task is Task.CLASSIFICATION:
        gp, gm = expit(gp), expit(gm)
    return OutcomeModels(gp, gm, wp, wm, rp, rm)


def dr_estimate(y, s, z, models):
    y = np.asarray(y, dtype=float)
    a, b = ipw_weights(s, z)
    gp, gm = models.g_plus, models.g_minus
    return float(np.mean((a - b) * y + (1.0 - a) * gp - (1.0 - b) * gm))


def single_md_constraint(X, s):
    return ConstraintSystem(md_constraint_vector(s) @ np.asarray(X, dtype=float), [0.0],
                            ConstraintKind.SINGLE_MD)


def ipw_constraint(X, s, z):
    return ConstraintSystem(ipw_constraint_vector(s, z) @ np.asarray(X, dtype=float), [0.0],
                            ConstraintKind.IPW)


def dr_constraint(X, s, z, models):
    """Constraint whose solutions make the DR estimate of ``X w`` vanish.

    The 1/N factor of the estimator is dropped; it does not change the
    solution set.
    """
    a, b = ipw_weights(s, z)
    P = (a - b) @ np.asarray(X, dtype=float)
    q = (1.0 - b) @ models.g_minus - (1.0 - a) @ models.g_plus
    if not np.any(P):
        raise DegenerateConstraintError("DR constraint row is zero")
    return ConstraintSystem(P, [q], ConstraintKind.DR)


def stratify(z, K):
    """Split indices into ``K`` strata at the k/K empirical quantiles of ``z``.

    Ties are broken by original index (stable sort); stratum ``k`` holds the
    sorted positions ``floor(k N / K)`` up to ``floor((k+1) N / K)``.
    """
    z = np.asarray(z, dtype=float)
    N = z.shape[0]
    K = int(K)
    if K < 1 or K > N:
        raise StratificationError(K, f"K={K} must lie in [1, {N}]")
    order = np.argsort(z, kind="stable")
    cuts = [k * N // K for k in range(K + 1)]
    strata = [np.sort(order[cuts[k]:cuts[k + 1]]) for k in range(K)]
    if any(len(st) == 0 for st in strata):
        raise StratificationError(K)
    return strata


def check_strata(s, strata):
    """Raise :class:`MultiMDInfeasible` for the first one-sided stratum."""
    s = np.asarray(s)
    for k, st in enumerate(strata):
        ss = s[st]
        if ss.min() == ss.max():
            raise MultiMDInfeasible(k, len(strata))


def stratum_mds(y, s, strata):
    y = np.asarray(y, dtype=float)
    s = np.asarray(s)
    return np.array([mean_difference(y[st], s[st]) for st in strata])


def multi_md_constraints(X, s, z, K):
    """One MD=0 row per propensity stratum: row k is ``d_(k)^T X_(k)``."""
    X = np.asarray(X, dtype=float)
    s = np.asarray(s, dtype=float)
    strata = stratify(z, K)
    check_strata(s, strata)
    P = np.vstack([md_constraint_vector(s[st]) @ X[st] for st in strata])
    return ConstraintSystem(P, np.zeros(len(strata)), ConstraintKind.MULTI_MD,
                            K=len(strata), strata=tuple(strata))
