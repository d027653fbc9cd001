"""Propensity scores P(S=1 | X_e) by logistic maximum likelihood."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit
from scipy.stats import rankdata

from .data import index_sets
from .errors import ValidationError

EPS_CLIP = 1e-6
MAX_HALVINGS = 60


@dataclass(frozen=True, eq=False)
class PropensityScores:
    z: np.ndarray
    model_weights: np.ndarray  # explanatory coefficients, then intercept
    auc: float
    loglik_trace: tuple = ()
    converged: bool = True


def _loglik(A, t, w, ridge, pen):
    eta = A @ w
    ll = float(t @ eta - np.logaddexp(0.0, eta).sum())
    return ll - 0.5 * ridge * float(np.sum((w * pen) ** 2))


def fit_logistic(A, t, max_iter=100, tol=1e-10, ridge=0.0, penalize=None):
    """Maximise the logistic log-likelihood of ``t`` in {0,1} on design ``A``.

    Damped Newton from the zero vector: each Newton direction is halved until
    the (optionally ridge-penalised) log-likelihood does not decrease. Directions
    come from a least-squares solve, so flat directions (e.g. all-zero columns)
    get a zero step instead of blowing up.

    Returns ``(w, loglik_trace, converged)``.
    """
    A = np.asarray(A, dtype=float)
    t = np.asarray(t, dtype=float)
    n, p = A.shape
    pen = np.ones(p) if penalize is None else np.asarray(penalize, dtype=float)
    w = np.zeros(p)
    ll = _loglik(A, t, w, ridge, pen)
    trace = [ll]
    for _ in range(max_iter):
        mu = expit(A @ w)
        g = A.T @ (t - mu) - ridge * pen * w
        if np.max(np.abs(g)) <= tol:
            return w, tuple(trace), True
        H = (A * (mu * (1.0 - mu))[:, None]).T @ A + np.diag(ridge * pen)
        step = np.linalg.lstsq(H, g, rcond=None)[0]
        if not np.all(np.isfinite(step)):
            break
        alpha = 1.0
        for _ in range(MAX_HALVINGS):
            w_new = w + alpha * step
            ll_new = _loglik(A, t, w_new, ridge, pen)
            if ll_new >= ll:
                break
            alpha *= 0.5
        else:
            break
        if ll_new == ll and np.array_equal(w_new, w):
            break
        w, ll = w_new, ll_new
        trace.append(ll)
    mu = expit(A @ w)
    g = A.T @ (t - mu) - ridge * pen * w
    return w, tuple(trace), bool(np.max(np.abs(g)) <= tol)


def compute_auc(z, s):
    """Mann-Whitney AUC of scores ``z`` for labels ``s``; ties count 1/2."""
    z = np.asarray(z, dtype=float)
    s = np.asarray(s)
    plus, minus = index_sets(s)
    if plus.size == 0 or minus.size == 0:
        raise ValidationError("AUC needs both sensitive groups")
    ranks = rankdata(z)
    n1, n0 = plus.size, minus.size
    return float((ranks[plus].sum() - n1 * (n1 + 1) / 2.0) / (n1 * n0))


def fit_propensity(dataset, max_iter=100, tol=1e-10):
    """Logistic regression of ``s`` on the explanatory columns plus intercept.

    Scores are clipped to ``[EPS_CLIP, 1 - EPS_CLIP]``. Perfectly separable
    data is not an error: the weights simply grow until ``max_iter``.
    """
    dataset.require_explanatory()
    Xe = dataset.X_e
    if not np.all(np.isfinite(Xe)):
        raise ValidationError("explanatory features contain non-finite values")
    A = np.hstack([Xe, np.ones((Xe.shape[0], 1))])
    w, trace, converged = fit_logistic(A, dataset.s, max_iter=max_iter, tol=tol)
    z = np.clip(expit(A @ w), EPS_CLIP, 1.0 - EPS_CLIP)
    z.setflags(write=False)
    return PropensityScores(
        z=z,
        model_weights=w,
        auc=compute_auc(z, dataset.s),
        loglik_trace=trace,
        converged=converged,
    )
