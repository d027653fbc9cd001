"""Equality-constrained least squares (KKT) and projected gradient for logistic loss."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import _kernels
from .errors import ConfigError, DegenerateConstraintError, ValidationError

L_FLOOR = 1e-12
KKT_RIDGE = 1e-10


@dataclass(frozen=True)
class PgmOptions:
    eta0: float = 1.0
    beta: float = 0.5
    max_iter: int = 10000
    grad_tol: float = 1e-8

    def __post_init__(self):
        if not self.eta0 > 0:
            raise ConfigError("eta0 must be positive")
        if not 0 < self.beta < 1:
            raise ConfigError("beta must lie in (0, 1)")
        if self.max_iter < 0 or self.grad_tol < 0:
            raise ConfigError("max_iter and grad_tol must be non-negative")


@dataclass(frozen=True, eq=False)
class Solution:
    w: np.ndarray
    objective: float
    constraint_residual: float
    iterations: int
    loss_trace: np.ndarray | None = None
    converged: bool = True
    ridge_used: bool = False
    multipliers: np.ndarray | None = None
    iterates: np.ndarray | None = None
    final_eta: float | None = None


def lipschitz_constant(X):
    """Sum of squared row norms of ``X``, a gradient Lipschitz bound for the logistic loss."""
    X = np.asarray(X, dtype=float)
    return float(np.sum(X * X))


def project_affine(w, C):
    """Euclidean projection of ``w`` onto ``{v : C.P v = C.q}``."""
    w = np.asarray(w, dtype=float)
    return w - C.projector @ (C.P @ w - C.q)


def _residual(C, w):
    return 0.0 if C is None else C.residual(w)


def solve_constrained_least_squares(X, y, C=None):
    """Minimise ``||X w - y||^2`` subject to ``C.P w = C.q``.

    Solves the KKT system ``[2X'X, P'; P, 0] [w; lam] = [2X'y; q]`` with a
    symmetric-indefinite factorisation. Constraint rows are rescaled to unit
    norm for the factorisation; multipliers are reported for the original rows.
    If the system is singular a ``1e-10`` ridge is added to the ``X'X`` block
    and ``ridge_used`` is set.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    N, d = X.shape
    G = 2.0 * X.T @ X
    c = 2.0 * X.T @ y
    if C is None:
        w = np.linalg.lstsq(X, y, rcond=None)[0]
        r = X @ w - y
        return Solution(w, float(r @ r), 0.0, 1)
    m = C.m
    if m > d or C.P.shape[1] != d:
        raise DegenerateConstraintError(f"constraint of shape {C.P.shape} for {d} weights")
    scale = 1.0 / np.linalg.norm(C.P, axis=1)
    Ps = C.P * scale[:, None]
    qs = C.q * scale

    def kkt(ridge):
        K = np.zeros((d + m, d + m))
        K[:d, :d] = G + ridge * np.eye(d)
        K[:d, d:] = Ps.T
        K[d:, :d] = Ps
        with warnings.catch_warnings():
            warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
            return scipy.linalg.solve(K, np.r_[c, qs], assume_a="sym")

    ridge_used = False
    try:
        sol = kkt(0.0)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning):
        ridge_used = True
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            sol = kkt(KKT_RIDGE * max(1.0, float(np.max(np.abs(np.diag(G))))))
    w = sol[:d]
    lam = sol[d:] * scale
    r = X @ w - y
    return Solution(w, float(r @ r), C.residual(w), 1, ridge_used=ridge_used, multipliers=lam)


def projected_gradient(X, y, C=None, opts=None, loss="logistic", w0=None, record_iterates=False):
    """Projected gradient with backtracking floored at ``1/L``.

    ``loss="logistic"`` takes labels in {0,1} (mapped to +-1) and minimises
    ``sum log(1 + exp(-y_i x_i w))``; ``loss="squared"`` minimises
    ``||X w - y||^2`` and exists to cross-check the closed-form solver.
    Iteration starts from the projection of ``w0`` (zeros by default).
    """
    opts = opts or PgmOptions()
    X = np.ascontiguousarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    N, d = X.shape
    if y.shape[0] != N:
        raise ValidationError("X and y row counts differ")
    if loss == "logistic":
        if not np.all((y == 0) | (y == 1)):
            raise ValidationError("logistic loss needs labels in {0, 1}")
        target = 2.0 * y - 1.0
        kind = _kernels.LOGISTIC
        L = lipschitz_constant(X)
    elif loss == "squared":
        target = y
        kind = _kernels.SQUARED
        L = 2.0 * lipschitz_constant(X)
    else:
        raise ConfigError(f"unknown loss {loss!r}")
    L = max(L, L_FLOOR)
    if C is None:
        P, M, q = np.zeros((0, d)), np.zeros((d, 0)), np.zeros(0)
    else:
        if C.P.shape[1] != d:
            raise DegenerateConstraintError(f"constraint of shape {C.P.shape} for {d} weights")
        P, M, q = C.P, C.projector, C.q
    w0 = np.zeros(d) if w0 is None else np.asarray(w0, dtype=float)
    w, trace, iterates, t, converged, eta = _kernels.run_pgm(
        X, target, P, M, q, w0, float(opts.eta0), float(opts.beta), float(L),
        int(opts.max_iter), float(opts.grad_tol), kind, bool(record_iterates),
    )
    return Solution(
        w=w,
        objective=float(trace[-1]),
        constraint_residual=_residual(C, w),
        iterations=int(t),
        loss_trace=trace,
        converged=bool(converged),
        iterates=iterates,
        final_eta=float(eta),
    )


def pgm_logistic(X, y01, C=None, opts=None, record_iterates=False):
    return projected_gradient(X, y01, C, opts, loss="logistic", record_iterates=record_iterates)
