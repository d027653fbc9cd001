"""Fit the five named methods for regression or classification."""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from . import estimators as est
from .data import Task, design_matrix
from .errors import ConfigError, ValidationError
from .propensity import PropensityScores, fit_logistic, fit_propensity
from .solvers import PgmOptions, Solution, pgm_logistic, solve_constrained_least_squares


class Method(str, enum.Enum):
    UNCONSTRAINED = "unconstrained"
    SINGLE_MD = "single"
    MULTI_MD = "multi"
    IPW = "ipw"
    DR = "dr"


_ALIASES = {
    "none": Method.UNCONSTRAINED,
    "ols": Method.UNCONSTRAINED,
    "unconstrained": Method.UNCONSTRAINED,
    "single": Method.SINGLE_MD,
    "single_md": Method.SINGLE_MD,
    "multi": Method.MULTI_MD,
    "multi_md": Method.MULTI_MD,
    "ipw": Method.IPW,
    "fcee_ipw": Method.IPW,
    "dr": Method.DR,
    "fcee_dr": Method.DR,
}


@dataclass(frozen=True)
class MethodSpec:
    method: Method
    K: int | None = None
    task: Task | None = None
    solver_opts: PgmOptions = field(default_factory=PgmOptions)
    propensity_opts: dict = field(default_factory=dict, hash=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if self.task is not None:
            object.__setattr__(self, "task", Task(self.task))
        if self.method is Method.MULTI_MD:
            if self.K is None or int(self.K) < 1:
                raise ConfigError("Multi MD needs K >= 1")
            object.__setattr__(self, "K", int(self.K))
        elif self.K is not None:
            raise ConfigError(f"K only applies to Multi MD, not {self.method.value}")

    @property
    def name(self):
        if self.method is Method.MULTI_MD:
            return f"multi:{self.K}"
        return self.method.value

    @property
    def needs_propensity(self):
        return self.method in (Method.MULTI_MD, Method.IPW, Method.DR)


def parse_method(text, **kw):
    """Parse ``single``, ``multi:5``, ``ipw``, ``dr`` or ``unconstrained``."""
    name, _, arg = text.strip().lower().partition(":")
    if name not in _ALIASES:
        raise ConfigError(f"unknown method {text!r}")
    method = _ALIASES[name]
    K = None
    if method is Method.MULTI_MD:
        try:
            K = int(arg)
        except ValueError:
            raise ConfigError(f"Multi MD needs an integer K, e.g. multi:5 (got {text!r})") from None
    elif arg:
        raise ConfigError(f"method {name!r} takes no argument")
    return MethodSpec(method, K=K, **kw)


@dataclass(frozen=True, eq=False)
class FittedModel:
    spec: MethodSpec
    task: Task
    solution: Solution
    intercept: bool
    n_features: int
    constraint: est.ConstraintSystem | None = None
    scores_used: PropensityScores | None = None
    outcome_models: est.OutcomeModels | None = None

    @property
    def w(self):
        return self.solution.w


def build_constraint(dataset, spec, scores=None, outcome_models=None):
    """Return ``(constraint, scores, outcome_models)`` for ``spec`` on ``dataset``."""
    A = dataset.design()
    if spec.method is Method.UNCONSTRAINED:
        return None, None, None
    if spec.method is Method.SINGLE_MD:
        return est.single_md_constraint(A, dataset.s), None, None
    dataset.require_explanatory()
    if scores is None:
        scores = fit_propensity(dataset, **spec.propensity_opts)
    z = scores.z
    if spec.method is Method.MULTI_MD:
        return est.multi_md_constraints(A, dataset.s, z, spec.K), scores, None
    if spec.method is Method.IPW:
        return est.ipw_constraint(A, dataset.s, z), scores, None
    if outcome_models is None:
        outcome_models = est.fit_outcome_models(dataset)
    return est.dr_constraint(A, dataset.s, z, outcome_models), scores, outcome_models


def _unconstrained_logistic(A, y):
    w, _, converged = fit_logistic(A, y)
    f = float(np.logaddexp(0.0, -(2.0 * y - 1.0) * (A @ w)).sum())
    return Solution(w, f, 0.0, 1, converged=converged)


def fit(dataset, spec, scores=None, outcome_models=None):
    """Fit ``spec`` on ``dataset``.

    Propensity scores and outcome models may be passed in so several methods
    share them; otherwise they are fitted here. ``MultiMDInfeasible`` and
    ``DegenerateConstraintError`` propagate to the caller.
    """
    if isinstance(spec, str):
        spec = parse_method(spec)
    task = dataset.task
    if spec.task is not None and spec.task is not task:
        raise ConfigError(f"method is for {spec.task.value} but dataset is {task.value}")
    C, scores, outcome_models = build_constraint(dataset, spec, scores, outcome_models)
    A = dataset.design()
    if task is Task.REGRESSION:
        sol = solve_constrained_least_squares(A, dataset.y, C)
    elif C is None:
        sol = _unconstrained_logistic(A, dataset.y)
    else:
        sol = pgm_logistic(A, dataset.y, C, spec.solver_opts)
    return FittedModel(spec, task, sol, dataset.intercept, dataset.d, C, scores, outcome_models)


def decision_function(model, X_new):
    """Linear scores ``x w`` (intercept column appended as in training)."""
    X_new = np.asarray(X_new, dtype=float)
    if X_new.ndim != 2 or X_new.shape[1] != model.n_features:
        raise ValidationError(
            f"expected {model.n_features} feature columns, got shape {X_new.shape}"
        )
    return design_matrix(X_new, model.intercept) @ model.w


def predict(model, X_new):
    """Regression: ``x w``; classification: ``sigmoid(x w)``."""
    raw = decision_function(model, X_new)
    return expit(raw) if model.task is Task.CLASSIFICATION else raw


def constraint_value(model, dataset, outputs=None):
    """The method's defining estimator evaluated on ``outputs``.

    ``outputs`` defaults to the in-sample linear scores. Multi MD returns the
    vector of stratum MDs; the unconstrained model returns ``None``.
    """
    if outputs is None:
        outputs = decision_function(model, dataset.X)
    m = model.spec.method
    if m is Method.UNCONSTRAINED:
        return None
    if m is Method.SINGLE_MD:
        return est.mean_difference(outputs, dataset.s)
    if m is Method.MULTI_MD:
        return est.stratum_mds(outputs, dataset.s, model.constraint.strata)
    if m is Method.IPW:
        return est.ipw_estimate(outputs, dataset.s, model.scores_used.z)
    return est.dr_estimate(outputs, dataset.s, model.scores_used.z, model.outcome_models)


def to_dict(model):
    sol = model.solution
    diag = {
        "objective": sol.objective,
        "constraint_residual": sol.constraint_residual,
        "iterations": sol.iterations,
        "converged": sol.converged,
        "ridge_used": sol.ridge_used,
    }
    if model.spec.K is not None:
        diag["K"] = model.spec.K
    if model.scores_used is not None:
        diag["propensity_auc"] = model.scores_used.auc
    return {
        "method": model.spec.name,
        "task": model.task.value,
        "weights": [float(v) for v in sol.w],
        "intercept_flag": model.intercept,
        "constraint_kind": None if model.constraint is None else model.constraint.kind.value,
        "diagnostics": diag,
    }


def to_json(model, path=None):
    text = json.dumps(to_dict(model), indent=2)
    if path is not None:
        with open(path, "w", encoding="utf-8") as f:
            f.write(text + "\n")
    return text
