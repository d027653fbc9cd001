"""Experiment runners: loss/bias trade-off and estimator accuracy over trials."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import expit

from . import estimators as est
from . import models
from . import synthetic as syn
from .data import Dataset, Task
from .errors import DegenerateConstraintError, HarnessError, MultiMDInfeasible, ValidationError
from .propensity import fit_propensity

K_PROBE = range(2, 11)
INFEASIBLE = (MultiMDInfeasible, DegenerateConstraintError)
OPTIONAL_COLUMNS = ("discrim_pred", "md_probs")


@dataclass
class MetricsRow:
    method: str
    K: int | None
    trial: int
    loss: float = math.nan
    md_pred: float = math.nan
    discrim_pred: float | None = None
    md_probs: float | None = None
    infeasible: bool = False
    error: str = ""


@dataclass
class AggregateRow:
    method: str
    K: int | None
    trials: int
    infeasible_trials: int
    loss_mean: float
    loss_se: float
    md_pred_mean: float
    md_pred_se: float
    discrim_pred_mean: float | None = None
    discrim_pred_se: float | None = None
    md_probs_mean: float | None = None
    md_probs_se: float | None = None


@dataclass
class EstimatorSERow:
    estimator: str
    K: int | None
    se: float
    se_err: float
    trials: int


@dataclass
class Trial:
    index: int
    train: Dataset
    test: Dataset
    truth: syn.GroundTruth | None
    scores: object
    outcome_models: object = None


def mean_se(values):
    v = np.asarray([x for x in values if x is not None and not math.isnan(x)], dtype=float)
    if v.size == 0:
        return math.nan, math.nan
    if v.size == 1:
        return float(v[0]), math.nan
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))


def _subset(ds, idx):
    return replace(ds, X=ds.X[idx], s=ds.s[idx], y=ds.y[idx])


def _split(ds, holdout, seed):
    if not holdout:
        return ds, ds
    if not 0.0 < holdout < 1.0:
        raise ValidationError("holdout fraction must lie in [0, 1)")
    perm = np.random.Generator(np.random.PCG64(seed)).permutation(ds.N)
    n_test = int(round(holdout * ds.N))
    return _subset(ds, np.sort(perm[n_test:])), _subset(ds, np.sort(perm[:n_test]))


def _source_config(source):
    if isinstance(source, syn.SyntheticConfig):
        return source
    if isinstance(source, (str, syn.Case)):
        return syn.preset(source)
    return None


def make_trials(source, trials, seed, holdout=0.0, truth=None, propensity_opts=None):
    """Datasets and propensity scores for each trial.

    ``source`` is a preset name, a :class:`SyntheticConfig` (fresh data per
    trial, seeded by ``(seed, trial)``) or a fixed :class:`Dataset`.
    """
    cfg = _source_config(source)
    popts = propensity_opts or {}
    out = []
    for t in range(trials):
        tseed = syn.trial_seed(seed, t)
        if cfg is not None:
            ds, gt = syn.generate(replace(cfg, seed=tseed))
        else:
            ds, gt = source, truth
        train, test = _split(ds, holdout, tseed ^ 0x5EED)
        scores = fit_propensity(train, **popts) if train.explanatory_idx else None
        out.append(Trial(t, train, test, gt, scores))
    return out


def feasible_k(trial, K):
    """True when every stratum is two-sided and ``K`` is below the feature count.

    With ``K >= d`` the stratum constraints pin every feature weight to zero,
    which satisfies MD=0 only through the degenerate all-zero model.
    """
    if K >= trial.train.d:
        return False
    try:
        est.check_strata(trial.train.s, est.stratify(trial.scores.z, K))
    except (MultiMDInfeasible, est.StratificationError):
        return False
    return True


def max_feasible_k(trials, candidates=K_PROBE):
    """Largest K in ``candidates`` feasible for every trial (1 if none)."""
    best = 1
    for K in candidates:
        if all(feasible_k(t, K) for t in trials):
            best = K
    return best


def _resolve_methods(methods, trials):
    specs = []
    for m in methods:
        if isinstance(m, str) and m.strip().lower() in ("multi:max", "multi_md:max"):
            specs.append(models.MethodSpec(models.Method.MULTI_MD, K=max_feasible_k(trials)))
        elif isinstance(m, str):
            specs.append(models.parse_method(m))
        else:
            specs.append(m)
    if not specs:
        raise HarnessError("no methods requested")
    return specs


def evaluate(model, trial):
    """Loss and MD metrics of ``model`` on the trial's evaluation split."""
    ds = trial.test
    scores = models.decision_function(model, ds.X)
    row = MetricsRow(model.spec.name, model.spec.K, trial.index)
    if ds.task is Task.REGRESSION:
        row.loss = float(np.sqrt(np.mean((scores - ds.y) ** 2)))
    else:
        row.loss = float(np.mean(np.logaddexp(0.0, -(2.0 * ds.y - 1.0) * scores)))
        row.md_probs = est.mean_difference(expit(scores), ds.s)
    row.md_pred = est.mean_difference(scores, ds.s)
    if trial.truth is not None:
        row.discrim_pred = row.md_pred - trial.truth.explanatory_bias
    return row


def run_tradeoff(source, methods, trials=50, seed=0, holdout=0.0, truth=None,
                 propensity_opts=None):
    """Fit each method on each trial; return ``(per_trial_rows, aggregate_rows)``.

    Propensity scores and outcome models are fitted once per trial and shared by
    all methods. Infeasible Multi MD fits are recorded with ``infeasible=True``.
    ``multi:max`` resolves to :func:`max_feasible_k` over all trials.
    """
    tr = make_trials(source, trials, seed, holdout, truth, propensity_opts)
    specs = _resolve_methods(methods, tr)
    rows = []
    for t in tr:
        for spec in specs:
            try:
                if spec.method is models.Method.DR and t.outcome_models is None:
                    t.outcome_models = est.fit_outcome_models(t.train)
                fitted = models.fit(t.train, spec, scores=t.scores, outcome_models=t.outcome_models)
            except INFEASIBLE as e:
                rows.append(MetricsRow(spec.name, spec.K, t.index, infeasible=True, error=str(e)))
                continue
            rows.append(evaluate(fitted, t))
    if rows and all(r.infeasible for r in rows):
        raise HarnessError("every method was infeasible on every trial")
    return rows, aggregate(rows, specs)


def aggregate(rows, specs):
    out = []
    for spec in specs:
        mine = [r for r in rows if r.method == spec.name]
        ok = [r for r in mine if not r.infeasible]
        agg = AggregateRow(spec.name, spec.K, len(mine), len(mine) - len(ok),
                           *mean_se(r.loss for r in ok), *mean_se(r.md_pred for r in ok))
        if any(r.discrim_pred is not None for r in mine):
            agg.discrim_pred_mean, agg.discrim_pred_se = mean_se(r.discrim_pred for r in ok)
        if any(r.md_probs is not None for r in mine):
            agg.md_probs_mean, agg.md_probs_se = mean_se(r.md_probs for r in ok)
        out.append(agg)
    return out


def estimator_errors(trial, K):
    """Squared error of each estimator of discrimination on the raw labels."""
    ds, gt = trial.train, trial.truth
    z = trial.scores.z
    om = est.fit_outcome_models(ds)
    target = gt.discrim
    out = {"single": (est.mean_difference(ds.y, ds.s) - target) ** 2}
    strata = est.stratify(z, K)
    est.check_strata(ds.s, strata)
    out["multi"] = float(np.mean((est.stratum_mds(ds.y, ds.s, strata) - target) ** 2))
    out["ipw"] = (est.ipw_estimate(ds.y, ds.s, z) - target) ** 2
    out["dr"] = (est.dr_estimate(ds.y, ds.s, z, om) - target) ** 2
    return out


def run_estimator_accuracy(case, trials=50, seed=0, K=None, propensity_opts=None):
    """Mean squared error against the true discrimination for MD, stratified MD, IPW and DR.

    ``K`` defaults to the largest stratum count feasible in every trial.
    """
    if _source_config(case) is None:
        raise HarnessError("estimator accuracy needs a synthetic case with known ground truth")
    tr = make_trials(case, trials, seed, propensity_opts=propensity_opts)
    if K is None:
        K = max_feasible_k(tr)
    per = {"single": [], "multi": [], "ipw": [], "dr": []}
    for t in tr:
        try:
            errs = estimator_errors(t, K)
        except MultiMDInfeasible as e:
            raise HarnessError(f"trial {t.index}: {e}") from e
        for k, v in errs.items():
            per[k].append(v)
    return [EstimatorSERow(name, K if name == "multi" else None, *mean_se(v), len(v))
            for name, v in per.items()]


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def rows_to_csv(rows, fields=None):
    """Render dataclass rows as CSV text; floats at 12 significant digits."""
    rows = list(rows)
    if fields is None:
        fields = list(rows[0].__dataclass_fields__) if rows else []
        fields = [f for f in fields
                  if not f.startswith(OPTIONAL_COLUMNS) or any(getattr(r, f) is not None for r in rows)]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    for r in rows:
        w.writerow([_fmt(getattr(r, f)) for f in fields])
    return buf.getvalue()
