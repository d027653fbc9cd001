import json
from dataclasses import replace

import numpy as np
import pytest

from faircee import ConfigError, Task, ValidationError, dr_estimate, ipw_estimate, mean_difference
from faircee import models
from faircee import synthetic as syn
from faircee.models import Method, MethodSpec, parse_method
from faircee.solvers import Solution

from .conftest import make_dataset


@pytest.fixture(scope="module")
def default_data():
    return syn.generate(syn.preset("default"))


def test_parse_method():
    assert parse_method("multi:5") == MethodSpec(Method.MULTI_MD, K=5)
    assert parse_method("fcee_dr").method is Method.DR
    assert parse_method("single").name == "single"
    for bad in ("multi", "multi:x", "ipw:3", "lasso"):
        with pytest.raises(ConfigError):
            parse_method(bad)
    with pytest.raises(ConfigError):
        MethodSpec(Method.MULTI_MD, K=0)


def test_single_md_regression_zeroes_md(default_data):
    ds, _ = default_data
    fitted = models.fit(ds, "single")
    assert abs(mean_difference(models.predict(fitted, ds.X), ds.s)) <= 1e-8


def test_ipw_regression_zeroes_ipw(default_data):
    ds, _ = default_data
    fitted = models.fit(ds, "ipw")
    assert abs(ipw_estimate(ds.design() @ fitted.w, ds.s, fitted.scores_used.z)) <= 1e-8


def test_dr_classification_zeroes_dr(rng):
    ds = make_dataset(rng, N=300, d=4, d_e=2, task=Task.CLASSIFICATION)
    fitted = models.fit(ds, "dr")
    scores = models.decision_function(fitted, ds.X)
    assert abs(dr_estimate(scores, ds.s, fitted.scores_used.z, fitted.outcome_models)) <= 1e-6
    assert fitted.solution.converged


def test_unconstrained_matches_lstsq(default_data):
    ds, _ = default_data
    fitted = models.fit(ds, "unconstrained")
    w = np.linalg.lstsq(ds.design(), ds.y, rcond=None)[0]
    np.testing.assert_allclose(fitted.w, w, atol=1e-10)
    assert fitted.constraint is None and fitted.scores_used is None


def test_shared_scores_are_reused(default_data):
    ds, _ = default_data
    a = models.fit(ds, "ipw")
    b = models.fit(ds, "multi:3", scores=a.scores_used)
    assert b.scores_used is a.scores_used


def test_predict_zero_weights():
    sol = Solution(np.zeros(3), 0.0, 0.0, 0)
    X = np.ones((4, 2))
    reg = models.FittedModel(MethodSpec("single"), Task.REGRESSION, sol, True, 2)
    clf = models.FittedModel(MethodSpec("single"), Task.CLASSIFICATION, sol, True, 2)
    np.testing.assert_array_equal(models.predict(reg, X), 0.0)
    np.testing.assert_array_equal(models.predict(clf, X), 0.5)
    with pytest.raises(ValidationError):
        models.predict(reg, np.ones((4, 3)))


def test_probabilities_monotone_in_scores(rng):
    ds = make_dataset(rng, N=200, task=Task.CLASSIFICATION)
    fitted = models.fit(ds, "ipw")
    scores = models.decision_function(fitted, ds.X)
    probs = models.predict(fitted, ds.X)
    assert np.array_equal(np.argsort(scores, kind="stable"), np.argsort(probs, kind="stable"))


def test_degenerate_multi_md_zero_model():
    ds, _ = syn.generate(replace(syn.preset("degenerate"), intercept=False))
    fitted = models.fit(ds, "multi:7")
    assert fitted.constraint.P.shape == (7, 7)
    assert np.linalg.norm(ds.X @ fitted.w) <= 1e-8


def test_task_mismatch(default_data):
    ds, _ = default_data
    with pytest.raises(ConfigError):
        models.fit(ds, MethodSpec("single", task="classification"))


def test_constraint_value_and_json(default_data, tmp_path):
    ds, _ = default_data
    fitted = models.fit(ds, "multi:4")
    vals = models.constraint_value(fitted, ds)
    assert vals.shape == (4,) and np.max(np.abs(vals)) <= 1e-8
    doc = json.loads(models.to_json(fitted, tmp_path / "m.json"))
    assert doc["method"] == "multi:4"
    assert doc["constraint_kind"] == "multi_md"
    assert doc["intercept_flag"] is True
    assert len(doc["weights"]) == ds.d + 1
    assert doc["diagnostics"]["K"] == 4
    assert json.loads((tmp_path / "m.json").read_text()) == doc
