import sys

import numpy as np
import pytest

from faircee import Dataset, Task


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_binary(rng, N):
    """Binary vector of length N with both values present."""
    while True:
        s = rng.integers(0, 2, N).astype(float)
        if 0 < s.sum() < N:
            return s


def make_dataset(rng, N=60, d=4, d_e=2, task=Task.REGRESSION, intercept=True):
    s = random_binary(rng, N)
    X = rng.standard_normal((N, d)) + s[:, None]
    if task is Task.REGRESSION:
        y = X @ rng.standard_normal(d) + s + rng.standard_normal(N)
    else:
        y = (X @ rng.standard_normal(d) + rng.standard_normal(N) > 0).astype(float)
    return Dataset(X=X, s=s, y=y, explanatory_idx=tuple(range(d_e)), task=task, intercept=intercept)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("tests.test_acceptance")
    if mod and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
