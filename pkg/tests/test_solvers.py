import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from faircee import (
    ConstraintSystem,
    PgmOptions,
    lipschitz_constant,
    md_constraint_vector,
    pgm_logistic,
    project_affine,
    projected_gradient,
    single_md_constraint,
    solve_constrained_least_squares,
)
from faircee import _kernels, _pgm_py
from faircee.errors import ConfigError, ValidationError
from faircee.estimators import ConstraintKind

from .conftest import random_binary

BACKENDS = ["python"] + (["cython"] if _kernels.BACKEND == "cython" else [])


@pytest.fixture(params=BACKENDS)
def backend(request, monkeypatch):
    if request.param == "python":
        monkeypatch.setattr(_kernels, "run_pgm", _pgm_py.run_pgm)
    return request.param


def row(P, q=0.0):
    return ConstraintSystem(np.atleast_2d(P), [q], ConstraintKind.IPW)


def logistic_loss(X, y01, w):
    return float(np.logaddexp(0.0, -(2 * y01 - 1) * (X @ w)).sum())


@pytest.mark.parametrize(
    "X, expected", [([[1.0, 0.0], [0.0, 2.0]], 5.0), (np.zeros((3, 2)), 0.0), (np.eye(4), 4.0)]
)
def test_lipschitz_constant(X, expected):
    assert lipschitz_constant(X) == expected


def test_projection_examples(rng):
    C = row([1.0, -1.0])
    np.testing.assert_allclose(project_affine([2.0, 0.0], C), [1.0, 1.0], atol=1e-15)
    w = np.array([3.0, 3.0])
    np.testing.assert_allclose(project_affine(w, C), w, atol=1e-14)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**31 - 1))
def test_projection_idempotent_and_feasible(m, seed):
    rng = np.random.default_rng(seed)
    d = m + int(rng.integers(0, 4))
    C = ConstraintSystem(rng.standard_normal((m, d)), rng.standard_normal(m), ConstraintKind.MULTI_MD)
    w = 10 * rng.standard_normal(d)
    p = project_affine(w, C)
    tol = 1e-13 * np.linalg.cond(C.P) ** 2 * (1 + np.abs(w).max())
    assert np.max(np.abs(C.P @ p - C.q)) <= tol
    np.testing.assert_allclose(project_affine(p, C), p, atol=tol)
    # the correction is orthogonal to the feasible directions
    null = np.linalg.svd(C.P)[2][m:]
    assert np.max(np.abs(null @ (w - p)), initial=0.0) <= tol


def test_kkt_hand_example():
    s = np.array([1.0, 0.0])
    X = np.eye(2)
    sol = solve_constrained_least_squares(X, np.array([1.0, -1.0]), single_md_constraint(X, s))
    np.testing.assert_allclose(sol.w, [0.0, 0.0], atol=1e-14)
    assert sol.objective == pytest.approx(2.0)
    assert sol.constraint_residual <= 1e-14


def test_inactive_constraint_returns_ols(rng):
    X = rng.standard_normal((30, 4))
    y = rng.standard_normal(30)
    w_ols = np.linalg.lstsq(X, y, rcond=None)[0]
    P = rng.standard_normal(4)
    sol = solve_constrained_least_squares(X, y, row(P, P @ w_ols))
    np.testing.assert_allclose(sol.w, w_ols, atol=1e-10)
    assert sol.constraint_residual <= 1e-10


@settings(max_examples=60, deadline=None)
@given(st.integers(3, 12), st.integers(0, 2**31 - 1))
def test_single_md_loss_closed_form_square(N, seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((N, N)) + 3 * np.eye(N)
    s = random_binary(rng, N)
    y = rng.standard_normal(N)
    d = md_constraint_vector(s)
    sol = solve_constrained_least_squares(X, y, single_md_constraint(X, s))
    assert sol.objective == pytest.approx((d @ y) ** 2 / (d @ d), rel=1e-8, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_generalized_loss_identity(seed):
    # loss = ||y_perp||^2 + (c . y_ols)^2 / ||c_par||^2 with y_ols the OLS fit
    rng = np.random.default_rng(seed)
    N = int(rng.integers(8, 60))
    d = int(rng.integers(2, 6))
    X = rng.standard_normal((N, d))
    y = rng.standard_normal(N)
    c = rng.standard_normal(N)
    Q = np.linalg.qr(X)[0]
    y_ols = Q @ (Q.T @ y)
    c_par = Q @ (Q.T @ c)
    expected = np.sum((y - y_ols) ** 2) + (c @ y_ols) ** 2 / (c_par @ c_par)
    sol = solve_constrained_least_squares(X, y, row(c @ X))
    assert sol.objective == pytest.approx(expected, rel=1e-8)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_kkt_stationarity(seed):
    rng = np.random.default_rng(seed)
    N, d, m = 40, 6, int(rng.integers(1, 4))
    X = rng.standard_normal((N, d))
    y = rng.standard_normal(N)
    C = ConstraintSystem(rng.standard_normal((m, d)), rng.standard_normal(m), ConstraintKind.MULTI_MD)
    sol = solve_constrained_least_squares(X, y, C)
    grad = 2 * X.T @ (X @ sol.w - y) + C.P.T @ sol.multipliers
    assert np.max(np.abs(grad)) <= 1e-6 * (1 + np.max(np.abs(2 * X.T @ y)))
    assert sol.constraint_residual <= 1e-8
    assert not sol.ridge_used


def test_kkt_ridge_fallback(rng):
    x = rng.standard_normal(10)
    X = np.c_[x, x, rng.standard_normal(10)]  # rank 2, constraint does not pin the duplicate
    y = rng.standard_normal(10)
    sol = solve_constrained_least_squares(X, y, row([0.0, 0.0, 1.0], 0.5))
    assert sol.ridge_used
    assert np.all(np.isfinite(sol.w))
    assert sol.constraint_residual <= 1e-8


def test_pgm_options_validated():
    with pytest.raises(ConfigError):
        PgmOptions(beta=1.0)
    with pytest.raises(ConfigError):
        PgmOptions(eta0=0.0)


def classification_instance(rng, N=200, d=5):
    X = np.c_[rng.standard_normal((N, d - 1)), np.ones(N)]
    y = (X @ rng.standard_normal(d) + rng.standard_normal(N) > 0).astype(float)
    return X, y


def test_pgm_feasible_descending_iterates(rng, backend):
    X, y = classification_instance(rng)
    C = row(rng.standard_normal(5), 0.3)
    sol = pgm_logistic(X, y, C, PgmOptions(max_iter=500, grad_tol=0.0), record_iterates=True)
    assert len(sol.iterates) == sol.iterations + 1 == len(sol.loss_trace)
    resid = np.abs(sol.iterates @ C.P[0] - C.q[0])
    assert resid.max() <= 1e-10
    assert np.all(np.diff(sol.loss_trace) <= 1e-12)
    assert sol.final_eta >= 1.0 / lipschitz_constant(X)
    np.testing.assert_allclose(sol.loss_trace, [logistic_loss(X, y, w) for w in sol.iterates], rtol=1e-12)


def test_pgm_matches_grid_search_on_line(backend):
    rng = np.random.default_rng(7)
    X = rng.standard_normal((8, 2))
    y = np.array([1, 0, 1, 1, 0, 0, 1, 0], dtype=float)
    P = np.array([1.0, 2.0])
    C = row(P, 0.5)
    sol = pgm_logistic(X, y, C)
    assert sol.converged
    base = P * 0.5 / (P @ P)
    direction = np.array([-P[1], P[0]]) / np.linalg.norm(P)
    ts = np.arange(-20.0, 20.0, 1e-4)
    W = base + ts[:, None] * direction
    grid = np.logaddexp(0.0, -(2 * y - 1) * (W @ X.T)).sum(axis=1)
    assert sol.objective == pytest.approx(grid.min(), abs=1e-3)
    assert sol.objective <= grid.min() + 1e-9


def test_squared_mode_matches_kkt(rng, backend):
    X = rng.standard_normal((50, 5))
    y = rng.standard_normal(50)
    C = ConstraintSystem(rng.standard_normal((2, 5)), rng.standard_normal(2), ConstraintKind.MULTI_MD)
    exact = solve_constrained_least_squares(X, y, C)
    it = projected_gradient(X, y, C, PgmOptions(grad_tol=1e-12, max_iter=20000), loss="squared")
    assert np.max(np.abs(it.w - exact.w)) <= 1e-6


def test_unconstrained_pgm(rng, backend):
    X, y = classification_instance(rng, N=100)
    sol = pgm_logistic(X, y, None, PgmOptions(grad_tol=1e-10))
    assert sol.converged
    grad = -X.T @ ((2 * y - 1) / (1 + np.exp((2 * y - 1) * (X @ sol.w))))
    assert np.max(np.abs(grad)) <= 1e-6


def test_pgm_label_and_loss_validation(rng):
    X = rng.standard_normal((4, 2))
    with pytest.raises(ValidationError):
        pgm_logistic(X, np.array([0, 1, 2, 1.0]))
    with pytest.raises(ConfigError):
        projected_gradient(X, np.zeros(4), loss="hinge")


@pytest.mark.skipif("cython" not in BACKENDS, reason="compiled kernel not built")
def test_backends_agree(rng):
    from faircee import _pgm_core

    X, y = classification_instance(rng)
    t = 2 * y - 1
    C = row(rng.standard_normal(5), -0.2)
    args = (X, t, C.P, C.projector, C.q, np.zeros(5), 1.0, 0.5, lipschitz_constant(X), 300, 0.0,
            _kernels.LOGISTIC, True)
    a, b = _pgm_py.run_pgm(*args), _pgm_core.run_pgm(*args)
    # summation order differs, so each may stall at a slightly different flat point
    np.testing.assert_allclose(a[0], b[0], rtol=1e-6, atol=1e-9)
    assert a[1][-1] == pytest.approx(b[1][-1], rel=1e-12)
    n = min(len(a[1]), len(b[1]))
    np.testing.assert_allclose(a[1][:n], b[1][:n], rtol=1e-12)
    np.testing.assert_allclose(a[2][:n], b[2][:n], rtol=1e-8, atol=1e-10)
