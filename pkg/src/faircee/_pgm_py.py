"""Pure numpy projected-gradient loop; reference and fallback for _pgm_core."""
import numpy as np

LOGISTIC = 0
SQUARED = 1
_EPS = np.finfo(float).eps


def _loss_grad(X, y, w, loss_kind):
    m = X @ w
    if loss_kind == LOGISTIC:
        u = -y * m
        f = float(np.logaddexp(0.0, u).sum())
        g = -(X.T @ (y * np.exp(u - np.logaddexp(0.0, u))))
    else:
        r = m - y
        f = float(r @ r)
        g = 2.0 * (X.T @ r)
    return f, g


def _loss(X, y, w, loss_kind):
    m = X @ w
    if loss_kind == LOGISTIC:
        return float(np.logaddexp(0.0, -y * m).sum())
    r = m - y
    return float(r @ r)


def run_pgm(X, y, P, M, q, w0, eta0, beta, L, max_iter, grad_tol, loss_kind, record):
    X = np.ascontiguousarray(X, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    P = np.ascontiguousarray(P, dtype=float)
    M = np.ascontiguousarray(M, dtype=float)
    q = np.ascontiguousarray(q, dtype=float)
    floor = 1.0 / L
    has_c = P.shape[0] > 0

    w = np.array(w0, dtype=float)
    if has_c:
        w = w - M @ (P @ w - q)
    f, g = _loss_grad(X, y, w, loss_kind)
    trace = [f]
    iterates = [w.copy()] if record else None
    eta = float(eta0)
    converged = False
    t = 0
    while t < max_iter:
        while True:
            wt = w - eta * g
            if has_c:
                wt = wt - M @ (P @ wt - q)
            ft = _loss(X, y, wt, loss_kind)
            diff = wt - w
            model = f + float(g @ diff) + float(diff @ diff) / (2.0 * eta)
            if ft <= model + 8.0 * _EPS * abs(f) or eta <= floor:
                break
            eta = max(beta * eta, floor)
        if ft > f:
            # round-off stagnation: no representable descent left
            converged = True
            break
        t += 1
        step = float(np.max(np.abs(diff))) if diff.size else 0.0
        w = wt
        f, g = _loss_grad(X, y, w, loss_kind)
        trace.append(f)
        if record:
            iterates.append(w.copy())
        if step / eta <= grad_tol:
            converged = True
            break
    its = np.array(iterates) if record else None
    return w, np.array(trace), its, t, converged, eta
