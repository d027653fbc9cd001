# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled projected-gradient loop; same contract as ``_pgm_py.run_pgm``.

Matrix-vector products go through BLAS dgemv. The margins ``X w`` of the
accepted trial point are kept, so each iteration costs one product for the
trial loss and one for the gradient.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log1p, fabs
from scipy.linalg.cython_blas cimport dgemv

cnp.import_array()

cdef double _EPS = 2.220446049250313e-16


cdef inline double softplus(double u) noexcept nogil:
    if u > 0:
        return u + log1p(exp(-u))
    return log1p(exp(u))


cdef inline double sigm(double u) noexcept nogil:
    cdef double e
    if u >= 0:
        return 1.0 / (1.0 + exp(-u))
    e = exp(u)
    return e / (1.0 + e)


cdef void margins(const double[:, ::1] X, const double[::1] w, double[::1] out) noexcept nogil:
    # row-major X (N x d) is column-major X^T (d x N), so X w is a transposed product
    cdef int d = <int>X.shape[1], N = <int>X.shape[0], one = 1
    cdef double alpha = 1.0, zero = 0.0
    cdef char tr = b'T'
    dgemv(&tr, &d, &N, &alpha, <double*>&X[0, 0], &d, <double*>&w[0], &one, &zero, &out[0], &one)


cdef double loss_at(const double[::1] m, const double[::1] y, int loss_kind) noexcept nogil:
    cdef Py_ssize_t i
    cdef double f = 0.0, r
    for i in range(m.shape[0]):
        if loss_kind == 0:
            f += softplus(-y[i] * m[i])
        else:
            r = m[i] - y[i]
            f += r * r
    return f


cdef void grad_at(const double[:, ::1] X, const double[::1] y, const double[::1] m,
                  double[::1] c, double[::1] g, int loss_kind) noexcept nogil:
    cdef int d = <int>X.shape[1], N = <int>X.shape[0], one = 1
    cdef double alpha = 1.0, zero = 0.0
    cdef char nt = b'N'
    cdef Py_ssize_t i
    for i in range(N):
        if loss_kind == 0:
            c[i] = -y[i] * sigm(-y[i] * m[i])
        else:
            c[i] = 2.0 * (m[i] - y[i])
    dgemv(&nt, &d, &N, &alpha, <double*>&X[0, 0], &d, &c[0], &one, &zero, &g[0], &one)


cdef void project(double[::1] v, const double[:, ::1] P, const double[:, ::1] M,
                  const double[::1] q, double[::1] r) noexcept nogil:
    cdef Py_ssize_t m = P.shape[0], d = P.shape[1], k, j
    for k in range(m):
        r[k] = -q[k]
        for j in range(d):
            r[k] += P[k, j] * v[j]
    for j in range(d):
        for k in range(m):
            v[j] -= M[j, k] * r[k]


def run_pgm(X, y, P, M, q, w0, double eta0, double beta, double L, Py_ssize_t max_iter,
            double grad_tol, int loss_kind, bint record):
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef const double[:, ::1] Pv = np.ascontiguousarray(np.atleast_2d(P), dtype=np.float64)
    cdef const double[:, ::1] Mv = np.ascontiguousarray(np.atleast_2d(M), dtype=np.float64)
    cdef const double[::1] qv = np.ascontiguousarray(q, dtype=np.float64)
    cdef Py_ssize_t N = Xv.shape[0], d = Xv.shape[1], m = Pv.shape[0], j, t = 0
    cdef bint has_c = m > 0 and q.shape[0] > 0
    cdef double floor = 1.0 / L, eta = eta0, f, ft, gd, dd, model, step, diff
    cdef bint converged = False

    w_arr = np.array(w0, dtype=np.float64)
    cdef double[::1] w = w_arr
    cdef double[::1] wt = np.empty(d)
    cdef double[::1] g = np.empty(d)
    cdef double[::1] mw = np.empty(N)
    cdef double[::1] mt = np.empty(N)
    cdef double[::1] c = np.empty(N)
    cdef double[::1] r = np.empty(max(m, 1))
    trace = np.empty(max_iter + 1)
    cdef double[::1] tr = trace
    iterates = np.empty((max_iter + 1, d)) if record else None
    cdef double[:, ::1] itv
    if record:
        itv = iterates
    if N == 0 or d == 0:
        raise ValueError("empty design matrix")

    with nogil:
        if has_c:
            project(w, Pv, Mv, qv, r)
        margins(Xv, w, mw)
        f = loss_at(mw, yv, loss_kind)
        grad_at(Xv, yv, mw, c, g, loss_kind)
        tr[0] = f
        if record:
            for j in range(d):
                itv[0, j] = w[j]
        while t < max_iter:
            while True:
                for j in range(d):
                    wt[j] = w[j] - eta * g[j]
                if has_c:
                    project(wt, Pv, Mv, qv, r)
                margins(Xv, wt, mt)
                ft = loss_at(mt, yv, loss_kind)
                gd = 0.0
                dd = 0.0
                for j in range(d):
                    diff = wt[j] - w[j]
                    gd += g[j] * diff
                    dd += diff * diff
                model = f + gd + dd / (2.0 * eta)
                if ft <= model + 8.0 * _EPS * fabs(f) or eta <= floor:
                    break
                eta = beta * eta
                if eta < floor:
                    eta = floor
            if ft > f:
                # round-off stagnation: no representable descent left
                converged = True
                break
            t += 1
            step = 0.0
            for j in range(d):
                diff = fabs(wt[j] - w[j])
                if diff > step:
                    step = diff
                w[j] = wt[j]
            mw, mt = mt, mw
            f = ft
            grad_at(Xv, yv, mw, c, g, loss_kind)
            tr[t] = f
            if record:
                for j in range(d):
                    itv[t, j] = w[j]
            if step / eta <= grad_tol:
                converged = True
                break

    its = iterates[: t + 1].copy() if record else None
    return w_arr, trace[: t + 1].copy(), its, t, converged, eta
