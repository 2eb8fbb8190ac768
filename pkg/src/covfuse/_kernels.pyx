# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops.  Every function here has a numpy twin in ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, log, exp, fabs
from libc.stdlib cimport malloc, free
from scipy.linalg.cython_lapack cimport dsyev

cnp.import_array()

cdef double DBL_EPS = 2.220446049250313e-16


cdef double _deflation_cut(const double* lam, const double* g, int n,
                           double alpha, double beta) noexcept nogil:
    """Components with ``|g_k|`` at or below the returned cut are treated as zero.

    Standard secular-equation deflation: a coupling ``beta |g_k| ||g||`` under
    ``8 eps`` times the matrix scale leaves ``e_k`` an eigenvector to working
    precision, and keeping it would put a spurious pole next to the root.
    """
    cdef int k
    cdef double g2 = 0.0, dmax = 0.0, scale
    for k in range(n):
        g2 += g[k] * g[k]
        if fabs(alpha * lam[k]) > dmax:
            dmax = fabs(alpha * lam[k])
    if g2 == 0.0:
        return 0.0
    scale = dmax if dmax > beta * g2 else beta * g2
    return 8.0 * DBL_EPS * scale / (beta * sqrt(g2))


cdef double _rank1_lmax(const double* lam, const double* g, int n,
                        double alpha, double beta) noexcept nogil:
    cdef int k, it
    cdef double dmax = alpha * lam[0]
    cdef double lo = -1e308, g2 = 0.0, s, f, fp, r, step, nxt, hi, psi
    cdef double cut = _deflation_cut(lam, g, n, alpha, beta)
    for k in range(n):
        if alpha * lam[k] > dmax:
            dmax = alpha * lam[k]
        if fabs(g[k]) > cut:
            g2 += g[k] * g[k]
            if alpha * lam[k] > lo:
                lo = alpha * lam[k]
    if beta * g2 == 0.0:
        return dmax
    hi = lo + beta * g2
    s = hi
    for it in range(200):
        # Newton on 1/psi(s) - 1, psi(s) = beta * sum g_k^2 / (s - D_k); nearly linear near a dominant pole
        psi = 0.0
        fp = 0.0
        for k in range(n):
            if fabs(g[k]) > cut:
                r = 1.0 / (s - alpha * lam[k])
                psi += beta * g[k] * g[k] * r
                fp += beta * g[k] * g[k] * r * r
        f = 1.0 / psi - 1.0
        fp = fp / (psi * psi)
        if f == 0.0:
            break
        if f > 0.0:
            hi = s
        else:
            lo = s
        nxt = s - f / fp
        if not (nxt > lo and nxt < hi):
            nxt = 0.5 * (lo + hi)
        step = fabs(nxt - s)
        s = nxt
        if step <= 4.0 * DBL_EPS * fabs(s) or hi - lo <= 4.0 * DBL_EPS * fabs(s):
            break
    return s if s > dmax else dmax


cdef double _inflation(const double* lam, const double* g, int n, double w,
                       double* dh) noexcept nogil:
    """h(w) = lambda_max(diag(lam)/w + g g^T/(1-w)) and its derivative, from the top eigenvector."""
    cdef int k, kmax = -1
    cdef double alpha = 1.0 / w, beta = 1.0 / (1.0 - w)
    cdef double s = _rank1_lmax(lam, g, n, alpha, beta)
    cdef double cut = _deflation_cut(lam, g, n, alpha, beta)
    cdef double nq = 0.0, ql = 0.0, qg = 0.0, q, gap = 1e308
    cdef int knear = -1
    for k in range(n):
        if fabs(g[k]) <= cut:
            if kmax < 0 or lam[k] > lam[kmax]:
                kmax = k
        elif s - alpha * lam[k] < gap:
            gap = s - alpha * lam[k]
            knear = k
    if kmax >= 0 and s - alpha * lam[kmax] <= 0.0:
        # top eigenvector is a deflated coordinate axis
        dh[0] = -lam[kmax] * alpha * alpha
        return s
    if gap <= 16.0 * DBL_EPS * fabs(s):
        # s is within roundoff of a pole: the eigenvector is that axis to working precision
        dh[0] = -lam[knear] * alpha * alpha + g[knear] * g[knear] * beta * beta
        return s
    for k in range(n):
        if fabs(g[k]) > cut:
            q = g[k] / (s - alpha * lam[k])
            nq += q * q
            ql += lam[k] * q * q
            qg += g[k] * q
    dh[0] = (-ql * alpha * alpha + qg * qg * beta * beta) / nq
    return s


cdef void _min_inflation(const double* lam, const double* g, int n, double eps,
                         double xtol, double* s_out, double* w_out) noexcept nogil:
    # h is convex in w but kinked where eigenvalue branches cross (typical at a GCU
    # optimum).  Iterate on the intersection of the bracket tangents: it converges
    # quickly at kinks and its value is a lower bound, which certifies the stop.
    cdef int k, it, slow = 0
    cdef double g2 = 0.0, dmax = lam[0]
    cdef double a, b, fa, fb, ha, hb, w, hw, dw, lb, best, wbest, width
    for k in range(n):
        g2 += g[k] * g[k]
        if lam[k] > dmax:
            dmax = lam[k]
    if g2 == 0.0:
        s_out[0] = dmax
        w_out[0] = 1.0
        return
    a = eps
    b = 1.0 - eps
    ha = _inflation(lam, g, n, a, &fa)
    if fa >= 0.0:
        s_out[0] = ha
        w_out[0] = a
        return
    hb = _inflation(lam, g, n, b, &fb)
    if fb <= 0.0:
        s_out[0] = hb
        w_out[0] = b
        return
    if ha <= hb:
        best = ha
        wbest = a
    else:
        best = hb
        wbest = b
    for it in range(200):
        w = (hb - ha + fa * a - fb * b) / (fa - fb)
        lb = ha + fa * (w - a)
        if best - lb <= 1e-15 * fabs(best) or b - a <= xtol:
            break
        if slow >= 2 or not (w > a and w < b):
            w = 0.5 * (a + b)
            slow = 0
        width = b - a
        hw = _inflation(lam, g, n, w, &dw)
        if hw < best:
            best = hw
            wbest = w
        if dw == 0.0:
            break
        if dw < 0.0:
            a = w
            fa = dw
            ha = hw
        else:
            b = w
            fb = dw
            hb = hw
        if b - a > 0.5 * width:
            slow += 1
        else:
            slow = 0
    s_out[0] = best
    w_out[0] = wbest


def rank1_lmax(double[::1] lam, double[::1] g, double alpha, double beta):
    """Largest eigenvalue of ``alpha * diag(lam) + beta * g g^T``."""
    return _rank1_lmax(&lam[0], &g[0], lam.shape[0], alpha, beta)


def min_inflation(double[::1] lam, double[::1] g, double eps=1e-8, double xtol=1e-12):
    """Minimize lambda_max(diag(lam)/w + g g^T/(1-w)) over w; returns ``(value, w)``."""
    cdef double s, w
    _min_inflation(&lam[0], &g[0], lam.shape[0], eps, xtol, &s, &w)
    return s, w


cdef int _shape_scales(const double* params, int n, int m, const double* means,
                       const double* covs, double eps, double xtol,
                       double* scales, double* omegas) noexcept nogil:
    """Per-constraint minimal scale for the unit-determinant shape encoded in ``params``."""
    cdef int i, j, k, r, info = 0, lwork = 8 * n + 8
    cdef int nn = n
    cdef char jobz = b'V'
    cdef char uplo = b'L'
    cdef double acc, lsum = 0.0
    cdef double* L = <double*> malloc(n * n * sizeof(double))
    cdef double* X = <double*> malloc(n * n * sizeof(double))
    cdef double* At = <double*> malloc(n * n * sizeof(double))
    cdef double* lam = <double*> malloc(n * sizeof(double))
    cdef double* d = <double*> malloc(n * sizeof(double))
    cdef double* g = <double*> malloc(n * sizeof(double))
    cdef double* work = <double*> malloc(lwork * sizeof(double))
    cdef const double* u = params
    cdef const double* A
    # L: unit-determinant lower-triangular factor
    for k in range(n * n):
        L[k] = 0.0
    for k in range(n - 1):
        L[k * n + k] = exp(params[n + k])
        lsum += params[n + k]
    L[(n - 1) * n + (n - 1)] = exp(-lsum)
    r = n + n - 1
    for i in range(1, n):
        for j in range(i):
            L[i * n + j] = params[r]
            r += 1
    for i in range(m):
        A = covs + i * n * n
        # X = L^-1 A (column by column forward substitution)
        for k in range(n):
            for r in range(n):
                acc = A[r * n + k]
                for j in range(r):
                    acc -= L[r * n + j] * X[j * n + k]
                X[r * n + k] = acc / L[r * n + r]
        # At = L^-1 X^T
        for k in range(n):
            for r in range(n):
                acc = X[k * n + r]
                for j in range(r):
                    acc -= L[r * n + j] * At[j * n + k]
                At[r * n + k] = acc / L[r * n + r]
        for r in range(n):
            for k in range(r):
                acc = 0.5 * (At[r * n + k] + At[k * n + r])
                At[r * n + k] = acc
                At[k * n + r] = acc
        # d = L^-1 (u - a_i)
        for r in range(n):
            acc = u[r] - means[i * n + r]
            for j in range(r):
                acc -= L[r * n + j] * d[j]
            d[r] = acc / L[r * n + r]
        dsyev(&jobz, &uplo, &nn, At, &nn, lam, work, &lwork, &info)
        if info != 0:
            break
        # columns of the (column-major) result are eigenvectors: row k of At here
        for k in range(n):
            acc = 0.0
            for r in range(n):
                acc += At[k * n + r] * d[r]
            g[k] = acc
        _min_inflation(lam, g, n, eps, xtol, &scales[i], &omegas[i])
    free(L)
    free(X)
    free(At)
    free(lam)
    free(d)
    free(g)
    free(work)
    return info


def shape_scales(double[::1] params, double[:, ::1] means, double[:, :, ::1] covs,
                 double eps=1e-8, double xtol=1e-12):
    """Minimal per-constraint scales ``s_i`` and witnessing weights for a (center, shape) point."""
    cdef int n = means.shape[1], m = means.shape[0], info
    scales = np.empty(m)
    omegas = np.empty(m)
    cdef double[::1] sv = scales
    cdef double[::1] ov = omegas
    info = _shape_scales(&params[0], n, m, &means[0, 0], &covs[0, 0, 0], eps, xtol, &sv[0], &ov[0])
    if info != 0:
        raise ArithmeticError("eigensolver failed")
    return scales, omegas


def gcu_objective(double[::1] params, double[:, ::1] means, double[:, :, ::1] covs,
                  double eps=1e-8, double xtol=1e-12):
    """``n * log(max_i s_i)``: log-determinant of the smallest feasible scaling of the shape."""
    cdef int n = means.shape[1], m = means.shape[0], i, info
    cdef double smax = 0.0
    cdef double* sc = <double*> malloc(m * sizeof(double))
    cdef double* om = <double*> malloc(m * sizeof(double))
    info = _shape_scales(&params[0], n, m, &means[0, 0], &covs[0, 0, 0], eps, xtol, sc, om)
    for i in range(m):
        if sc[i] > smax:
            smax = sc[i]
    free(sc)
    free(om)
    if info != 0 or not smax > 0.0:
        return float("inf")
    return n * log(smax)


def logdet_barrier(double[:, ::1] S, double[:, :, ::1] G):
    """Value, gradient and Hessian of ``-log det S(x)`` with ``dS/dx_j = G[j]``.

    Returns ``None`` when ``S`` is not positive definite.
    """
    cdef int p = S.shape[0], N = G.shape[0], i, j, k, a, b
    cdef double acc, val = 0.0
    L_arr = np.zeros((p, p))
    P_arr = np.empty((N, p, p))
    grad = np.empty(N)
    hess = np.empty((N, N))
    cdef double[:, ::1] L = L_arr
    cdef double[:, :, ::1] P = P_arr
    cdef double[::1] gv = grad
    cdef double[:, ::1] hv = hess
    for i in range(p):
        for j in range(i + 1):
            acc = S[i, j]
            for k in range(j):
                acc -= L[i, k] * L[j, k]
            if i == j:
                if not acc > 0.0:
                    return None
                L[i, i] = sqrt(acc)
                val -= 2.0 * log(L[i, i])
            else:
                L[i, j] = acc / L[j, j]
    for j in range(N):
        # P_j = S^-1 G_j via L y = G, L^T x = y, column by column
        for b in range(p):
            for a in range(p):
                acc = G[j, a, b]
                for k in range(a):
                    acc -= L[a, k] * P[j, k, b]
                P[j, a, b] = acc / L[a, a]
            for a in range(p - 1, -1, -1):
                acc = P[j, a, b]
                for k in range(a + 1, p):
                    acc -= L[k, a] * P[j, k, b]
                P[j, a, b] = acc / L[a, a]
        acc = 0.0
        for a in range(p):
            acc += P[j, a, a]
        gv[j] = -acc
    for j in range(N):
        for k in range(j + 1):
            acc = 0.0
            for a in range(p):
                for b in range(p):
                    acc += P[j, a, b] * P[k, b, a]
            hv[j, k] = acc
            hv[k, j] = acc
    return val, grad, hess
