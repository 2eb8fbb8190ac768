"""Pure-Python/numpy versions of the compiled kernels in ``_kernels.pyx``."""
import math

import numpy as np

EPS = np.finfo(float).eps


def _deflation_cut(lam, g, alpha, beta):
    g2 = float(g @ g)
    if g2 == 0.0:
        return 0.0
    scale = max(float(np.abs(alpha * lam).max()), beta * g2)
    return 8.0 * EPS * scale / (beta * math.sqrt(g2))


def rank1_lmax(lam, g, alpha, beta):
    lam = np.asarray(lam, dtype=float)
    g = np.asarray(g, dtype=float)
    D = alpha * lam
    dmax = float(D.max())
    nz = np.abs(g) > _deflation_cut(lam, g, alpha, beta)
    g2 = float(g[nz] @ g[nz])
    if beta * g2 == 0.0:
        return dmax
    Dn = D[nz]
    gn2 = beta * g[nz] ** 2
    lo = float(Dn.max())
    hi = lo + beta * g2
    s = hi
    for _ in range(200):
        with np.errstate(divide="ignore", invalid="ignore"):
            r = 1.0 / (s - Dn)
            psi = float(gn2 @ r)
            f = 1.0 / psi - 1.0
            fp = float(gn2 @ (r * r)) / (psi * psi)
        if f == 0.0:
            break
        if f > 0.0:
            hi = s
        else:
            lo = s
        with np.errstate(invalid="ignore"):
            nxt = s - f / fp
        if not lo < nxt < hi:
            nxt = 0.5 * (lo + hi)
        step = abs(nxt - s)
        s = nxt
        if step <= 4.0 * EPS * abs(s) or hi - lo <= 4.0 * EPS * abs(s):
            break
    return max(s, dmax)


def _inflation(lam, g, w):
    alpha, beta = 1.0 / w, 1.0 / (1.0 - w)
    s = rank1_lmax(lam, g, alpha, beta)
    live = np.abs(g) > _deflation_cut(lam, g, alpha, beta)
    dead = np.flatnonzero(~live)
    if dead.size:
        kmax = dead[int(np.argmax(lam[dead]))]
        if s - alpha * lam[kmax] <= 0.0:
            return s, -lam[kmax] * alpha * alpha
    nz = np.flatnonzero(live)
    gaps = s - alpha * lam[nz]
    if gaps.min() <= 16.0 * EPS * abs(s):
        k = nz[int(np.argmin(gaps))]
        return s, -lam[k] * alpha * alpha + g[k] * g[k] * beta * beta
    q = g[nz] / gaps
    nq = float(q @ q)
    ql = float(lam[nz] @ (q * q))
    qg = float(g[nz] @ q)
    return s, (-ql * alpha * alpha + qg * qg * beta * beta) / nq


def min_inflation(lam, g, eps=1e-8, xtol=1e-12):
    lam = np.asarray(lam, dtype=float)
    g = np.asarray(g, dtype=float)
    if float(g @ g) == 0.0:
        return float(lam.max()), 1.0
    a, b = eps, 1.0 - eps
    ha, fa = _inflation(lam, g, a)
    if fa >= 0.0:
        return ha, a
    hb, fb = _inflation(lam, g, b)
    if fb <= 0.0:
        return hb, b
    best = min((ha, a), (hb, b))
    slow = 0
    for _ in range(200):
        w = (hb - ha + fa * a - fb * b) / (fa - fb)
        lb = ha + fa * (w - a)
        if best[0] - lb <= 1e-15 * abs(best[0]) or b - a <= xtol:
            break
        if slow >= 2 or not a < w < b:
            w = 0.5 * (a + b)
            slow = 0
        width = b - a
        hw, dw = _inflation(lam, g, w)
        best = min(best, (hw, w))
        if dw == 0.0:
            break
        if dw < 0.0:
            a, fa, ha = w, dw, hw
        else:
            b, fb, hb = w, dw, hw
        slow = slow + 1 if b - a > 0.5 * width else 0
    return best


def shape_factor(params, n):
    """Unit-determinant lower-triangular factor encoded in ``params[n:]``."""
    L = np.zeros((n, n))
    logs = np.asarray(params[n:2 * n - 1], dtype=float)
    L[np.diag_indices(n)] = np.exp(np.append(logs, -logs.sum()))
    L[np.tril_indices(n, -1)] = params[2 * n - 1:]
    return L


def shape_scales(params, means, covs, eps=1e-8, xtol=1e-12):
    params = np.asarray(params, dtype=float)
    m, n = means.shape
    L = shape_factor(params, n)
    Linv = np.linalg.inv(L)
    u = params[:n]
    scales = np.empty(m)
    omegas = np.empty(m)
    for i in range(m):
        At = Linv @ covs[i] @ Linv.T
        lam, Q = np.linalg.eigh(0.5 * (At + At.T))
        g = Q.T @ (Linv @ (u - means[i]))
        scales[i], omegas[i] = min_inflation(lam, g, eps, xtol)
    return scales, omegas


def gcu_objective(params, means, covs, eps=1e-8, xtol=1e-12):
    scales, _ = shape_scales(params, means, covs, eps, xtol)
    smax = float(scales.max())
    if not smax > 0.0:
        return float("inf")
    return means.shape[1] * math.log(smax)


def logdet_barrier(S, G):
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        return None
    val = -2.0 * float(np.log(np.diag(L)).sum())
    P = np.linalg.solve(S, G)
    grad = -np.trace(P, axis1=1, axis2=2)
    hess = np.einsum("jab,kba->jk", P, P)
    return val, grad, 0.5 * (hess + hess.T)
