"""Compiled inner loops for the fixed-point solvers.

All kernels treat a residual of exactly zero as carrying no sign and no
inverse radius, so ties with a data point never divide by zero. The
second-moment equation of the joint fit averages over nonzero residuals only.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def hr_joint(x, theta0, d20, tol, max_iter):
    """Joint location / diagonal-scatter fixed point on the rows of ``x``.

    Returns ``(theta, d2, iterations, residual_sign, residual_diag, converged)``
    where the residuals are evaluated at the returned pair.
    """
    m, p = x.shape
    theta = theta0.copy()
    d2 = d20.copy()
    sd = np.empty(p)
    su = np.empty(p)
    su2 = np.empty(p)
    e = np.empty(p)
    it = 0
    while True:
        for j in range(p):
            sd[j] = np.sqrt(d2[j])
            su[j] = 0.0
            su2[j] = 0.0
        inv_r = 0.0
        nz = 0
        for i in range(m):
            r2 = 0.0
            for j in range(p):
                e[j] = (x[i, j] - theta[j]) / sd[j]
                r2 += e[j] * e[j]
            if r2 > 0.0:
                nz += 1
                r = np.sqrt(r2)
                inv_r += 1.0 / r
                for j in range(p):
                    u = e[j] / r
                    su[j] += u
                    su2[j] += u * u
        res_sign = 0.0
        res_diag = 0.0
        for j in range(p):
            a = abs(su[j]) / m
            if a > res_sign:
                res_sign = a
            b = abs(p * su2[j] / max(nz, 1) - 1.0)
            if b > res_diag:
                res_diag = b
        if res_sign <= tol and res_diag <= tol:
            return theta, d2, it, res_sign, res_diag, True
        if it >= max_iter or inv_r == 0.0:
            return theta, d2, it, res_sign, res_diag, False
        new_d2 = np.empty(p)
        ok = True
        for j in range(p):
            new_d2[j] = p * d2[j] * su2[j] / nz
            if not (new_d2[j] > 0.0 and np.isfinite(new_d2[j])):
                ok = False
        if not ok:
            return theta, d2, it, res_sign, res_diag, False
        for j in range(p):
            theta[j] += sd[j] * su[j] / inv_r
            d2[j] = new_d2[j]
        it += 1


@njit(cache=True)
def median_fit(z, lo, hi, theta, tol, max_iter, su, e):
    """Spatial median of rows ``lo:hi`` of already standardized data.

    Updates ``theta`` in place (it is the warm start on entry) and returns
    ``(iterations, converged, residual_sign)``. ``su`` and ``e`` are scratch
    buffers of length ``p``.
    """
    p = z.shape[1]
    m = hi - lo
    it = 0
    while True:
        for j in range(p):
            su[j] = 0.0
        inv_r = 0.0
        for i in range(lo, hi):
            r2 = 0.0
            for j in range(p):
                e[j] = z[i, j] - theta[j]
                r2 += e[j] * e[j]
            if r2 > 0.0:
                r = np.sqrt(r2)
                inv_r += 1.0 / r
                for j in range(p):
                    su[j] += e[j] / r
        res = 0.0
        for j in range(p):
            a = abs(su[j]) / m
            if a > res:
                res = a
        if res <= tol:
            return it, True, res
        if it >= max_iter or inv_r == 0.0:
            return it, False, res
        for j in range(p):
            theta[j] += su[j] / inv_r
        it += 1


@njit(cache=True)
def median_sweeps(z, k_min, k_max, tol, max_iter):
    """Prefix medians of ``z[:k]`` and suffix medians of ``z[k:]`` for every k.

    Each chain starts from the sample mean of its shortest segment and
    warm-starts every later fit from the previous solution.
    Returns ``(prefix, suffix, iterations, converged)`` with one row per k.
    """
    n, p = z.shape
    K = k_max - k_min + 1
    prefix = np.empty((K, p))
    suffix = np.empty((K, p))
    iters = np.zeros(K, dtype=np.int64)
    conv = np.ones(K, dtype=np.bool_)
    su = np.empty(p)
    e = np.empty(p)

    theta = np.zeros(p)
    for i in range(k_min):
        for j in range(p):
            theta[j] += z[i, j]
    for j in range(p):
        theta[j] /= k_min
    for idx in range(K):
        k = k_min + idx
        it, ok, _ = median_fit(z, 0, k, theta, tol, max_iter, su, e)
        iters[idx] += it
        conv[idx] = conv[idx] and ok
        for j in range(p):
            prefix[idx, j] = theta[j]

    theta = np.zeros(p)
    for i in range(k_max, n):
        for j in range(p):
            theta[j] += z[i, j]
    for j in range(p):
        theta[j] /= n - k_max
    for idx in range(K - 1, -1, -1):
        k = k_min + idx
        it, ok, _ = median_fit(z, k, n, theta, tol, max_iter, su, e)
        iters[idx] += it
        conv[idx] = conv[idx] and ok
        for j in range(p):
            suffix[idx, j] = theta[j]
    return prefix, suffix, iters, conv
