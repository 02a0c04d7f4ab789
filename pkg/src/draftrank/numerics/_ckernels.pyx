# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled twin of kernels_py. Same signatures, same semantics; the loops
are fused so intermediate arrays are never materialized."""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, expm1, log, sqrt

cnp.import_array()

LN_EPS = 1e-5
NORM_FLOOR = 1e-30


def elu_fwd(x):
    arr = np.ascontiguousarray(x, dtype=np.float64)
    out = np.empty_like(arr)
    cdef double[::1] xv = arr.ravel()
    cdef double[::1] yv = out.ravel()
    cdef Py_ssize_t i, n = xv.shape[0]
    for i in range(n):
        yv[i] = xv[i] if xv[i] >= 0.0 else expm1(xv[i])
    return out


def elu_bwd(x, dy):
    arr = np.ascontiguousarray(x, dtype=np.float64)
    g = np.ascontiguousarray(dy, dtype=np.float64)
    out = np.empty_like(arr)
    cdef double[::1] xv = arr.ravel()
    cdef double[::1] gv = g.ravel()
    cdef double[::1] yv = out.ravel()
    cdef Py_ssize_t i, n = xv.shape[0]
    for i in range(n):
        yv[i] = gv[i] if xv[i] >= 0.0 else gv[i] * exp(xv[i])
    return out


def layernorm_fwd(x, gain, bias, double eps=LN_EPS):
    cdef double[:, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[::1] gv = np.ascontiguousarray(gain, dtype=np.float64)
    cdef double[::1] bv = np.ascontiguousarray(bias, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], d = xv.shape[1], i, j
    out = np.empty((n, d), dtype=np.float64)
    cdef double[:, ::1] yv = out
    cdef double mu, var, rstd, xc
    for i in range(n):
        mu = 0.0
        for j in range(d):
            mu += xv[i, j]
        mu /= d
        var = 0.0
        for j in range(d):
            xc = xv[i, j] - mu
            var += xc * xc
        var /= d
        rstd = 1.0 / sqrt(var + eps)
        for j in range(d):
            yv[i, j] = (xv[i, j] - mu) * rstd * gv[j] + bv[j]
    return out


def layernorm_bwd(x, gain, bias, dy, double eps=LN_EPS):
    cdef double[:, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[::1] gv = np.ascontiguousarray(gain, dtype=np.float64)
    cdef double[:, ::1] dyv = np.ascontiguousarray(dy, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], d = xv.shape[1], i, j
    dx = np.empty((n, d), dtype=np.float64)
    dgain = np.zeros(d, dtype=np.float64)
    dbias = np.zeros(d, dtype=np.float64)
    cdef double[:, ::1] dxv = dx
    cdef double[::1] dgv = dgain
    cdef double[::1] dbv = dbias
    cdef double mu, var, rstd, xhat, dxhat, m1, m2
    for i in range(n):
        mu = 0.0
        for j in range(d):
            mu += xv[i, j]
        mu /= d
        var = 0.0
        for j in range(d):
            var += (xv[i, j] - mu) * (xv[i, j] - mu)
        var /= d
        rstd = 1.0 / sqrt(var + eps)
        m1 = 0.0
        m2 = 0.0
        for j in range(d):
            xhat = (xv[i, j] - mu) * rstd
            dxhat = dyv[i, j] * gv[j]
            m1 += dxhat
            m2 += dxhat * xhat
            dgv[j] += dyv[i, j] * xhat
            dbv[j] += dyv[i, j]
        m1 /= d
        m2 /= d
        for j in range(d):
            xhat = (xv[i, j] - mu) * rstd
            dxv[i, j] = rstd * (dyv[i, j] * gv[j] - m1 - xhat * m2)
    return dx, dgain, dbias


def l2norm_fwd(x):
    cdef double[:, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], d = xv.shape[1], i, j
    out = np.empty((n, d), dtype=np.float64)
    cdef double[:, ::1] yv = out
    cdef double s
    for i in range(n):
        s = 0.0
        for j in range(d):
            s += xv[i, j] * xv[i, j]
        s = sqrt(s)
        if s < NORM_FLOOR:
            s = NORM_FLOOR
        for j in range(d):
            yv[i, j] = xv[i, j] / s
    return out


def l2norm_bwd(x, dy):
    cdef double[:, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[:, ::1] dyv = np.ascontiguousarray(dy, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], d = xv.shape[1], i, j
    out = np.empty((n, d), dtype=np.float64)
    cdef double[:, ::1] dxv = out
    cdef double s, dot, yj
    for i in range(n):
        s = 0.0
        for j in range(d):
            s += xv[i, j] * xv[i, j]
        s = sqrt(s)
        if s < NORM_FLOOR:
            s = NORM_FLOOR
        dot = 0.0
        for j in range(d):
            dot += dyv[i, j] * (xv[i, j] / s)
        for j in range(d):
            yj = xv[i, j] / s
            dxv[i, j] = (dyv[i, j] - yj * dot) / s
    return out


def masked_mean_fwd(x, counts):
    cdef double[:, :, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef long long[::1] cv = np.ascontiguousarray(counts, dtype=np.int64)
    cdef Py_ssize_t b = xv.shape[0], e = xv.shape[2], i, j, k, c
    out = np.zeros((b, e), dtype=np.float64)
    cdef double[:, ::1] yv = out
    for i in range(b):
        c = cv[i]
        for k in range(c):
            for j in range(e):
                yv[i, j] += xv[i, k, j]
        for j in range(e):
            yv[i, j] /= c
    return out


def masked_mean_bwd(counts, rows, dy):
    cdef long long[::1] cv = np.ascontiguousarray(counts, dtype=np.int64)
    cdef double[:, ::1] dyv = np.ascontiguousarray(dy, dtype=np.float64)
    cdef Py_ssize_t b = dyv.shape[0], e = dyv.shape[1], r = rows, i, j, k, c
    out = np.zeros((b, r, e), dtype=np.float64)
    cdef double[:, :, ::1] dxv = out
    for i in range(b):
        c = cv[i]
        for k in range(c):
            for j in range(e):
                dxv[i, k, j] = dyv[i, j] / c
    return out


def segment_mean_fwd(x, counts):
    cdef double[:, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef long long[::1] cv = np.ascontiguousarray(counts, dtype=np.int64)
    cdef Py_ssize_t b = cv.shape[0], e = xv.shape[1], i, j, k, row = 0
    out = np.zeros((b, e), dtype=np.float64)
    cdef double[:, ::1] yv = out
    for i in range(b):
        for k in range(cv[i]):
            for j in range(e):
                yv[i, j] += xv[row, j]
            row += 1
        for j in range(e):
            yv[i, j] /= cv[i]
    return out


def segment_mean_bwd(counts, dy):
    cdef long long[::1] cv = np.ascontiguousarray(counts, dtype=np.int64)
    cdef double[:, ::1] dyv = np.ascontiguousarray(dy, dtype=np.float64)
    cdef Py_ssize_t b = cv.shape[0], e = dyv.shape[1], i, j, k, row = 0, total = 0
    for i in range(b):
        total += cv[i]
    out = np.empty((total, e), dtype=np.float64)
    cdef double[:, ::1] dxv = out
    for i in range(b):
        for k in range(cv[i]):
            for j in range(e):
                dxv[row, j] = dyv[i, j] / cv[i]
            row += 1
    return out


def masked_ce_fwd(sims, mask, double inv_tau):
    cdef double[:, ::1] sv = np.ascontiguousarray(sims, dtype=np.float64)
    cdef signed char[:, ::1] mv = np.ascontiguousarray(mask, dtype=np.int8)
    cdef Py_ssize_t n = sv.shape[0], m = sv.shape[1], i, j
    row_loss = np.empty(n, dtype=np.float64)
    probs = np.zeros((n, m), dtype=np.float64)
    cdef double[::1] lv = row_loss
    cdef double[:, ::1] pv = probs
    cdef double zmax, denom, z, pos_z
    cdef bint seen
    for i in range(n):
        zmax = 0.0
        seen = False
        for j in range(m):
            if mv[i, j] >= 0:
                z = sv[i, j] * inv_tau
                if not seen or z > zmax:
                    zmax = z
                    seen = True
        denom = 0.0
        pos_z = 0.0
        for j in range(m):
            if mv[i, j] >= 0:
                z = exp(sv[i, j] * inv_tau - zmax)
                pv[i, j] = z
                denom += z
                if mv[i, j] == 1:
                    pos_z = sv[i, j] * inv_tau
        for j in range(m):
            if mv[i, j] >= 0:
                pv[i, j] /= denom
        lv[i] = log(denom) + zmax - pos_z
    return row_loss, probs


def masked_ce_bwd(probs, mask, double inv_tau, drow):
    cdef double[:, ::1] pv = np.ascontiguousarray(probs, dtype=np.float64)
    cdef signed char[:, ::1] mv = np.ascontiguousarray(mask, dtype=np.int8)
    cdef double[::1] dv = np.ascontiguousarray(drow, dtype=np.float64)
    cdef Py_ssize_t n = pv.shape[0], m = pv.shape[1], i, j
    out = np.zeros((n, m), dtype=np.float64)
    cdef double[:, ::1] gv = out
    for i in range(n):
        for j in range(m):
            if mv[i, j] >= 0:
                gv[i, j] = (pv[i, j] - (1.0 if mv[i, j] == 1 else 0.0)) * inv_tau * dv[i]
    return out
