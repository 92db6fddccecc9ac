# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled batch kernels for the hot inner loops.

Same contracts as ``specflow_lab._kernels_py``; double precision throughout.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, fabs, floor, sin

cnp.import_array()

cdef double TWO_PI = 6.283185307179586476925286766559


cdef inline double _frac(double t) nogil:
    t = t - floor(t)
    if t >= 1.0:
        t -= 1.0
    return t


cdef inline double _roof_eval(double x, double y,
                              double c0,
                              double[::1] d1, double[::1] delta1,
                              double[::1] d2, double[::1] delta2,
                              double[:, ::1] trig,
                              double gamma, double alpha, double beta) nogil:
    cdef double v = c0
    cdef double t, ph
    cdef Py_ssize_t j
    for j in range(d1.shape[0]):
        t = x - delta1[j]
        if t < 0.0:
            t += 1.0
        v += d1[j] * t
    for j in range(d2.shape[0]):
        t = y - delta2[j]
        if t < 0.0:
            t += 1.0
        v += d2[j] * t
    for j in range(trig.shape[0]):
        ph = TWO_PI * (trig[j, 0] * x + trig[j, 1] * y)
        v += trig[j, 2] * cos(ph) + trig[j, 3] * sin(ph)
    if gamma != 0.0:
        v += gamma * (alpha * y - (x + alpha) * floor(y + beta))
    return v


def birkhoff_batch(xs, ys, long long m, double alpha, double beta,
                   double c0, d1, delta1, d2, delta2, trig, double gamma):
    xs_a = np.mod(np.asarray(xs, dtype=np.float64), 1.0).ravel()
    ys_a = np.mod(np.asarray(ys, dtype=np.float64), 1.0).ravel()
    cdef double[::1] xv = np.ascontiguousarray(xs_a)
    cdef double[::1] yv = np.ascontiguousarray(ys_a)
    cdef double[::1] D1 = np.ascontiguousarray(d1, dtype=np.float64)
    cdef double[::1] E1 = np.ascontiguousarray(delta1, dtype=np.float64)
    cdef double[::1] D2 = np.ascontiguousarray(d2, dtype=np.float64)
    cdef double[::1] E2 = np.ascontiguousarray(delta2, dtype=np.float64)
    cdef double[:, ::1] TR = np.ascontiguousarray(trig, dtype=np.float64).reshape(-1, 4)
    out = np.zeros(xv.shape[0], dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    cdef long long k
    cdef double px, py, acc, comp, val, tmp
    with nogil:
        for i in range(xv.shape[0]):
            px = xv[i]
            py = yv[i]
            acc = 0.0
            comp = 0.0
            for k in range(m):
                val = _roof_eval(px, py, c0, D1, E1, D2, E2, TR, gamma, alpha, beta) - comp
                tmp = acc + val
                comp = (tmp - acc) - val
                acc = tmp
                px += alpha
                if px >= 1.0:
                    px -= 1.0
                py += beta
                if py >= 1.0:
                    py -= 1.0
            ov[i] = acc
    return out


def flow_batch(xs, ys, ss, double t, double alpha, double beta,
               double c0, d1, delta1, d2, delta2, trig, double gamma):
    xs_a = np.mod(np.asarray(xs, dtype=np.float64), 1.0).ravel()
    ys_a = np.mod(np.asarray(ys, dtype=np.float64), 1.0).ravel()
    ss_a = np.asarray(ss, dtype=np.float64).ravel()
    cdef double[::1] xv = np.ascontiguousarray(xs_a).copy()
    cdef double[::1] yv = np.ascontiguousarray(ys_a).copy()
    cdef double[::1] sv = np.ascontiguousarray(ss_a)
    cdef double[::1] D1 = np.ascontiguousarray(d1, dtype=np.float64)
    cdef double[::1] E1 = np.ascontiguousarray(delta1, dtype=np.float64)
    cdef double[::1] D2 = np.ascontiguousarray(d2, dtype=np.float64)
    cdef double[::1] E2 = np.ascontiguousarray(delta2, dtype=np.float64)
    cdef double[:, ::1] TR = np.ascontiguousarray(trig, dtype=np.float64).reshape(-1, 4)
    cdef Py_ssize_t npts = xv.shape[0]
    x2 = np.empty(npts, dtype=np.float64)
    y2 = np.empty(npts, dtype=np.float64)
    s2 = np.empty(npts, dtype=np.float64)
    nn = np.empty(npts, dtype=np.int64)
    cdef double[::1] x2v = x2
    cdef double[::1] y2v = y2
    cdef double[::1] s2v = s2
    cdef long long[::1] nv = nn
    cdef Py_ssize_t i
    cdef double px, py, tot, fn, fv
    cdef long long n
    with nogil:
        for i in range(npts):
            px = xv[i]
            py = yv[i]
            tot = sv[i] + t
            fn = 0.0
            n = 0
            while True:
                fv = _roof_eval(px, py, c0, D1, E1, D2, E2, TR, gamma, alpha, beta)
                if fn + fv <= tot:
                    fn += fv
                    n += 1
                    px += alpha
                    if px >= 1.0:
                        px -= 1.0
                    py += beta
                    if py >= 1.0:
                        py -= 1.0
                else:
                    break
            while fn > tot:
                px -= alpha
                if px < 0.0:
                    px += 1.0
                py -= beta
                if py < 0.0:
                    py += 1.0
                fn -= _roof_eval(px, py, c0, D1, E1, D2, E2, TR, gamma, alpha, beta)
                n -= 1
            x2v[i] = px
            y2v[i] = py
            s2v[i] = tot - fn
            nv[i] = n
    return x2, y2, s2, nn


def crossing_scan(double x0, double alpha, double lo, double hi,
                  long long n_max, double slack):
    hits = []
    flags = []
    cdef long long n
    cdef double pos
    for n in range(n_max):
        pos = _frac(x0 + n * alpha)
        if lo <= pos < hi:
            hits.append(n)
        if fabs(pos - lo) <= slack or fabs(pos - hi) <= slack:
            flags.append(n)
    return np.asarray(hits, dtype=np.int64), np.asarray(flags, dtype=np.int64)


def diff_series(double x, double y, double dx, double dy, long long n_max,
                double alpha, double beta,
                double c0, d1, delta1, d2, delta2, trig, double gamma):
    cdef double[::1] D1 = np.ascontiguousarray(d1, dtype=np.float64)
    cdef double[::1] E1 = np.ascontiguousarray(delta1, dtype=np.float64)
    cdef double[::1] D2 = np.ascontiguousarray(d2, dtype=np.float64)
    cdef double[::1] E2 = np.ascontiguousarray(delta2, dtype=np.float64)
    cdef double[:, ::1] TR = np.ascontiguousarray(trig, dtype=np.float64).reshape(-1, 4)
    out = np.empty(n_max + 1, dtype=np.float64)
    cdef double[::1] ov = out
    cdef double acc = 0.0, comp = 0.0, val, tmp
    cdef double ax, ay, bx, by
    cdef long long k
    ov[0] = 0.0
    with nogil:
        for k in range(n_max):
            ax = _frac(x + k * alpha)
            ay = _frac(y + k * beta)
            bx = _frac(x + dx + k * alpha)
            by = _frac(y + dy + k * beta)
            val = (_roof_eval(bx, by, c0, D1, E1, D2, E2, TR, gamma, alpha, beta)
                   - _roof_eval(ax, ay, c0, D1, E1, D2, E2, TR, gamma, alpha, beta)) - comp
            tmp = acc + val
            comp = (tmp - acc) - val
            acc = tmp
            ov[k + 1] = acc
    return out
