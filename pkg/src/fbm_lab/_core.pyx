# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the hot kernels in ``_fallback``.

Signatures and results match the numpy implementations; only the loop
structure differs.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport pow, sin

cnp.import_array()

NAME = "cython"


cdef inline double _inner(double h, double x, double xc, const double[::1] coef,
                          double upper, double z0, const double[::1] cheb) noexcept nogil:
    cdef Py_ssize_t m
    cdef double acc = 0.0, t, b1 = 0.0, b2 = 0.0, tmp
    if x <= z0:
        for m in range(coef.shape[0] - 1, -1, -1):
            acc = acc * x + coef[m]
        return upper - pow(x, 1.0 - 2.0 * h) * acc
    # Clenshaw for the Chebyshev series on [z0, 1]
    t = (2.0 * x - 1.0 - z0) / (1.0 - z0)
    for m in range(cheb.shape[0] - 1, 0, -1):
        tmp = 2.0 * t * b1 - b2 + cheb[m]
        b2 = b1
        b1 = tmp
    return pow(xc, h + 0.5) * (t * b1 - b2 + cheb[0])


cdef inline double _unit(double h, double c, double x, double xc, const double[::1] coef,
                         double upper, double z0, const double[::1] cheb) noexcept nogil:
    cdef double beta = h - 0.5
    cdef double xm
    if beta == 0.0:
        return c
    xm = pow(x, -beta)
    return c * (xm * pow(xc, beta) - beta * _inner(h, x, xc, coef, upper, z0, cheb) / xm)


def inner_integral(double h, x, xc, coef, double upper, double z0, cheb):
    xb, cb = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(xc, dtype=float))
    shape = xb.shape
    cdef const double[::1] xv = np.ascontiguousarray(xb).ravel()
    cdef const double[::1] cv = np.ascontiguousarray(cb).ravel()
    cdef const double[::1] co = np.ascontiguousarray(coef, dtype=float)
    cdef const double[::1] ch = np.ascontiguousarray(cheb, dtype=float)
    out = np.empty(xv.shape[0])
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(xv.shape[0]):
            ov[i] = _inner(h, xv[i], cv[i], co, upper, z0, ch)
    return out.reshape(shape)


def unit_kernel(double h, double c, x, xc, coef, double upper, double z0, cheb):
    xb, cb = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(xc, dtype=float))
    shape = xb.shape
    cdef const double[::1] xv = np.ascontiguousarray(xb).ravel()
    cdef const double[::1] cv = np.ascontiguousarray(cb).ravel()
    cdef const double[::1] co = np.ascontiguousarray(coef, dtype=float)
    cdef const double[::1] ch = np.ascontiguousarray(cheb, dtype=float)
    out = np.empty(xv.shape[0])
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(xv.shape[0]):
            ov[i] = _unit(h, c, xv[i], cv[i], co, upper, z0, ch)
    return out.reshape(shape)


cdef double _cell(double h, double c, long j, long i, const double[::1] s,
                  const double[::1] sb, const double[::1] w, const double[::1] coef,
                  double upper, double z0, const double[::1] cheb) noexcept nogil:
    cdef Py_ssize_t q
    cdef double acc = 0.0, x, xc
    for q in range(s.shape[0]):
        x = (i + s[q]) / j
        xc = ((j - 1 - i) + sb[q]) / j
        acc += w[q] * _unit(h, c, x, xc, coef, upper, z0, cheb)
    return acc


def cell_weights(double h, double c, long n, coef, double upper, double z0, cheb,
                 ts, gl_near, gl_far):
    cdef const double[::1] co = np.ascontiguousarray(coef, dtype=float)
    cdef const double[::1] ch = np.ascontiguousarray(cheb, dtype=float)
    cdef const double[::1] ts_s = np.ascontiguousarray(ts[0], dtype=float)
    cdef const double[::1] ts_sb = np.ascontiguousarray(ts[1], dtype=float)
    cdef const double[::1] ts_w = np.ascontiguousarray(ts[2], dtype=float)
    cdef const double[::1] n_s = np.ascontiguousarray(gl_near[0], dtype=float)
    cdef const double[::1] n_sb = np.ascontiguousarray(gl_near[1], dtype=float)
    cdef const double[::1] n_w = np.ascontiguousarray(gl_near[2], dtype=float)
    cdef const double[::1] f_s = np.ascontiguousarray(gl_far[0], dtype=float)
    cdef const double[::1] f_sb = np.ascontiguousarray(gl_far[1], dtype=float)
    cdef const double[::1] f_w = np.ascontiguousarray(gl_far[2], dtype=float)
    out = np.zeros((n, n))
    cdef double[:, ::1] ov = out
    cdef long j, i
    with nogil:
        for j in range(1, n + 1):
            ov[j - 1, 0] = _cell(h, c, j, 0, ts_s, ts_sb, ts_w, co, upper, z0, ch)
            if j >= 2:
                ov[j - 1, j - 1] = _cell(h, c, j, j - 1, ts_s, ts_sb, ts_w, co, upper, z0, ch)
            for i in range(1, j - 1):
                if i >= 8 and j - 1 - i >= 8:
                    ov[j - 1, i] = _cell(h, c, j, i, f_s, f_sb, f_w, co, upper, z0, ch)
                else:
                    ov[j - 1, i] = _cell(h, c, j, i, n_s, n_sb, n_w, co, upper, z0, ch)
    return out


def euler_affine(base, neg_a, c, double dt):
    cdef const double[:, :, ::1] bv = np.ascontiguousarray(base, dtype=float)
    cdef const double[:, ::1] m = np.ascontiguousarray(neg_a, dtype=float)
    cdef const double[::1] cv = np.ascontiguousarray(c, dtype=float)
    cdef Py_ssize_t r = bv.shape[0], n1 = bv.shape[1], d = bv.shape[2]
    out = np.empty((r, n1, d))
    cdef double[:, :, ::1] ov = out
    acc_arr = np.zeros(d)
    cdef double[::1] acc = acc_arr
    cdef Py_ssize_t a, j, k, l
    cdef double drift
    with nogil:
        for a in range(r):
            for k in range(d):
                acc[k] = 0.0
            for j in range(n1):
                for k in range(d):
                    ov[a, j, k] = bv[a, j, k] + acc[k]
                for k in range(d):
                    drift = 0.0
                    for l in range(d):
                        drift = drift + m[k, l] * ov[a, j, l]
                    acc[k] = acc[k] + dt * (drift + cv[k])
    return out


def euler_perturbed(base, double alpha0, double eps, double dt):
    cdef const double[:, :, ::1] bv = np.ascontiguousarray(base, dtype=float)
    cdef Py_ssize_t r = bv.shape[0], n1 = bv.shape[1], d = bv.shape[2]
    out = np.empty((r, n1, d))
    cdef double[:, :, ::1] ov = out
    cdef Py_ssize_t a, j, k
    cdef double y, acc
    with nogil:
        for a in range(r):
            for k in range(d):
                acc = 0.0
                for j in range(n1):
                    y = bv[a, j, k] + acc
                    ov[a, j, k] = y
                    acc = acc + dt * (-alpha0 * y + eps * sin(y))
    return out
