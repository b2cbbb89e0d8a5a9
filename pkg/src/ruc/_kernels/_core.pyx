# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled dense kernels for the training hot path.

Mirrors ruc._kernels.pure; all arrays are C-contiguous float64.
"""

from libc.math cimport exp

import numpy as np


def affine(double[:, ::1] x, double[:, ::1] w, double[::1] b):
    cdef Py_ssize_t n = x.shape[0], din = x.shape[1], dout = w.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double xv
    out_arr = np.empty((n, dout))
    cdef double[:, ::1] out = out_arr
    for i in range(n):
        for j in range(dout):
            out[i, j] = b[j]
        for k in range(din):
            xv = x[i, k]
            for j in range(dout):
                out[i, j] += xv * w[k, j]
    return out_arr


def affine_grads(double[:, ::1] x, double[:, ::1] w, double[:, ::1] dz):
    cdef Py_ssize_t n = x.shape[0], din = x.shape[1], dout = w.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double xv, acc
    dx_arr = np.empty((n, din))
    dw_arr = np.zeros((din, dout))
    db_arr = np.zeros(dout)
    cdef double[:, ::1] dx = dx_arr
    cdef double[:, ::1] dw = dw_arr
    cdef double[::1] db = db_arr
    for i in range(n):
        for j in range(dout):
            db[j] += dz[i, j]
        for k in range(din):
            xv = x[i, k]
            acc = 0.0
            for j in range(dout):
                dw[k, j] += xv * dz[i, j]
                acc += dz[i, j] * w[k, j]
            dx[i, k] = acc
    return dx_arr, dw_arr, db_arr


def relu(double[:, ::1] z):
    cdef Py_ssize_t n = z.shape[0], d = z.shape[1]
    cdef Py_ssize_t i, j
    out_arr = np.empty((n, d))
    cdef double[:, ::1] out = out_arr
    for i in range(n):
        for j in range(d):
            out[i, j] = z[i, j] if z[i, j] > 0.0 else 0.0
    return out_arr


def relu_grad(double[:, ::1] z, double[:, ::1] da):
    cdef Py_ssize_t n = z.shape[0], d = z.shape[1]
    cdef Py_ssize_t i, j
    out_arr = np.empty((n, d))
    cdef double[:, ::1] out = out_arr
    for i in range(n):
        for j in range(d):
            out[i, j] = da[i, j] if z[i, j] > 0.0 else 0.0
    return out_arr


def softmax(double[:, ::1] z):
    cdef Py_ssize_t n = z.shape[0], d = z.shape[1]
    cdef Py_ssize_t i, j
    cdef double m, s
    out_arr = np.empty((n, d))
    cdef double[:, ::1] out = out_arr
    for i in range(n):
        m = z[i, 0]
        for j in range(1, d):
            if z[i, j] > m:
                m = z[i, j]
        s = 0.0
        for j in range(d):
            out[i, j] = exp(z[i, j] - m)
            s += out[i, j]
        for j in range(d):
            out[i, j] /= s
    return out_arr


def sqdist(double[:, ::1] a, double[:, ::1] b):
    cdef Py_ssize_t na = a.shape[0], nb = b.shape[0], d = a.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double acc, diff
    out_arr = np.empty((na, nb))
    cdef double[:, ::1] out = out_arr
    for i in range(na):
        for j in range(nb):
            acc = 0.0
            for k in range(d):
                diff = a[i, k] - b[j, k]
                acc += diff * diff
            out[i, j] = acc
    return out_arr
