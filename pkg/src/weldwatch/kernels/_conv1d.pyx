# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled 1D convolution kernels.

Each kernel replays the exact per-element accumulation order of the numpy
fallback in ``_python.py`` (see the float contract there), so outputs are
bit-identical across backends. Built with -ffp-contract=off; adding
-ffast-math or FMA contraction would break that equality.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def correlate_valid(double[:, :, ::1] a, double[:, :, ::1] w):
    cdef Py_ssize_t nb = a.shape[0], nq = a.shape[1], nt = a.shape[2]
    cdef Py_ssize_t np_ = w.shape[0], nk = w.shape[2]
    cdef Py_ssize_t nto = nt - nk + 1
    cdef cnp.ndarray[double, ndim=3] out_arr = np.zeros((nb, np_, nto), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t b, p, q, k, t
    cdef double wv
    for b in range(nb):
        for q in range(nq):
            for k in range(nk):
                for p in range(np_):
                    wv = w[p, q, k]
                    for t in range(nto):
                        out[b, p, t] += wv * a[b, q, t + k]
    return out_arr


def scatter_full(double[:, :, ::1] a, double[:, :, ::1] w):
    cdef Py_ssize_t nb = a.shape[0], nq = a.shape[1], nt = a.shape[2]
    cdef Py_ssize_t np_ = w.shape[1], nk = w.shape[2]
    cdef cnp.ndarray[double, ndim=3] out_arr = np.zeros((nb, np_, nt + nk - 1), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t b, p, q, k, t
    cdef double wv
    for b in range(nb):
        for q in range(nq):
            for k in range(nk):
                for p in range(np_):
                    wv = w[q, p, k]
                    for t in range(nt):
                        out[b, p, t + k] += a[b, q, t] * wv
    return out_arr


def weight_grad(double[:, :, ::1] g, double[:, :, ::1] x):
    cdef Py_ssize_t nb = g.shape[0], np_ = g.shape[1], ntg = g.shape[2]
    cdef Py_ssize_t nq = x.shape[1], ntx = x.shape[2]
    cdef Py_ssize_t nk = ntx - ntg + 1
    cdef cnp.ndarray[double, ndim=3] out_arr = np.zeros((np_, nq, nk), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t b, p, q, k, t
    cdef double gv
    for b in range(nb):
        for t in range(ntg):
            for p in range(np_):
                gv = g[b, p, t]
                for q in range(nq):
                    for k in range(nk):
                        out[p, q, k] += gv * x[b, q, t + k]
    return out_arr
