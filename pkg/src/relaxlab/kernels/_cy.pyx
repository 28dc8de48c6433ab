# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; same contracts as the numpy versions in ``_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


def rusanov_divergence(U, F, s, dx):
    cdef const double[:, ::1] u = np.ascontiguousarray(U, dtype=np.float64)
    cdef const double[:, ::1] f = np.ascontiguousarray(F, dtype=np.float64)
    cdef const double[::1] sp = np.ascontiguousarray(s, dtype=np.float64)
    cdef Py_ssize_t m = u.shape[0], k = u.shape[1], i, c, r
    out_arr = np.empty((m, k))
    cdef double[:, ::1] out = out_arr
    cdef double[::1] left = np.empty(k)
    cdef double a, face, inv = 1.0 / dx
    if m == 0:
        return out_arr
    # flux through the face left of cell 0, i.e. between m-1 and 0
    a = sp[m - 1] if sp[m - 1] > sp[0] else sp[0]
    for c in range(k):
        left[c] = 0.5 * (f[m - 1, c] + f[0, c]) - 0.5 * a * (u[0, c] - u[m - 1, c])
    for i in range(m):
        r = i + 1 if i + 1 < m else 0
        a = sp[i] if sp[i] > sp[r] else sp[r]
        for c in range(k):
            face = 0.5 * (f[i, c] + f[r, c]) - 0.5 * a * (u[r, c] - u[i, c])
            out[i, c] = -(face - left[c]) * inv
            left[c] = face
    return out_arr


def relax_exact(U, target, cols, decay):
    out_arr = np.array(U, dtype=np.float64, order="C", copy=True)
    cdef double[:, ::1] out = out_arr
    cdef const double[:, ::1] tg = np.ascontiguousarray(
        np.broadcast_to(target, (out_arr.shape[0], len(cols))), dtype=np.float64)
    cdef const Py_ssize_t[::1] cc = np.ascontiguousarray(cols, dtype=np.intp)
    cdef Py_ssize_t m = out.shape[0], nc = cc.shape[0], i, c, col
    cdef double d = decay
    for i in range(m):
        for c in range(nc):
            col = cc[c]
            out[i, col] = tg[i, c] + (out[i, col] - tg[i, c]) * d
    return out_arr


def max_jump(U, dx):
    cdef const double[:, ::1] u = np.ascontiguousarray(U, dtype=np.float64)
    cdef Py_ssize_t m = u.shape[0], k = u.shape[1], i, c, r
    cdef double best = 0.0, d
    for i in range(m):
        r = i + 1 if i + 1 < m else 0
        for c in range(k):
            d = fabs(u[r, c] - u[i, c])
            if d > best:
                best = d
    return best / dx
