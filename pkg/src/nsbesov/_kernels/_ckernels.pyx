# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled versions of the hot loops in :mod:`nsbesov._kernels._pykernels`.

Complex arithmetic is spelled out on interleaved real/imaginary doubles, which
avoids the NaN-aware complex multiply helper of C99 and lets the compiler
vectorize the inner loop.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport pow

cnp.import_array()


def lattice_accumulate(target, vals, long long[:, ::1] nodes, patch, long long[::1] offset):
    cdef double[:, ::1] t = target.view(np.float64)
    cdef double[:, ::1] q = patch.view(np.float64)
    cdef double[::1] v = vals.view(np.float64)
    cdef Py_ssize_t K1 = t.shape[0], K2 = t.shape[1] // 2
    cdef Py_ssize_t n1 = q.shape[0], n2 = q.shape[1] // 2
    cdef Py_ssize_t a, w1, w2, lo1, hi1, lo2, hi2, ti, qi
    cdef long long s1, s2
    cdef double vr, vi, pr, pi
    with nogil:
        for a in range(nodes.shape[0]):
            s1 = nodes[a, 0] - offset[0]
            s2 = nodes[a, 1] - offset[1]
            lo1 = s1 if s1 > 0 else 0
            hi1 = s1 + n1 if s1 + n1 < K1 else K1
            lo2 = s2 if s2 > 0 else 0
            hi2 = s2 + n2 if s2 + n2 < K2 else K2
            if lo1 >= hi1 or lo2 >= hi2:
                continue
            vr = v[2 * a]
            vi = v[2 * a + 1]
            for w1 in range(lo1, hi1):
                for w2 in range(lo2, hi2):
                    ti = 2 * w2
                    qi = 2 * (w2 - s2)
                    pr = q[w1 - s1, qi]
                    pi = q[w1 - s1, qi + 1]
                    t[w1, ti] += vr * pr - vi * pi
                    t[w1, ti + 1] += vr * pi + vi * pr


def power_sum(mod, double p):
    cdef double[::1] m = np.ascontiguousarray(mod, dtype=np.float64).ravel()
    cdef Py_ssize_t i, n = m.shape[0]
    cdef double acc = 0.0, x2
    with nogil:
        if p == 1.0:
            for i in range(n):
                acc += m[i]
        elif p == 2.0:
            for i in range(n):
                acc += m[i] * m[i]
        elif p == 4.0:
            for i in range(n):
                x2 = m[i] * m[i]
                acc += x2 * x2
        else:
            for i in range(n):
                acc += pow(m[i], p)
    return acc
