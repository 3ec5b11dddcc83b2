# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled tape interpreter (fast evaluation backend).

Semantics match skewric._evalcore_py: division by a denominator below
1e-300 in magnitude and log of a non-positive argument raise
SingularPointError; integer powers are computed by repeated
multiplication.
"""

import numpy as np

from .errors import SingularPointError

from libc.math cimport exp as c_exp, log as c_log, sin as c_sin
from libc.math cimport cos as c_cos, tanh as c_tanh, fabs

DEF TINY = 1e-300


def run_scalar(int[::1] codes, int[::1] arg1, int[::1] arg2,
               double[::1] consts, double[::1] point, double[::1] out):
    cdef Py_ssize_t n = codes.shape[0]
    cdef Py_ssize_t i
    cdef int c, a, b, k, j
    cdef double x, den, r
    for i in range(n):
        c = codes[i]
        a = arg1[i]
        b = arg2[i]
        if c == 0:
            out[i] = consts[a]
        elif c == 1:
            out[i] = point[a]
        elif c == 2:
            out[i] = out[a] + out[b]
        elif c == 3:
            out[i] = out[a] - out[b]
        elif c == 4:
            out[i] = out[a] * out[b]
        elif c == 5:
            den = out[b]
            if fabs(den) < TINY:
                raise SingularPointError("division by a near-zero denominator")
            out[i] = out[a] / den
        elif c == 6:
            x = out[a]
            k = b if b >= 0 else -b
            r = 1.0
            for j in range(k):
                r *= x
            if b < 0:
                if fabs(r) < TINY:
                    raise SingularPointError("negative power of a near-zero base")
                r = 1.0 / r
            out[i] = r
        elif c == 7:
            out[i] = c_exp(out[a])
        elif c == 8:
            x = out[a]
            if x <= 0.0:
                raise SingularPointError("log of a non-positive argument")
            out[i] = c_log(x)
        elif c == 9:
            out[i] = c_sin(out[a])
        elif c == 10:
            out[i] = c_cos(out[a])
        else:
            out[i] = c_tanh(out[a])


def run_batch(int[::1] codes, int[::1] arg1, int[::1] arg2,
              double[::1] consts, double[:, ::1] points):
    cdef Py_ssize_t n_ops = codes.shape[0]
    cdef Py_ssize_t n = points.shape[0]
    slots_arr = np.empty((n_ops, n), dtype=np.float64)
    cdef double[:, ::1] slots = slots_arr
    cdef Py_ssize_t i, p
    cdef int c, a, b, k, j
    cdef double x, den, r
    for i in range(n_ops):
        c = codes[i]
        a = arg1[i]
        b = arg2[i]
        if c == 0:
            x = consts[a]
            for p in range(n):
                slots[i, p] = x
        elif c == 1:
            for p in range(n):
                slots[i, p] = points[p, a]
        elif c == 2:
            for p in range(n):
                slots[i, p] = slots[a, p] + slots[b, p]
        elif c == 3:
            for p in range(n):
                slots[i, p] = slots[a, p] - slots[b, p]
        elif c == 4:
            for p in range(n):
                slots[i, p] = slots[a, p] * slots[b, p]
        elif c == 5:
            for p in range(n):
                den = slots[b, p]
                if fabs(den) < TINY:
                    raise SingularPointError("division by a near-zero denominator")
                slots[i, p] = slots[a, p] / den
        elif c == 6:
            k = b if b >= 0 else -b
            for p in range(n):
                x = slots[a, p]
                r = 1.0
                for j in range(k):
                    r *= x
                if b < 0:
                    if fabs(r) < TINY:
                        raise SingularPointError("negative power of a near-zero base")
                    r = 1.0 / r
                slots[i, p] = r
        elif c == 7:
            for p in range(n):
                slots[i, p] = c_exp(slots[a, p])
        elif c == 8:
            for p in range(n):
                x = slots[a, p]
                if x <= 0.0:
                    raise SingularPointError("log of a non-positive argument")
                slots[i, p] = c_log(x)
        elif c == 9:
            for p in range(n):
                slots[i, p] = c_sin(slots[a, p])
        elif c == 10:
            for p in range(n):
                slots[i, p] = c_cos(slots[a, p])
        else:
            for p in range(n):
                slots[i, p] = c_tanh(slots[a, p])
    return slots_arr
