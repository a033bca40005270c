# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled curve-sum kernel: pointwise exponential sums over a discrete curve."""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin

cnp.import_array()


def curve_sum(cnp.ndarray[cnp.complex128_t, ndim=1] coeff,
              cnp.ndarray[cnp.float64_t, ndim=1] powers,
              cnp.ndarray[cnp.float64_t, ndim=1] x,
              cnp.ndarray[cnp.float64_t, ndim=1] t,
              double scale):
    cdef Py_ssize_t npts = x.shape[0]
    cdef Py_ssize_t nmodes = coeff.shape[0]
    cdef Py_ssize_t half = nmodes // 2
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.empty(npts, dtype=np.complex128)
    cdef double acc_re, acc_im, phase, cr, ci, cp, sp, xi, ti
    cdef Py_ssize_t i, m
    with nogil:
        for i in range(npts):
            acc_re = 0.0
            acc_im = 0.0
            xi = x[i]
            ti = t[i]
            for m in range(nmodes):
                cr = coeff[m].real
                ci = coeff[m].imag
                if cr == 0.0 and ci == 0.0:
                    continue
                phase = scale * ((m - half) * xi + powers[m] * ti)
                cp = cos(phase)
                sp = sin(phase)
                acc_re += cr * cp - ci * sp
                acc_im += cr * sp + ci * cp
            out[i].real = acc_re
            out[i].imag = acc_im
    return out
