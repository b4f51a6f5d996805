# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-pulse routing; same contract and pool layout as ``_routing.route_pulses``."""
import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef enum:
    I1 = 1
    I2 = 2
    S3 = 4
    S4 = 8
    S3_BLOCK_A = 16
    S4_BLOCK_A = 32
    S3_BLOCK_B = 64
    S4_BLOCK_B = 128


cdef inline unsigned char _ports(const double[::1] u, Py_ssize_t base, long m3, long limit,
                                 double eta3, double eta4, unsigned char bit3,
                                 unsigned char bit4) noexcept nogil:
    cdef unsigned char out = 0
    cdef long p
    for p in range(limit):
        if p < m3:
            if u[base + p] < eta3:
                out |= bit3
        elif u[base + p] < eta4:
            out |= bit4
    return out


def route_pulses(const cnp.int64_t[::1] n_a, const cnp.int64_t[::1] n_b,
                 const cnp.int64_t[::1] offsets, const double[::1] uniforms,
                 const double[:, :, ::1] cdf,
                 double eta_i1, double eta_i2, double eta_s3, double eta_s4,
                 double overlap, double r2, double t2):
    cdef Py_ssize_t size = n_a.shape[0]
    cdef Py_ssize_t width = cdf.shape[2]
    flags_arr = np.zeros(size, dtype=np.uint8)
    cdef unsigned char[::1] flags = flags_arr
    cdef Py_ssize_t p, pos
    cdef long na, nb, i, k, unmatched_to3, b_to3, a_to3, j3
    cdef double ub
    cdef unsigned char f
    with nogil:
        for p in range(size):
            na = n_a[p]
            nb = n_b[p]
            pos = offsets[p]
            f = 0
            for i in range(na):
                if uniforms[pos + i] < eta_i1:
                    f |= I1
            pos += na
            for i in range(nb):
                if uniforms[pos + i] < eta_i2:
                    f |= I2
            pos += nb
            k = 0
            unmatched_to3 = 0
            b_to3 = 0
            for i in range(nb):
                if uniforms[pos + nb + na + i] < r2:
                    b_to3 += 1
                    if not (uniforms[pos + i] < overlap):
                        unmatched_to3 += 1
                if uniforms[pos + i] < overlap:
                    k += 1
            pos += nb
            a_to3 = 0
            for i in range(na):
                if uniforms[pos + i] < t2:
                    a_to3 += 1
            pos += na + nb
            ub = uniforms[pos]
            j3 = 0
            while j3 < width and cdf[na, k, j3] <= ub:
                j3 += 1
            pos += 1
            f |= _ports(uniforms, pos, j3 + unmatched_to3, na + nb, eta_s3, eta_s4, S3, S4)
            f |= _ports(uniforms, pos, b_to3, nb, eta_s3, eta_s4, S3_BLOCK_A, S4_BLOCK_A)
            f |= _ports(uniforms, pos, a_to3, na, eta_s3, eta_s4, S3_BLOCK_B, S4_BLOCK_B)
            flags[p] = f
    return flags_arr
