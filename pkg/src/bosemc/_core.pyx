# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled propagation kernels.

Both functions update ``psi`` in place and release the GIL, so independent
evolutions can run on separate threads.
"""

from libc.math cimport cos, sin
from libc.stdlib cimport malloc, free

import numpy as np


def apply_diagonal(double complex[::1] psi, const long long[:, ::1] occ,
                   const double[::1] detunings, const double[::1] interactions,
                   double dt):
    cdef Py_ssize_t d = occ.shape[0]
    cdef Py_ssize_t L = occ.shape[1]
    if detunings.shape[0] != L or interactions.shape[0] != L:
        raise ValueError("control rows must have one entry per mode")
    if psi.shape[0] != d:
        raise ValueError("state length does not match the basis")
    cdef Py_ssize_t k, i, n
    cdef Py_ssize_t n_max = 0
    for k in range(d):
        for i in range(L):
            if occ[k, i] > n_max:
                n_max = occ[k, i]
    # the phase factorizes over sites: tabulate exp(-i dt e_i(n)) for n = 0..n_max
    cdef double complex[:, ::1] table = np.empty((L, n_max + 1), dtype=np.complex128)
    cdef double ph
    for i in range(L):
        for n in range(n_max + 1):
            ph = -dt * (detunings[i] * n + interactions[i] * n * (n - 1.0))
            table[i, n] = cos(ph) + 1j * sin(ph)
    cdef double complex f
    with nogil:
        for k in range(d):
            f = table[0, occ[k, 0]]
            for i in range(1, L):
                f = f * table[i, occ[k, i]]
            psi[k] = psi[k] * f


def apply_bond_hop(double complex[::1] psi, const long long[::1] flat,
                   const long long[::1] offsets, const long long[::1] widths,
                   const double[::1] vecs, const double[::1] vecs_t,
                   const long long[::1] vec_offsets,
                   const double[::1] evals, const long long[::1] eval_offsets,
                   double theta):
    """exp(-i theta (a_i^+ a_j + h.c.)) on one bond, block by block.

    Block ``r`` is multiplied by ``V diag(exp(-i theta lam)) V^T`` where
    ``V`` (row-major, columns are eigenvectors) and ``lam`` diagonalize the
    two-mode hop generator with ``r`` bosons; ``vecs_t`` holds each ``V^T``.
    """
    cdef Py_ssize_t n_blocks = widths.shape[0]
    if offsets.shape[0] != n_blocks + 1 or offsets[n_blocks] != psi.shape[0]:
        raise ValueError("block tables do not match the state length")
    if vec_offsets.shape[0] < n_blocks or eval_offsets.shape[0] < n_blocks:
        raise ValueError("hop spectra do not cover every pair occupancy")
    if theta == 0.0:
        return
    cdef Py_ssize_t r, size, biggest = n_blocks
    for r in range(n_blocks):
        size = (r + 1) * widths[r]
        if size > biggest:
            biggest = size
    # split real/imaginary scratch so every inner loop is a contiguous axpy
    cdef double *buf = <double *> malloc((4 * biggest + 2 * n_blocks) * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    try:
        with nogil:
            _hop_blocks(&psi[0], &flat[0], &offsets[0], &widths[0], &vecs[0], &vecs_t[0],
                        &vec_offsets[0], &evals[0], &eval_offsets[0], n_blocks, theta,
                        buf, biggest)
    finally:
        free(buf)


cdef void _hop_blocks(double complex *psi, const long long *flat, const long long *offsets,
                      const long long *widths, const double *vecs, const double *vecs_t,
                      const long long *vec_offsets, const double *evals,
                      const long long *eval_offsets, Py_ssize_t n_blocks, double theta,
                      double *buf, Py_ssize_t biggest) noexcept nogil:
    cdef double *xr = buf
    cdef double *xi = buf + biggest
    cdef double *yr = buf + 2 * biggest
    cdef double *yi = buf + 3 * biggest
    cdef double *pc = buf + 4 * biggest
    cdef double *ps = pc + n_blocks
    cdef Py_ssize_t r, m, K, c, s, j, n, off
    cdef const long long *idx
    cdef const double *V
    cdef const double *VT
    cdef const double *lam
    cdef double a, br, bi, cr, ci
    cdef double *xrs
    cdef double *xis
    cdef double *yrj
    cdef double *yij
    for r in range(1, n_blocks):
        K = widths[r]
        if K == 0:
            continue
        m = r + 1
        n = m * K
        idx = flat + offsets[r]
        V = vecs + vec_offsets[r]
        VT = vecs_t + vec_offsets[r]
        lam = evals + eval_offsets[r]
        for j in range(m):
            pc[j] = cos(theta * lam[j])
            ps[j] = -sin(theta * lam[j])
        # gather the (m, K) block
        for c in range(n):
            xr[c] = psi[idx[c]].real
            xi[c] = psi[idx[c]].imag
            yr[c] = 0.0
            yi[c] = 0.0
        if K == 1:
            # y = V^T x as a sum of rows of V; then x = V y as a sum of rows of V^T
            for s in range(m):
                br = xr[s]
                bi = xi[s]
                for j in range(m):
                    yr[j] += V[s * m + j] * br
                    yi[j] += V[s * m + j] * bi
            for j in range(m):
                cr = yr[j] * pc[j] - yi[j] * ps[j]
                ci = yr[j] * ps[j] + yi[j] * pc[j]
                xr[j] = 0.0
                xi[j] = 0.0
                yr[j] = cr
                yi[j] = ci
            for j in range(m):
                br = yr[j]
                bi = yi[j]
                for s in range(m):
                    xr[s] += VT[j * m + s] * br
                    xi[s] += VT[j * m + s] * bi
        else:
            # Y[j, :] += V[s, j] X[s, :]
            for s in range(m):
                xrs = xr + s * K
                xis = xi + s * K
                for j in range(m):
                    a = V[s * m + j]
                    yrj = yr + j * K
                    yij = yi + j * K
                    for c in range(K):
                        yrj[c] += a * xrs[c]
                        yij[c] += a * xis[c]
            for j in range(m):
                yrj = yr + j * K
                yij = yi + j * K
                for c in range(K):
                    cr = yrj[c] * pc[j] - yij[c] * ps[j]
                    ci = yrj[c] * ps[j] + yij[c] * pc[j]
                    yrj[c] = cr
                    yij[c] = ci
            for c in range(n):
                xr[c] = 0.0
                xi[c] = 0.0
            # X[s, :] += V[s, j] Y[j, :]
            for s in range(m):
                xrs = xr + s * K
                xis = xi + s * K
                for j in range(m):
                    a = V[s * m + j]
                    yrj = yr + j * K
                    yij = yi + j * K
                    for c in range(K):
                        xrs[c] += a * yrj[c]
                        xis[c] += a * yij[c]
        for c in range(n):
            psi[idx[c]] = xr[c] + 1j * xi[c]
