# cython: language_level=3
"""Compiled kernels for dense complex matrix work.

Every kernel sums in a fixed per-row order so results do not depend on how
callers partition work across threads.
"""
import numpy as np

cimport numpy as cnp

cnp.import_array()


def matmul(const double complex[:, ::1] a, const double complex[:, ::1] b):
    cdef Py_ssize_t n = a.shape[0], m = a.shape[1], p = b.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double complex aik
    if m != b.shape[0]:
        raise ValueError(f"shape mismatch: ({n}, {m}) @ ({b.shape[0]}, {p})")
    out = np.zeros((n, p), dtype=np.complex128)
    cdef double complex[:, ::1] c = out
    with nogil:
        for i in range(n):
            for k in range(m):
                aik = a[i, k]
                if aik.real == 0.0 and aik.imag == 0.0:
                    continue
                for j in range(p):
                    c[i, j] = c[i, j] + aik * b[k, j]
    return out


def kron(const double complex[:, ::1] a, const double complex[:, ::1] b):
    cdef Py_ssize_t ar = a.shape[0], ac = a.shape[1]
    cdef Py_ssize_t br = b.shape[0], bc = b.shape[1]
    cdef Py_ssize_t i, j, k, l
    cdef double complex aij
    out = np.empty((ar * br, ac * bc), dtype=np.complex128)
    cdef double complex[:, ::1] c = out
    with nogil:
        for i in range(ar):
            for j in range(ac):
                aij = a[i, j]
                for k in range(br):
                    for l in range(bc):
                        c[i * br + k, j * bc + l] = aij * b[k, l]
    return out


cdef void _apply(const double complex[:, ::1] m,
                 double complex[:, ::1] src,
                 double complex[:, ::1] dst) noexcept nogil:
    cdef Py_ssize_t n = m.shape[0], cols = src.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double complex mik
    for i in range(n):
        for j in range(cols):
            dst[i, j] = 0
        for k in range(n):
            mik = m[i, k]
            if mik.real == 0.0 and mik.imag == 0.0:
                continue
            for j in range(cols):
                dst[i, j] = dst[i, j] + mik * src[k, j]


def apply_chain(list blocks, const double complex[:, ::1] state):
    """Return ``blocks[-1] @ ... @ blocks[0] @ state``."""
    cdef Py_ssize_t n = state.shape[0], cols = state.shape[1]
    cur = np.array(state, dtype=np.complex128, copy=True)
    nxt = np.empty((n, cols), dtype=np.complex128)
    cdef double complex[:, ::1] src
    cdef double complex[:, ::1] dst
    cdef const double complex[:, ::1] m
    for blk in blocks:
        m = blk
        if m.shape[0] != n or m.shape[1] != n:
            raise ValueError(f"block shape {m.shape[0]}x{m.shape[1]} does not act on dimension {n}")
        src = cur
        dst = nxt
        with nogil:
            _apply(m, src, dst)
        cur, nxt = nxt, cur
    return cur


def masked_probability(const double complex[:, ::1] state, const double[:, ::1] mask):
    """Column sums of ``mask * |state|**2``."""
    cdef Py_ssize_t n = state.shape[0], cols = state.shape[1]
    cdef Py_ssize_t i, j
    cdef double complex z
    if mask.shape[0] != n or mask.shape[1] != cols:
        raise ValueError("mask shape does not match state")
    out = np.zeros(cols, dtype=np.float64)
    cdef double[::1] p = out
    with nogil:
        for i in range(n):
            for j in range(cols):
                if mask[i, j] != 0.0:
                    z = state[i, j]
                    p[j] += mask[i, j] * (z.real * z.real + z.imag * z.imag)
    return out
