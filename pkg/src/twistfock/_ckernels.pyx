# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled tensor-slot kernels.

Same contract as ``_pykernels``: batches of tensors stored row-wise with
shape ``(batch, d**n)``, 1-based slot indices.  ``apply_plan`` runs a whole
contraction plan in C with two ping-pong buffers, which removes the per-step
Python overhead that dominates at desk sizes.
"""
import numpy as np
cimport numpy as cnp
from libc.string cimport memset

cnp.import_array()


cdef inline Py_ssize_t ipow(Py_ssize_t base, Py_ssize_t e) nogil:
    cdef Py_ssize_t r = 1
    while e > 0:
        r *= base
        e -= 1
    return r


cdef void _two_site(const double complex* x, double complex* y,
                    Py_ssize_t outer, Py_ssize_t dd, Py_ssize_t inner,
                    const double complex* op) noexcept nogil:
    cdef Py_ssize_t o, p, q, r, base
    cdef double complex w
    memset(y, 0, outer * dd * inner * sizeof(double complex))
    for o in range(outer):
        base = o * dd * inner
        for p in range(dd):
            for q in range(dd):
                w = op[p * dd + q]
                if w.real == 0.0 and w.imag == 0.0:
                    continue
                for r in range(inner):
                    y[base + p * inner + r] += w * x[base + q * inner + r]


cdef void _contract(const double complex* x, double complex* y,
                    Py_ssize_t outer, Py_ssize_t dd, Py_ssize_t inner,
                    const double complex* c) noexcept nogil:
    cdef Py_ssize_t o, q, r
    cdef double complex w
    memset(y, 0, outer * inner * sizeof(double complex))
    for o in range(outer):
        for q in range(dd):
            w = c[q]
            if w.real == 0.0 and w.imag == 0.0:
                continue
            for r in range(inner):
                y[o * inner + r] += w * x[(o * dd + q) * inner + r]


cdef void _insert(const double complex* x, double complex* y,
                  Py_ssize_t outer, Py_ssize_t dd, Py_ssize_t inner,
                  const double complex* c) noexcept nogil:
    cdef Py_ssize_t o, q, r
    cdef double complex w
    for o in range(outer):
        for q in range(dd):
            w = c[q]
            for r in range(inner):
                y[(o * dd + q) * inner + r] = w * x[o * inner + r]


def apply_two_site(const double complex[:, ::1] x, Py_ssize_t d, Py_ssize_t n,
                   Py_ssize_t k, const double complex[:, ::1] op):
    cdef Py_ssize_t b = x.shape[0]
    out = np.empty((b, ipow(d, n)), dtype=np.complex128)
    cdef double complex[:, ::1] y = out
    with nogil:
        _two_site(&x[0, 0], &y[0, 0], b * ipow(d, k - 1), d * d,
                  ipow(d, n - k - 1), &op[0, 0])
    return out


def contract(const double complex[:, ::1] x, Py_ssize_t d, Py_ssize_t n,
             Py_ssize_t k, const double complex[::1] c):
    cdef Py_ssize_t b = x.shape[0]
    out = np.empty((b, ipow(d, n - 2)), dtype=np.complex128)
    cdef double complex[:, ::1] y = out
    if out.size == 0:
        return out
    with nogil:
        _contract(&x[0, 0], &y[0, 0], b * ipow(d, k - 1), d * d,
                  ipow(d, n - k - 1), &c[0])
    return out


def insert(const double complex[:, ::1] x, Py_ssize_t d, Py_ssize_t n,
           Py_ssize_t k, const double complex[::1] c):
    cdef Py_ssize_t b = x.shape[0]
    out = np.empty((b, ipow(d, n + 2)), dtype=np.complex128)
    cdef double complex[:, ::1] y = out
    if out.size == 0:
        return out
    with nogil:
        _insert(&x[0, 0], &y[0, 0], b * ipow(d, k - 1), d * d,
                ipow(d, n - k + 1), &c[0])
    return out


def apply_plan(const double complex[:, ::1] x, Py_ssize_t d, Py_ssize_t n,
               steps, const double complex[:, ::1] t, const double complex[::1] c):
    cdef const cnp.int64_t[:, ::1] st = np.ascontiguousarray(steps, dtype=np.int64).reshape(-1, 3)
    cdef Py_ssize_t b = x.shape[0]
    cdef Py_ssize_t nsteps = st.shape[0]
    cdef Py_ssize_t size = b * ipow(d, n)
    if nsteps == 0:
        return np.array(x, copy=True)
    buf_a = np.empty(max(size, 1), dtype=np.complex128)
    buf_b = np.empty(max(size, 1), dtype=np.complex128)
    cdef double complex[::1] a = buf_a
    cdef double complex[::1] bb = buf_b
    cdef double complex* src = &a[0]
    cdef double complex* dst = &bb[0]
    cdef double complex* tmp
    cdef Py_ssize_t s, k, ci, tf, tt, cur = n
    cdef const double complex[::1] xf = np.asarray(x).reshape(-1)
    with nogil:
        for k in range(size):
            src[k] = xf[k]
        for s in range(nsteps):
            ci = st[s, 0]
            tf = st[s, 1]
            tt = st[s, 2]
            k = tt - 1
            while k >= tf:
                _two_site(src, dst, b * ipow(d, k - 1), d * d,
                          ipow(d, cur - k - 1), &t[0, 0])
                tmp = src
                src = dst
                dst = tmp
                k -= 1
            _contract(src, dst, b * ipow(d, ci - 1), d * d,
                      ipow(d, cur - ci - 1), &c[0])
            tmp = src
            src = dst
            dst = tmp
            cur -= 2
    res = buf_a if src == &a[0] else buf_b
    return res[: b * ipow(d, cur)].reshape(b, ipow(d, cur)).copy()


def apply_plan_adjoint(const double complex[:, ::1] x, Py_ssize_t d, Py_ssize_t n_out,
                       steps, const double complex[:, ::1] t_adj,
                       const double complex[::1] c_conj):
    cdef const cnp.int64_t[:, ::1] st = np.ascontiguousarray(steps, dtype=np.int64).reshape(-1, 3)
    cdef Py_ssize_t b = x.shape[0]
    cdef Py_ssize_t nsteps = st.shape[0]
    cdef Py_ssize_t size = b * ipow(d, n_out)
    if nsteps == 0:
        return np.array(x, copy=True)
    buf_a = np.empty(max(size, 1), dtype=np.complex128)
    buf_b = np.empty(max(size, 1), dtype=np.complex128)
    cdef double complex[::1] a = buf_a
    cdef double complex[::1] bb = buf_b
    cdef double complex* src = &a[0]
    cdef double complex* dst = &bb[0]
    cdef double complex* tmp
    cdef Py_ssize_t s, k, ci, tf, tt
    cdef Py_ssize_t cur = n_out - 2 * nsteps
    cdef Py_ssize_t start = b * ipow(d, cur)
    cdef const double complex[::1] xf = np.asarray(x).reshape(-1)
    with nogil:
        for k in range(start):
            src[k] = xf[k]
        s = nsteps - 1
        while s >= 0:
            ci = st[s, 0]
            tf = st[s, 1]
            tt = st[s, 2]
            _insert(src, dst, b * ipow(d, ci - 1), d * d,
                    ipow(d, cur - ci + 1), &c_conj[0])
            tmp = src
            src = dst
            dst = tmp
            cur += 2
            for k in range(tf, tt):
                _two_site(src, dst, b * ipow(d, k - 1), d * d,
                          ipow(d, cur - k - 1), &t_adj[0, 0])
                tmp = src
                src = dst
                dst = tmp
            s -= 1
    res = buf_a if src == &a[0] else buf_b
    return res[:size].reshape(b, ipow(d, n_out)).copy()
