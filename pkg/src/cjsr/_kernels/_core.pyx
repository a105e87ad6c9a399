# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled batch kernels.

Semantics mirror the numpy reference backend (_fallback) exactly; see its
docstrings for shapes and conventions. Dense small-matrix primitives are
hand-rolled: Cholesky for positive definiteness and log-dets, cyclic
Jacobi for symmetric eigenvalues, and closed-form trace identities for
the barrier gradient and Hessian entries.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, log, sqrt
from libc.stdlib cimport free, malloc

cnp.import_array()

BACKEND = "compiled"


# ---------------------------------------------------------------- plumbing

cdef int _cholesky(double* src, double* l, int n) noexcept nogil:
    """Lower Cholesky of src into l; 0 on success, 1 if not PD."""
    cdef int i, j, k
    cdef double acc
    for i in range(n * n):
        l[i] = src[i]
    for j in range(n):
        acc = l[j * n + j]
        for k in range(j):
            acc -= l[j * n + k] * l[j * n + k]
        if acc <= 0.0 or acc != acc:
            return 1
        l[j * n + j] = sqrt(acc)
        for i in range(j + 1, n):
            acc = l[i * n + j]
            for k in range(j):
                acc -= l[i * n + k] * l[j * n + k]
            l[i * n + j] = acc / l[j * n + j]
    for i in range(n):
        for j in range(i + 1, n):
            l[i * n + j] = 0.0
    return 0


cdef void _chol_inverse(double* l, double* w, double* scratch, int n) noexcept nogil:
    """w = inverse from the lower Cholesky factor l, symmetrized."""
    cdef int col, i, k
    cdef double acc
    # forward: L y = e_col, stored in scratch column-wise
    for col in range(n):
        for i in range(n):
            acc = 1.0 if i == col else 0.0
            for k in range(i):
                acc -= l[i * n + k] * scratch[k * n + col]
            scratch[i * n + col] = acc / l[i * n + i]
    # backward: L^T w = y
    for col in range(n):
        for i in range(n - 1, -1, -1):
            acc = scratch[i * n + col]
            for k in range(i + 1, n):
                acc -= l[k * n + i] * w[k * n + col]
            w[i * n + col] = acc / l[i * n + i]
    for i in range(n):
        for k in range(i + 1, n):
            acc = 0.5 * (w[i * n + k] + w[k * n + i])
            w[i * n + k] = acc
            w[k * n + i] = acc


cdef void _jacobi_eigs(double* a, double* ev, int n) noexcept nogil:
    """Eigenvalues of the symmetric matrix a (destroyed) by cyclic Jacobi."""
    cdef int p, q, i, sweep
    cdef double off, scale, apq, app, aqq, theta, t, c, s, tau, aip, aiq
    if n == 1:
        ev[0] = a[0]
        return
    for sweep in range(60):
        off = 0.0
        scale = 1.0
        for p in range(n):
            scale += fabs(a[p * n + p])
            for q in range(p + 1, n):
                off += a[p * n + q] * a[p * n + q]
        if off <= 1e-28 * scale * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p * n + q]
                if fabs(apq) <= 1e-300:
                    continue
                app = a[p * n + p]
                aqq = a[q * n + q]
                theta = 0.5 * (aqq - app) / apq
                if theta >= 0.0:
                    t = 1.0 / (theta + sqrt(theta * theta + 1.0))
                else:
                    t = -1.0 / (-theta + sqrt(theta * theta + 1.0))
                c = 1.0 / sqrt(t * t + 1.0)
                s = t * c
                tau = s / (1.0 + c)
                a[p * n + p] = app - t * apq
                a[q * n + q] = aqq + t * apq
                a[p * n + q] = 0.0
                a[q * n + p] = 0.0
                for i in range(n):
                    if i == p or i == q:
                        continue
                    aip = a[i * n + p]
                    aiq = a[i * n + q]
                    a[i * n + p] = aip - s * (aiq + tau * aip)
                    a[p * n + i] = a[i * n + p]
                    a[i * n + q] = aiq + s * (aip - tau * aiq)
                    a[q * n + i] = a[i * n + q]
    for i in range(n):
        ev[i] = a[i * n + i]


cdef void _matmul(double* out, double* x, double* y, int n) noexcept nogil:
    """out = x @ y, all n*n row-major; out must not alias x or y."""
    cdef int i, j, k
    cdef double acc
    for i in range(n):
        for j in range(n):
            acc = 0.0
            for k in range(n):
                acc += x[i * n + k] * y[k * n + j]
            out[i * n + j] = acc


cdef void _block(double gamma2, double* qi, double* qj, double* a,
                 double s, double* tmp, double* out, int n) noexcept nogil:
    """out = sym(gamma2*qi - a^T qj a - s*I); tmp is n*n scratch."""
    cdef int i, j, k
    cdef double acc
    for i in range(n):
        for j in range(n):
            acc = 0.0
            for k in range(n):
                acc += qj[i * n + k] * a[k * n + j]
            tmp[i * n + j] = acc
    for i in range(n):
        for j in range(n):
            acc = 0.0
            for k in range(n):
                acc += a[k * n + i] * tmp[k * n + j]
            out[i * n + j] = gamma2 * qi[i * n + j] - acc
        out[i * n + i] -= s
    for i in range(n):
        for j in range(i + 1, n):
            acc = 0.5 * (out[i * n + j] + out[j * n + i])
            out[i * n + j] = acc
            out[j * n + i] = acc


cdef inline double _tr_basis(double* x, int a, int b, int n) noexcept nogil:
    """tr(E_ab x) for the symmetric basis, x symmetric."""
    if a == b:
        return x[a * n + a]
    return 2.0 * x[a * n + b]


cdef inline double _pair_trace(double* x, int a, int b, int c, int d,
                               int n) noexcept nogil:
    """tr(E_ab x E_cd x) for symmetric x."""
    if a == b and c == d:
        return x[a * n + c] * x[a * n + c]
    if a == b:
        return 2.0 * x[a * n + c] * x[a * n + d]
    if c == d:
        return 2.0 * x[a * n + c] * x[b * n + c]
    return 2.0 * (x[a * n + c] * x[b * n + d] + x[a * n + d] * x[b * n + c])


cdef inline double _cross_trace(double* bm, int a, int b, int c, int d,
                                int n) noexcept nogil:
    """tr(E_ab B^T E_cd B) for any B."""
    cdef double x
    if c == d:
        x = bm[c * n + a] * bm[c * n + b]
    else:
        x = bm[c * n + a] * bm[d * n + b] + bm[d * n + a] * bm[c * n + b]
    if a == b:
        return x
    return 2.0 * x


# ------------------------------------------------------------ public kernels

def chain_products(mats, idx):
    """Time-ordered matrix products along index rows; see reference backend."""
    cdef double[:, :, ::1] m = np.ascontiguousarray(mats, dtype=np.float64)
    cdef long long[:, ::1] ix = np.ascontiguousarray(idx, dtype=np.int64)
    cdef int pcount = ix.shape[0], steps = ix.shape[1], n = m.shape[1]
    out_arr = np.empty((pcount, n, n), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef double* tmp = <double*> malloc(n * n * sizeof(double))
    if tmp == NULL:
        raise MemoryError()
    cdef int p, k, i
    try:
        with nogil:
            for p in range(pcount):
                for i in range(n * n):
                    (&out[p, 0, 0])[i] = (&m[ix[p, 0], 0, 0])[i]
                for k in range(1, steps):
                    _matmul(tmp, &m[ix[p, k], 0, 0], &out[p, 0, 0], n)
                    for i in range(n * n):
                        (&out[p, 0, 0])[i] = tmp[i]
    finally:
        free(tmp)
    return out_arr


def chain_apply(mats, idx, x):
    """Apply the time-ordered product of each index row to the vector x."""
    cdef double[:, :, ::1] m = np.ascontiguousarray(mats, dtype=np.float64)
    cdef long long[:, ::1] ix = np.ascontiguousarray(idx, dtype=np.int64)
    cdef double[::1] x0 = np.ascontiguousarray(x, dtype=np.float64)
    cdef int pcount = ix.shape[0], steps = ix.shape[1], n = m.shape[1]
    out_arr = np.empty((pcount, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double* tmp = <double*> malloc(n * sizeof(double))
    if tmp == NULL:
        raise MemoryError()
    cdef int p, k, i, j
    cdef double acc
    try:
        with nogil:
            for p in range(pcount):
                for i in range(n):
                    out[p, i] = x0[i]
                for k in range(steps):
                    for i in range(n):
                        acc = 0.0
                        for j in range(n):
                            acc += m[ix[p, k], i, j] * out[p, j]
                        tmp[i] = acc
                    for i in range(n):
                        out[p, i] = tmp[i]
    finally:
        free(tmp)
    return out_arr


def sym_min_eig_batch(s):
    """Smallest eigenvalue per symmetric matrix in the batch."""
    cdef double[:, :, ::1] sm = np.ascontiguousarray(s, dtype=np.float64)
    cdef int count = sm.shape[0], n = sm.shape[1]
    out_arr = np.empty(count, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double* work = <double*> malloc((n * n + n) * sizeof(double))
    if work == NULL:
        raise MemoryError()
    cdef double* ev = work + n * n
    cdef int c, i
    cdef double best
    try:
        with nogil:
            for c in range(count):
                for i in range(n * n):
                    work[i] = (&sm[c, 0, 0])[i]
                _jacobi_eigs(work, ev, n)
                best = ev[0]
                for i in range(1, n):
                    if ev[i] < best:
                        best = ev[i]
                out[c] = best
    finally:
        free(work)
    return out_arr


def norm_sq_batch(a):
    """Squared spectral norm per matrix (largest eigenvalue of a^T a)."""
    cdef double[:, :, ::1] am = np.ascontiguousarray(a, dtype=np.float64)
    cdef int count = am.shape[0], n = am.shape[1]
    out_arr = np.empty(count, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double* work = <double*> malloc((2 * n * n + n) * sizeof(double))
    if work == NULL:
        raise MemoryError()
    cdef double* gram = work
    cdef double* scratch = work + n * n
    cdef double* ev = work + 2 * n * n
    cdef int c, i, j, k
    cdef double acc, best
    try:
        with nogil:
            for c in range(count):
                for i in range(n):
                    for j in range(n):
                        acc = 0.0
                        for k in range(n):
                            acc += am[c, k, i] * am[c, k, j]
                        gram[i * n + j] = acc
                _jacobi_eigs(gram, ev, n)
                best = ev[0]
                for i in range(1, n):
                    if ev[i] > best:
                        best = ev[i]
                out[c] = best
    finally:
        free(work)
    return out_arr


def constraint_min_eigs(gamma2, q, ii, jj, a):
    """Smallest eigenvalue of gamma2*Q_i - A^T Q_j A per constraint row."""
    cdef double g2 = gamma2
    cdef double[:, :, ::1] qm = np.ascontiguousarray(q, dtype=np.float64)
    cdef double[:, :, ::1] am = np.ascontiguousarray(a, dtype=np.float64)
    cdef long long[::1] iv = np.ascontiguousarray(ii, dtype=np.int64)
    cdef long long[::1] jv = np.ascontiguousarray(jj, dtype=np.int64)
    cdef int count = am.shape[0], n = am.shape[1]
    out_arr = np.empty(count, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double* work = <double*> malloc((2 * n * n + n) * sizeof(double))
    if work == NULL:
        raise MemoryError()
    cdef double* blk = work
    cdef double* tmp = work + n * n
    cdef double* ev = work + 2 * n * n
    cdef int c, i
    cdef double best
    try:
        with nogil:
            for c in range(count):
                _block(g2, &qm[iv[c], 0, 0], &qm[jv[c], 0, 0], &am[c, 0, 0],
                       0.0, tmp, blk, n)
                _jacobi_eigs(blk, ev, n)
                best = ev[0]
                for i in range(1, n):
                    if ev[i] < best:
                        best = ev[i]
                out[c] = best
    finally:
        free(work)
    return out_arr


def constraint_logdet(gamma2, q, ii, jj, a, s):
    """(ok, sum log det) of the slack-shifted constraint blocks."""
    cdef double g2 = gamma2, sv = s
    cdef double[:, :, ::1] qm = np.ascontiguousarray(q, dtype=np.float64)
    cdef double[:, :, ::1] am = np.ascontiguousarray(a, dtype=np.float64)
    cdef long long[::1] iv = np.ascontiguousarray(ii, dtype=np.int64)
    cdef long long[::1] jv = np.ascontiguousarray(jj, dtype=np.int64)
    cdef int count = am.shape[0], n = am.shape[1]
    cdef double* work = <double*> malloc(3 * n * n * sizeof(double))
    if work == NULL:
        raise MemoryError()
    cdef double* blk = work
    cdef double* tmp = work + n * n
    cdef double* lf = work + 2 * n * n
    cdef int c, i, bad = 0
    cdef double total = 0.0
    try:
        with nogil:
            for c in range(count):
                _block(g2, &qm[iv[c], 0, 0], &qm[jv[c], 0, 0], &am[c, 0, 0],
                       sv, tmp, blk, n)
                if _cholesky(blk, lf, n):
                    bad = 1
                    break
                for i in range(n):
                    total += 2.0 * log(lf[i * n + i])
    finally:
        free(work)
    if bad:
        return False, 0.0
    return True, total


def constraint_newton(gamma2, q, ii, jj, a, te, e, s, grad, hess):
    """Accumulate barrier gradient and Hessian of the constraint blocks.

    Same contract as the reference backend; te and e are accepted for
    signature compatibility but the trace identities are evaluated in
    closed form instead.
    """
    cdef double g2 = gamma2, sv = s
    cdef double g4 = g2 * g2
    cdef double[:, :, ::1] qm = np.ascontiguousarray(q, dtype=np.float64)
    cdef double[:, :, ::1] am = np.ascontiguousarray(a, dtype=np.float64)
    cdef long long[::1] iv = np.ascontiguousarray(ii, dtype=np.int64)
    cdef long long[::1] jv = np.ascontiguousarray(jj, dtype=np.int64)
    cdef double[::1] gv = grad
    cdef double[:, ::1] hm = hess
    cdef int count = am.shape[0], n = am.shape[1]
    cdef int m = n * (n + 1) // 2
    cdef int dim = gv.shape[0]
    # pair tables for the row-major upper-triangle basis order
    pa_arr = np.empty(m, dtype=np.int64)
    pb_arr = np.empty(m, dtype=np.int64)
    cdef long long[::1] pa = pa_arr
    cdef long long[::1] pb = pb_arr
    cdef int k = 0, aa, bb
    for aa in range(n):
        for bb in range(aa, n):
            pa[k] = aa
            pb[k] = bb
            k += 1
    cdef double* work = <double*> malloc(8 * n * n * sizeof(double))
    if work == NULL:
        raise MemoryError()
    cdef double* blk = work
    cdef double* tmp = work + n * n
    cdef double* lf = work + 2 * n * n
    cdef double* w = work + 3 * n * n
    cdef double* bm = work + 4 * n * n      # B = A W
    cdef double* pm = work + 5 * n * n      # P = A W A^T
    cdef double* w2 = work + 6 * n * n      # W W
    cdef double* gm = work + 7 * n * n      # G = B B^T
    cdef int c, i, j, l, bi, bj
    cdef double acc, trw, his, hjs
    cdef int bad = 0
    try:
        with nogil:
            for c in range(count):
                _block(g2, &qm[iv[c], 0, 0], &qm[jv[c], 0, 0], &am[c, 0, 0],
                       sv, tmp, blk, n)
                if _cholesky(blk, lf, n):
                    bad = 1
                    break
                _chol_inverse(lf, w, tmp, n)
                # B = A W, P = B A^T, W2 = W W, G = B B^T
                _matmul(bm, &am[c, 0, 0], w, n)
                for i in range(n):
                    for j in range(n):
                        acc = 0.0
                        for l in range(n):
                            acc += bm[i * n + l] * am[c, j, l]
                        pm[i * n + j] = acc
                _matmul(w2, w, w, n)
                for i in range(n):
                    for j in range(n):
                        acc = 0.0
                        for l in range(n):
                            acc += bm[i * n + l] * bm[j * n + l]
                        gm[i * n + j] = acc
                bi = <int> iv[c] * m
                bj = <int> jv[c] * m
                trw = 0.0
                for i in range(n):
                    trw += w[i * n + i]
                gv[dim - 1] += trw
                for k in range(m):
                    gv[bi + k] -= g2 * _tr_basis(w, <int> pa[k], <int> pb[k], n)
                    gv[bj + k] += _tr_basis(pm, <int> pa[k], <int> pb[k], n)
                    his = -g2 * _tr_basis(w2, <int> pa[k], <int> pb[k], n)
                    hjs = _tr_basis(gm, <int> pa[k], <int> pb[k], n)
                    hm[bi + k, dim - 1] += his
                    hm[dim - 1, bi + k] += his
                    hm[bj + k, dim - 1] += hjs
                    hm[dim - 1, bj + k] += hjs
                    for l in range(m):
                        hm[bi + k, bi + l] += g4 * _pair_trace(
                            w, <int> pa[k], <int> pb[k], <int> pa[l], <int> pb[l], n)
                        hm[bj + k, bj + l] += _pair_trace(
                            pm, <int> pa[k], <int> pb[k], <int> pa[l], <int> pb[l], n)
                        acc = -g2 * _cross_trace(
                            bm, <int> pa[k], <int> pb[k], <int> pa[l], <int> pb[l], n)
                        hm[bi + k, bj + l] += acc
                        hm[bj + l, bi + k] += acc
                acc = 0.0
                for i in range(n * n):
                    acc += w[i] * w[i]
                hm[dim - 1, dim - 1] += acc
    finally:
        free(work)
    return not bad
