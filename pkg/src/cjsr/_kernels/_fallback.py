"""Pure numpy implementation of the batch kernels.

Reference backend: every function here defines the semantics that the
compiled backend must reproduce. Shapes use P for a batch of paths, C for
a batch of constraints, K for a batch of quadratic forms, n for the state
dimension and m = n*(n+1)//2 for the number of free entries of a symmetric
matrix (row-major upper triangle, see kernel package docstring).
"""

import numpy as np

BACKEND = "numpy"


def chain_products(mats, idx):
    """Time-ordered matrix products along index rows.

    out[p] = mats[idx[p, L-1]] @ ... @ mats[idx[p, 0]]
    """
    mats = np.asarray(mats, dtype=np.float64)
    idx = np.asarray(idx)
    out = mats[idx[:, 0]].copy()
    for k in range(1, idx.shape[1]):
        out = mats[idx[:, k]] @ out
    return out


def chain_apply(mats, idx, x):
    """Apply the time-ordered product of each index row to the vector x."""
    mats = np.asarray(mats, dtype=np.float64)
    idx = np.asarray(idx)
    x = np.asarray(x, dtype=np.float64)
    v = np.broadcast_to(x, (idx.shape[0], x.shape[0])).copy()
    for k in range(idx.shape[1]):
        v = np.einsum("pij,pj->pi", mats[idx[:, k]], v)
    return v


def sym_min_eig_batch(s):
    """Smallest eigenvalue per symmetric matrix in the batch."""
    s = np.asarray(s, dtype=np.float64)
    return np.linalg.eigvalsh(s)[:, 0]


def norm_sq_batch(a):
    """Squared spectral norm (largest eigenvalue of a^T a) per matrix."""
    a = np.asarray(a, dtype=np.float64)
    gram = np.einsum("pki,pkj->pij", a, a)
    return np.linalg.eigvalsh(gram)[:, -1]


def _blocks(gamma2, q, ii, jj, a, s):
    aqa = np.einsum("cki,ckl,clj->cij", a, q[jj], a)
    blk = gamma2 * q[ii] - aqa
    if s != 0.0:
        blk = blk - s * np.eye(q.shape[1])
    return 0.5 * (blk + blk.transpose(0, 2, 1))


def constraint_min_eigs(gamma2, q, ii, jj, a):
    """Smallest eigenvalue of gamma2*Q_i - A^T Q_j A per constraint row."""
    q = np.asarray(q, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    return np.linalg.eigvalsh(_blocks(gamma2, q, ii, jj, a, 0.0))[:, 0]


def constraint_logdet(gamma2, q, ii, jj, a, s):
    """(ok, sum of log det) over the slack-shifted constraint blocks.

    ok is False when any block gamma2*Q_i - A^T Q_j A - s*I fails a
    Cholesky factorization, in which case the returned sum is meaningless.
    """
    q = np.asarray(q, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    blk = _blocks(gamma2, q, ii, jj, a, s)
    try:
        chol = np.linalg.cholesky(blk)
    except np.linalg.LinAlgError:
        return False, 0.0
    diag = np.einsum("cii->ci", chol)
    if np.any(diag <= 0.0):
        return False, 0.0
    return True, float(2.0 * np.log(diag).sum())


def _scatter_add_2d(hess, rows, cols, vals):
    d = hess.shape[0]
    lin = (rows * d + cols).ravel()
    flat = np.bincount(lin, weights=vals.ravel(), minlength=d * d)
    hess += flat.reshape(d, d)


def constraint_newton(gamma2, q, ii, jj, a, te, e, s, grad, hess):
    """Accumulate barrier gradient and Hessian of the constraint blocks.

    Adds the derivatives of -sum_c log det(gamma2*Q_i - A_c^T Q_j A_c - s*I)
    with respect to (vech Q_1, ..., vech Q_K, s) into grad (length K*m+1)
    and hess (square of the same size). te[c, k] must hold A_c^T E_k A_c
    for the symmetric basis e. Returns False (with no guarantee about the
    partial sums) when some block is not positive definite.
    """
    q = np.asarray(q, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    m, n = e.shape[0], e.shape[1]
    blk = _blocks(gamma2, q, ii, jj, a, s)
    try:
        chol = np.linalg.cholesky(blk)
    except np.linalg.LinAlgError:
        return False
    if np.any(np.einsum("cii->ci", chol) <= 0.0):
        return False
    w = np.linalg.inv(blk)
    w = 0.5 * (w + w.transpose(0, 2, 1))
    p = np.einsum("cik,ckl,cjl->cij", a, w, a)

    d = grad.shape[0]
    cols = np.arange(m)
    rows_i = ii[:, None] * m + cols[None, :]
    rows_j = jj[:, None] * m + cols[None, :]

    trwe = np.einsum("cij,kij->ck", w, e)
    trwt = np.einsum("cij,kij->ck", p, e)
    trw = np.einsum("cii->c", w)
    grad += np.bincount(rows_i.ravel(), weights=(-gamma2 * trwe).ravel(), minlength=d)
    grad += np.bincount(rows_j.ravel(), weights=trwt.ravel(), minlength=d)
    grad[-1] += trw.sum()

    we = np.einsum("cij,kjl->ckil", w, e)
    wt = np.einsum("cij,ckjl->ckil", w, te)
    h_ii = (gamma2 * gamma2) * np.einsum("ckij,clji->ckl", we, we)
    h_ij = -gamma2 * np.einsum("ckij,clji->ckl", we, wt)
    h_jj = np.einsum("ckij,clji->ckl", wt, wt)
    h_is = -gamma2 * np.einsum("ckij,cji->ck", we, w)
    h_js = np.einsum("ckij,cji->ck", wt, w)
    h_ss = np.einsum("cij,cji->c", w, w)

    _scatter_add_2d(hess, rows_i[:, :, None], rows_i[:, None, :], h_ii)
    _scatter_add_2d(hess, rows_i[:, :, None], rows_j[:, None, :], h_ij)
    _scatter_add_2d(hess, rows_j[:, :, None], rows_i[:, None, :], h_ij.transpose(0, 2, 1))
    _scatter_add_2d(hess, rows_j[:, :, None], rows_j[:, None, :], h_jj)
    last = np.full_like(rows_i, d - 1)
    _scatter_add_2d(hess, rows_i, last, h_is)
    _scatter_add_2d(hess, last, rows_i, h_is)
    _scatter_add_2d(hess, rows_j, last, h_js)
    _scatter_add_2d(hess, last, rows_j, h_js)
    hess[-1, -1] += h_ss.sum()
    return True
