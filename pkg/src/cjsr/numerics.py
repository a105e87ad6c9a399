"""Dense kernels on small matrices: extremal eigenvalues, norms, PD inverses."""

import numpy as np

from .errors import DimensionMismatch, NotPositiveDefinite


def as_matrix(a):
    """Validated float64 copy of a finite matrix."""
    arr = np.array(a, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionMismatch(f"expected a matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DimensionMismatch("matrix has non-finite entries")
    return arr


def as_sym(a):
    """Exactly symmetric copy: the upper triangle mirrored onto the lower."""
    arr = as_matrix(a)
    if arr.shape[0] != arr.shape[1]:
        raise DimensionMismatch(f"expected square, got shape {arr.shape}")
    return np.triu(arr) + np.triu(arr, 1).T


def sym_eig_min(s):
    """Smallest eigenvalue of a symmetric matrix."""
    s = as_sym(s)
    return float(np.linalg.eigvalsh(s)[0])


def is_pd(s, margin=0.0):
    """True iff the smallest eigenvalue exceeds margin.

    At margin 0 a Cholesky attempt decides fast; a failure falls back to
    the eigenvalue to behave consistently near the boundary.
    """
    s = as_sym(s)
    if margin == 0.0:
        try:
            np.linalg.cholesky(s)
            return True
        except np.linalg.LinAlgError:
            pass
    return float(np.linalg.eigvalsh(s)[0]) > margin


def spectral_norm(a):
    """Largest singular value; a may be rectangular."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise DimensionMismatch(f"expected a matrix, got shape {a.shape}")
    return float(np.linalg.norm(a, 2))


def _radius_2x2(a):
    tr = a[0, 0] + a[1, 1]
    det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    disc = tr * tr - 4.0 * det
    if disc >= 0.0:
        root = np.sqrt(disc)
        return max(abs(tr + root), abs(tr - root)) / 2.0
    # complex pair; both eigenvalues have modulus sqrt(det)
    return float(np.sqrt(det))


def spectral_radius(a):
    """Largest eigenvalue modulus. Closed form for n <= 2."""
    a = as_matrix(a)
    n = a.shape[0]
    if a.shape[1] != n:
        raise DimensionMismatch(f"expected square, got shape {a.shape}")
    if n == 1:
        return float(abs(a[0, 0]))
    if n == 2:
        return float(_radius_2x2(a))
    return float(np.max(np.abs(np.linalg.eigvals(a))))


def spectral_radius_batch(mats):
    """spectral_radius over a stacked batch; vectorized for n == 2."""
    mats = np.asarray(mats, dtype=np.float64)
    if mats.shape[0] == 0:
        return np.zeros(0)
    n = mats.shape[1]
    if n == 1:
        return np.abs(mats[:, 0, 0])
    if n == 2:
        tr = mats[:, 0, 0] + mats[:, 1, 1]
        det = mats[:, 0, 0] * mats[:, 1, 1] - mats[:, 0, 1] * mats[:, 1, 0]
        disc = tr * tr - 4.0 * det
        real = disc >= 0.0
        root = np.sqrt(np.where(real, disc, 0.0))
        real_r = np.maximum(np.abs(tr + root), np.abs(tr - root)) / 2.0
        cplx_r = np.sqrt(np.where(real, 1.0, det))
        return np.where(real, real_r, cplx_r)
    return np.array([np.max(np.abs(np.linalg.eigvals(m))) for m in mats])


def inverse_pd(q):
    """Inverse of a positive definite matrix, symmetric by construction.

    One step of Newton refinement is applied when the residual Q R - I is
    above 1e-8 * n in Frobenius norm; raises NotPositiveDefinite when Q is
    not positive definite.
    """
    q = as_sym(q)
    try:
        np.linalg.cholesky(q)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite("matrix is not positive definite") from None
    n = q.shape[0]
    r = np.linalg.inv(q)
    r = 0.5 * (r + r.T)
    eye = np.eye(n)
    for _ in range(2):
        if np.linalg.norm(q @ r - eye) <= 1e-8 * n:
            break
        r = r @ (2.0 * eye - q @ r)
        r = 0.5 * (r + r.T)
    return r
