"""Batch kernels with a compiled core and a pure numpy fallback.

The backend is picked once at import time: the Cython extension when it
built successfully, the numpy fallback otherwise. Set CJSR_KERNELS to
"fallback" (or "numpy") to force the fallback, or to "compiled" to insist
on the extension (raising if it is unavailable).

Symmetric matrices are parametrized everywhere by their row-major upper
triangle: entry k of the parameter vector corresponds to the index pair
sym_pairs(n)[k], and the matching basis matrix is e_a e_b^T + e_b e_a^T
off the diagonal, e_a e_a^T on it. Both backends hard-code this order.
"""

import os

import numpy as np

from . import _fallback


def load_backend(name):
    """Return the kernel module for an explicit backend name."""
    if name in ("fallback", "numpy"):
        return _fallback
    if name == "compiled":
        from . import _core

        return _core
    raise ValueError(f"unknown kernel backend {name!r}")


def _select():
    forced = os.environ.get("CJSR_KERNELS", "").strip().lower()
    if forced:
        return load_backend(forced)
    try:
        from . import _core

        return _core
    except ImportError:
        return _fallback


_impl = _select()

BACKEND = _impl.BACKEND
chain_products = _impl.chain_products
chain_apply = _impl.chain_apply
sym_min_eig_batch = _impl.sym_min_eig_batch
norm_sq_batch = _impl.norm_sq_batch
constraint_min_eigs = _impl.constraint_min_eigs
constraint_logdet = _impl.constraint_logdet
constraint_newton = _impl.constraint_newton


def sym_pairs(n):
    """Index pairs of the symmetric parametrization, row-major upper triangle."""
    return [(a, b) for a in range(n) for b in range(a, n)]


def sym_basis(n):
    """Basis matrices matching sym_pairs; shape (n*(n+1)//2, n, n)."""
    pairs = sym_pairs(n)
    basis = np.zeros((len(pairs), n, n))
    for k, (a, b) in enumerate(pairs):
        basis[k, a, b] = 1.0
        basis[k, b, a] = 1.0
        if a == b:
            basis[k, a, a] = 1.0
    return basis


def sym_to_vec(mats, n):
    """Stack the upper-triangle parameters of a batch of symmetric matrices."""
    pairs = sym_pairs(n)
    mats = np.asarray(mats)
    return np.stack([mats[..., a, b] for a, b in pairs], axis=-1)


def vec_to_sym(vec, n):
    """Inverse of sym_to_vec; returns a batch of exactly symmetric matrices."""
    vec = np.asarray(vec)
    out = np.zeros(vec.shape[:-1] + (n, n))
    for k, (a, b) in enumerate(sym_pairs(n)):
        out[..., a, b] = vec[..., k]
        out[..., b, a] = vec[..., k]
    return out
