"""Finite-horizon growth measurements and the cycle lower bound.

rho_t scans every admissible length-t product and reports the largest
norm, normalized to a per-step rate. Cycles give certified lower bounds:
the spectral radius of the product around any closed walk, taken to the
1/length power, never exceeds the joint growth rate. rho_t itself is a
diagnostic quantity; certified upper bounds come from the feasibility
programs, not from here.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .automaton import DEFAULT_PATH_CAP, Path, count_paths, iter_path_blocks
from .errors import ExplosionGuard
from .numerics import spectral_radius_batch
from .system import as_switched_system


def _scan_max(system, t, cap, score):
    """Max of score(products) over all length-t paths, with best index row."""
    aut = system.automaton
    arr = aut._edge_arr
    mats = system._mat_stack
    best = -np.inf
    best_row = None
    for idx, _, _ in iter_path_blocks(aut, t, cap=cap):
        prods = K.chain_products(mats, arr[idx, 2] - 1)
        vals = score(prods)
        k = int(np.argmax(vals))
        if vals[k] > best:
            best = float(vals[k])
            best_row = idx[k].copy()
    return best, best_row


def _path_from_row(automaton, row):
    return Path(tuple(automaton.edges[int(e)] for e in row))


def rho_t(system_or_lift, t, cap=DEFAULT_PATH_CAP):
    """Largest spectral norm over admissible length-t products, ^(1/t)."""
    if t < 1:
        raise ValueError("t must be >= 1")
    sys = as_switched_system(system_or_lift)
    best, _ = _scan_max(sys, t, cap, K.norm_sq_batch)
    return float(best) ** (0.5 / t)


def rho_t_witness(system_or_lift, t, cap=DEFAULT_PATH_CAP):
    """(value, path) where path attains the rho_t maximum.

    Ties resolve to the first path in enumeration order (start node,
    then lexicographic by edge index).
    """
    if t < 1:
        raise ValueError("t must be >= 1")
    sys = as_switched_system(system_or_lift)
    best, row = _scan_max(sys, t, cap, K.norm_sq_batch)
    return float(best) ** (0.5 / t), _path_from_row(sys.automaton, row)


def cycle_lower_bound(system_or_lift, max_len=None, cap=DEFAULT_PATH_CAP):
    """Best certified lower bound from closed walks up to max_len.

    Returns (value, witness) with value = max rho(A_c)^(1/len(c)) over
    closed walks c, or (0.0, None) if no closed walk exists within
    max_len. Ties resolve to the shortest, then enumeration-first walk.
    max_len defaults to twice the node count.
    """
    sys = as_switched_system(system_or_lift)
    aut = sys.automaton
    arr = aut._edge_arr
    mats = sys._mat_stack
    if max_len is None:
        max_len = 2 * aut.num_nodes
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    total = sum(count_paths(aut, t) for t in range(1, max_len + 1))
    if total > cap:
        raise ExplosionGuard(total, cap)

    best = 0.0
    best_row = None
    best_len = 0
    for t in range(1, max_len + 1):
        for idx, starts, ends in iter_path_blocks(aut, t, cap=cap):
            closed = starts == ends
            if not np.any(closed):
                continue
            rows = idx[closed]
            prods = K.chain_products(mats, arr[rows, 2] - 1)
            vals = spectral_radius_batch(prods) ** (1.0 / t)
            k = int(np.argmax(vals))
            if vals[k] > best:
                best = float(vals[k])
                best_row = rows[k].copy()
                best_len = t
    if best_row is None:
        return 0.0, None
    return best, _path_from_row(aut, best_row)


def extremal_norm_eval(system, node, x, gamma, horizon, cap=DEFAULT_PATH_CAP):
    """Evaluate max over k <= horizon, length-k paths p from node of
    |A_p x| / gamma^k (the k = 0 term being |x|).

    For gamma above the joint growth rate this converges to the extremal
    norm at node as horizon grows; at finite horizon it is a lower
    approximation, monotone in horizon.
    """
    sys = as_switched_system(system)
    aut = sys.automaton
    if not 1 <= node <= aut.num_nodes:
        raise ValueError(f"node {node} out of range 1..{aut.num_nodes}")
    if gamma <= 0.0:
        raise ValueError("gamma must be positive")
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    vec = np.asarray(x, dtype=np.float64).reshape(-1)
    if vec.shape != (sys.dim,):
        raise ValueError(f"x must have {sys.dim} entries")
    total = sum(count_paths(aut, k, start=node) for k in range(1, horizon + 1))
    if total > cap:
        raise ExplosionGuard(total, cap)

    arr = aut._edge_arr
    mats = sys._mat_stack
    best = float(np.linalg.norm(vec))
    for k in range(1, horizon + 1):
        scale = gamma ** (-k)
        for idx, _, _ in iter_path_blocks(aut, k, start=node, cap=cap):
            out = K.chain_apply(mats, arr[idx, 2] - 1, vec)
            best = max(best, scale * float(np.linalg.norm(out, axis=1).max()))
    return best


@dataclass(frozen=True)
class GrowthBounds:
    """Diagnostic growth table plus the certified cycle lower bound."""

    rho_t_table: dict
    cycle_lower: float
    cycle_witness: object
    upper_from_rho: float


def growth_bounds(system_or_lift, t_max, cycle_max_len=None, cap=DEFAULT_PATH_CAP):
    """Tabulate rho_t for t = 1..t_max and the cycle lower bound.

    upper_from_rho is the smallest table entry, an upper envelope only
    in the large-t limit; it is reported for diagnostics and is never a
    certified upper bound at finite t.
    """
    if t_max < 1:
        raise ValueError("t_max must be >= 1")
    sys = as_switched_system(system_or_lift)
    table = {t: rho_t(sys, t, cap=cap) for t in range(1, t_max + 1)}
    lower, witness = cycle_lower_bound(sys, max_len=cycle_max_len, cap=cap)
    return GrowthBounds(
        rho_t_table=table,
        cycle_lower=lower,
        cycle_witness=witness,
        upper_from_rho=min(table.values()),
    )
