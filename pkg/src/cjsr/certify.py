"""Certified bounds on the constrained joint growth rate.

Upper bounds come from feasible contraction programs: a verified
certificate at rate gamma proves every admissible trajectory is bounded
by C * gamma^t. Bisection squeezes gamma against the best certified
lower bound from cycles. Lifting to length-T blocks tightens the
guarantee to within a factor n^(1/(2T)) of the true rate, at the price
of one constraint per length-T path; path-indexed programs with memory
T-1 are always at least as tight and can be built directly from a lift
certificate in closed form.
"""

import math
import time
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .automaton import DEFAULT_PATH_CAP, count_paths
from .errors import InitFailure, VerificationFailure
from .growth import cycle_lower_bound
from .lmi import (
    FeasibilityStatus,
    MultinormCertificate,
    PathDepCertificate,
    SolverOptions,
    _multinorm_arrays,
    _pathdep_program,
    check_multinorm,
    check_pathdep,
    solve_multinorm,
    solve_pathdep,
)
from .numerics import inverse_pd
from .system import as_switched_system, lift

_GAMMA_FLOOR = 1e-12
_MAX_BISECT_STEPS = 200
_RETRY_BUMP = 1e-6


@dataclass(frozen=True, eq=False)
class BisectionResult:
    """Bracket [gamma_not_proven, gamma_feasible] with a certificate on top.

    gamma_feasible is always certified: its certificate re-verified with
    positive slack. gamma_not_proven is the largest rate tried without a
    proof of feasibility (bracket bottom). gamma_infeasible is the
    largest rate the solver declared infeasible through its duality gap,
    or None; it is strictly weaker evidence than the certificate side.
    tol_bisect is the relative gap at termination.
    """

    gamma_feasible: float
    gamma_not_proven: float
    gamma_infeasible: object
    certificate: object
    tol_bisect: float
    bisection_steps: int
    newton_steps: int


@dataclass(frozen=True, eq=False)
class CjsrEstimate:
    """Two-sided bounds at one horizon, with the proving certificate."""

    method: str
    T: int
    upper: float
    lower: float
    guaranteed_eps: float
    gamma: float
    num_forms: int
    wall_time: float
    certificate: object


@dataclass(frozen=True, eq=False)
class Verdict:
    """Outcome of the stability decision: stable, unstable or undecided."""

    status: str
    cjsr_lower: float
    cjsr_upper: float
    witness: object
    estimate: object


_BRACKET_CYCLE_BUDGET = 200_000


def _budgeted_cycle_lower(sys, cap):
    """Cycle lower bound restricted to a cheap enumeration budget.

    Bracket initialization only needs some certified lower bound; on
    dense graphs (lifts in particular) the default cycle search depth
    can explode, so the depth backs off to whatever fits the budget.
    Zero (no cycle within reach) still yields a valid bracket.
    """
    aut = sys.automaton
    budget = min(cap, _BRACKET_CYCLE_BUDGET)
    total = 0
    max_len = 0
    for length in range(1, 2 * aut.num_nodes + 1):
        total += count_paths(aut, length)
        if total > budget:
            break
        max_len = length
    if max_len == 0:
        return 0.0
    lo, _ = cycle_lower_bound(sys, max_len=max_len, cap=cap)
    return lo


def _initial_bracket(system_or_lift, cap):
    """(cycle lower bound, certified-feasible upper gamma)."""
    sys = as_switched_system(system_or_lift)
    lo = _budgeted_cycle_lower(sys, cap)
    _, _, amats = _multinorm_arrays(system_or_lift)
    max_norm = math.sqrt(float(np.max(K.norm_sq_batch(amats))))
    hi = max(max_norm, 1e-9) * (1.0 + 1e-6)
    return lo, hi


def _run_bisection(lo, hi, cert_hi, solve_at, tol_bisect):
    gamma_inf = None
    cert = cert_hi
    steps = 0
    newton = 0
    while (
        steps < _MAX_BISECT_STEPS
        and (hi - lo) > tol_bisect * hi
        and hi > _GAMMA_FLOOR
    ):
        mid = 0.5 * (lo + hi)
        out = solve_at(mid)
        newton += out.iterations
        if out.status is FeasibilityStatus.FEASIBLE and out.certificate is not None:
            hi = mid
            cert = out.certificate
        else:
            if out.status is FeasibilityStatus.INFEASIBLE:
                gamma_inf = mid
            lo = mid
        steps += 1
    return BisectionResult(hi, lo, gamma_inf, cert, (hi - lo) / hi, steps, newton)


def gamma_star(system_or_lift, tol_bisect=1e-3, opts=None, cap=DEFAULT_PATH_CAP):
    """Bisect the smallest certified node-indexed contraction rate.

    The bracket starts at [cycle lower bound, max constraint norm]; the
    top is certified up front with identity forms (InitFailure if even
    that fails). The gap closes to relative width tol_bisect; solves
    that come back Unknown shrink the bracket from below, so
    gamma_upper stays certified throughout.
    """
    opts = opts or SolverOptions()
    sys = as_switched_system(system_or_lift)
    lo, hi = _initial_bracket(system_or_lift, cap)
    eye = np.eye(sys.dim)
    forms = tuple(eye.copy() for _ in range(sys.num_nodes))
    slack, normalization = check_multinorm(system_or_lift, hi, forms)
    if slack <= 0.0 or normalization <= 0.0:
        raise InitFailure(
            f"identity forms fail at gamma={hi!r} (slack {slack:.3e})"
        )
    cert_hi = MultinormCertificate(hi, forms, slack, normalization)

    def solve_at(g):
        return solve_multinorm(system_or_lift, g, opts=opts)

    return _run_bisection(lo, hi, cert_hi, solve_at, tol_bisect)


def gamma_star_pathdep(
    system, memory, tol_bisect=1e-3, opts=None, cap=DEFAULT_PATH_CAP
):
    """Bisect the smallest certified path-indexed contraction rate."""
    opts = opts or SolverOptions()
    lo, hi = _initial_bracket(system, cap)
    keys, _, _, _ = _pathdep_program(system, memory, cap)
    eye = np.eye(system.dim)
    forms = {k: eye.copy() for k in keys}
    probe = PathDepCertificate(hi, memory, forms, 0.0)
    slack = check_pathdep(system, probe, cap=cap)
    if slack <= 0.0:
        raise InitFailure(
            f"identity forms fail at gamma={hi!r} (slack {slack:.3e})"
        )
    cert_hi = PathDepCertificate(hi, memory, forms, slack)

    def solve_at(g):
        return solve_pathdep(system, memory, g, opts=opts, cap=cap)

    return _run_bisection(lo, hi, cert_hi, solve_at, tol_bisect)


def pathdep_from_lift(system, depth, certificate, cap=DEFAULT_PATH_CAP):
    """Convert a lift certificate into a path-indexed one, closed form.

    Given node forms Q_i contracting every length-depth product by
    gamma_lift, the form attached to (node, incoming path p) is the
    inverse of

        R = inv(Q_end) + sum_k P_k inv(Q_back(k)) P_k^T / g^(2k)

    where P_k is the product of the last k matrices along p, back(k)
    the node k steps before the end, and g = gamma_lift^(1/depth). The
    result contracts every single step by g. The constructed
    certificate is re-verified; on a nonpositive margin the rate is
    bumped once by a factor (1 + 1e-6) and re-checked, and a
    VerificationFailure is raised if that still does not verify.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    gamma_step = certificate.gamma ** (1.0 / depth)
    memory = depth - 1
    keys, _, _, _ = _pathdep_program(system, memory, cap)
    if depth == 1:
        forms = {k: np.asarray(certificate.forms[k[0] - 1]) for k in keys}
    else:
        r_base = [inverse_pd(q) for q in certificate.forms]
        forms = {}
        for node, edges in keys:
            nodes = [edges[0][0]] + [e[1] for e in edges]
            r = r_base[nodes[-1] - 1].copy()
            pi = np.eye(system.dim)
            for k in range(1, depth):
                pi = pi @ system.matrix(edges[depth - 1 - k][2])
                r += (
                    pi @ r_base[nodes[depth - 1 - k] - 1] @ pi.T
                ) / gamma_step ** (2 * k)
            q = inverse_pd(0.5 * (r + r.T))
            forms[(node, edges)] = 0.5 * (q + q.T)

    cand = PathDepCertificate(gamma_step, memory, forms, 0.0)
    slack = check_pathdep(system, cand, cap=cap)
    if slack > 0.0:
        return PathDepCertificate(gamma_step, memory, forms, slack)
    bumped = gamma_step * (1.0 + _RETRY_BUMP)
    cand = PathDepCertificate(bumped, memory, forms, 0.0)
    slack = check_pathdep(system, cand, cap=cap)
    if slack > 0.0:
        return PathDepCertificate(bumped, memory, forms, slack)
    raise VerificationFailure(
        f"converted certificate does not verify at gamma={gamma_step!r} "
        f"nor after the retry bump (margin {slack:.3e})"
    )


def cjsr_bounds(
    system,
    T=1,
    method="lift-multinorm",
    tol_bisect=1e-3,
    opts=None,
    cap=DEFAULT_PATH_CAP,
):
    """Two-sided bounds on the joint growth rate at horizon T.

    method "lift-multinorm" bisects node-indexed certificates on the
    depth-T lift and takes the T-th root; "path-dependent" bisects
    path-indexed certificates with memory T-1 directly. Both guarantee
    upper <= (1 + eps) * rate with eps = n^(1/(2T)) - 1, up to the
    bisection tolerance. The lower bound is the best of the cycle bound
    and, when a duality-gap infeasibility was established, the matching
    gamma / n^(1/(2T)) bound.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    t0 = time.perf_counter()
    n = system.dim
    root = 1.0 / T
    eps = n ** (0.5 * root) - 1.0

    if method == "lift-multinorm":
        lifted = lift(system, T, cap=cap)
        res = gamma_star(lifted, tol_bisect=tol_bisect, opts=opts, cap=cap)
        upper = res.gamma_feasible ** root
        num_forms = len(res.certificate.forms)
    elif method == "path-dependent":
        res = gamma_star_pathdep(
            system, T - 1, tol_bisect=tol_bisect, opts=opts, cap=cap
        )
        upper = res.gamma_feasible
        num_forms = len(res.certificate.forms)
    else:
        raise ValueError(f"unknown method {method!r}")

    lower, _ = cycle_lower_bound(system, cap=cap)
    if res.gamma_infeasible is not None:
        gi = res.gamma_infeasible
        if method == "lift-multinorm":
            lower = max(lower, gi ** root / n ** (0.5 * root))
        else:
            lower = max(lower, gi / n ** (0.5 * root))
    return CjsrEstimate(
        method=method,
        T=T,
        upper=upper,
        lower=lower,
        guaranteed_eps=eps,
        gamma=res.gamma_feasible,
        num_forms=num_forms,
        wall_time=time.perf_counter() - t0,
        certificate=res.certificate,
    )


def stability_verdict(
    system,
    method="lift-multinorm",
    schedule=(1, 2, 4, 8),
    tol_verdict=1e-6,
    tol_bisect=1e-3,
    opts=None,
    cap=DEFAULT_PATH_CAP,
):
    """Decide stability by escalating the horizon.

    Unstable needs a cycle with per-step rate >= 1 + tol_verdict (the
    cycle is the witness). Stable needs some horizon in the schedule to
    certify an upper bound < 1 - tol_verdict. Otherwise Undecided, with
    the best bounds found.
    """
    lower, witness = cycle_lower_bound(system, cap=cap)
    if lower >= 1.0 + tol_verdict:
        return Verdict("unstable", lower, math.inf, witness, None)

    best = None
    for T in schedule:
        est = cjsr_bounds(
            system, T=T, method=method, tol_bisect=tol_bisect, opts=opts, cap=cap
        )
        if best is None or est.upper < best.upper:
            best = est
        if est.upper < 1.0 - tol_verdict:
            return Verdict("stable", max(lower, est.lower), est.upper, None, est)
    hi = best.upper if best is not None else math.inf
    lo = max(lower, best.lower) if best is not None else lower
    return Verdict("undecided", lo, hi, None, best)
