"""Feasibility programs for contraction quadratic forms.

Both certificate families reduce to one program shape: given constraint
triples (i, j, A) over a set of form slots, decide strict feasibility of

    gamma^2 Q_i - A^T Q_j A > 0   for every constraint,
    Q_k > 0                       for every slot,

normalized to I <= Q_k <= tau I to pin the scale invariance. Node-indexed
(multinorm) programs put one slot per graph node and one constraint per
edge; path-indexed programs put one slot per (node, incoming path of
length memory) pair and one constraint per path one step longer.

Solving maximizes the uniform slack s subject to
gamma^2 Q_i - A^T Q_j A >= s I with a log-det barrier interior-point
method. A Feasible outcome always ships a certificate whose slack was
re-verified by the independent check routine; the optimizer's internal
slack claim is never surfaced on its own. Infeasibility is decided
through the barrier duality gap and is conservative: outcomes near the
feasibility boundary come back Unknown.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

import numpy as np

from . import _kernels as K
from .automaton import DEFAULT_PATH_CAP, iter_path_blocks
from .errors import DimensionMismatch, MissingPathKey, NotPositiveDefinite
from .system import LiftedSystem, as_switched_system


class FeasibilityStatus(Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class SolverOptions:
    """Knobs of the interior-point solver; all JSON-serializable."""

    tau: float = 1.0e6
    tol_feas: float = 1.0e-7
    max_newton_steps: int = 200
    barrier_schedule: tuple = (1.0, 10.0)


@dataclass(frozen=True, eq=False)
class MultinormCertificate:
    """One quadratic form per node, contracting by gamma along every edge."""

    gamma: float
    forms: tuple
    slack: float
    normalization: float


@dataclass(frozen=True, eq=False)
class PathDepCertificate:
    """One quadratic form per (node, incoming length-memory path) pair."""

    gamma: float
    memory: int
    forms: dict
    slack: float

    @cached_property
    def normalization(self):
        q = np.stack([self.forms[k] for k in sorted(self.forms)])
        return float(np.min(K.sym_min_eig_batch(q)))


@dataclass(frozen=True, eq=False)
class FeasibilityOutcome:
    status: FeasibilityStatus
    certificate: object
    iterations: int
    best_slack: float


def _freeze(mat):
    out = np.asarray(mat, dtype=np.float64).copy()
    out.flags.writeable = False
    return out


def _multinorm_arrays(system_or_lift):
    """Constraint triples with slots = nodes, in deterministic order."""
    if isinstance(system_or_lift, LiftedSystem):
        uniq = {}
        for e in system_or_lift.edges:
            uniq.setdefault((e.from_node, e.to_node, e.word), e.matrix)
        keys = sorted(uniq)
        ii = np.array([u - 1 for u, _, _ in keys], dtype=np.int64)
        jj = np.array([v - 1 for _, v, _ in keys], dtype=np.int64)
        amats = np.stack([uniq[k] for k in keys])
        return ii, jj, amats
    sys = system_or_lift
    edges = sys.automaton.edges
    ii = np.array([u - 1 for u, _, _ in edges], dtype=np.int64)
    jj = np.array([v - 1 for _, v, _ in edges], dtype=np.int64)
    amats = np.stack([sys.matrix(s) for _, _, s in edges])
    return ii, jj, amats


def _as_form_stack(forms, count, n, what):
    if len(forms) != count:
        raise DimensionMismatch(f"got {len(forms)} {what}, expected {count}")
    stack = np.stack([np.asarray(f, dtype=np.float64) for f in forms])
    if stack.shape[1:] != (n, n):
        raise DimensionMismatch(
            f"{what} have shape {stack.shape[1:]}, expected {(n, n)}"
        )
    return 0.5 * (stack + stack.transpose(0, 2, 1))


def check_multinorm(system_or_lift, gamma, forms):
    """(slack, normalization) of a multinorm candidate; pure verification.

    slack is the smallest eigenvalue of gamma^2 Q_i - A^T Q_j A over all
    constraints, normalization the smallest eigenvalue over the forms.
    Both must be positive for a valid certificate at this gamma.
    """
    sys = as_switched_system(system_or_lift)
    q = _as_form_stack(forms, sys.num_nodes, sys.dim, "forms")
    ii, jj, amats = _multinorm_arrays(system_or_lift)
    slack = float(np.min(K.constraint_min_eigs(gamma * gamma, q, ii, jj, amats)))
    normalization = float(np.min(K.sym_min_eig_batch(q)))
    return slack, normalization


def _pathdep_program(system, memory, cap):
    """Slot keys and constraint triples of the path-indexed program.

    Keys are (node, incoming path of length memory as an edge tuple),
    sorted. Constraints come from paths one step longer: the length-memory
    prefix indexes the departing form, the equally long suffix the arrival
    form, and the matrix is the one of the final edge.
    """
    aut = system.automaton
    if memory == 0:
        keys = [(v, ()) for v in range(1, aut.num_nodes + 1)]
    else:
        keys = set()
        for idx, _, ends in iter_path_blocks(aut, memory, cap=cap):
            for row, end in zip(idx, ends):
                keys.add((int(end), tuple(aut.edges[int(e)] for e in row)))
        keys = sorted(keys)
    slot = {k: i for i, k in enumerate(keys)}

    ii = []
    jj = []
    labels = []
    for idx, _, _ in iter_path_blocks(aut, memory + 1, cap=cap):
        for row in idx:
            edges = tuple(aut.edges[int(e)] for e in row)
            last = edges[-1]
            prefix = (last[0], edges[:-1][-memory:] if memory else ())
            suffix = (last[1], edges[1:])
            ii.append(slot[prefix])
            jj.append(slot[suffix])
            labels.append(last[2])
    ii = np.asarray(ii, dtype=np.int64)
    jj = np.asarray(jj, dtype=np.int64)
    amats = np.stack([system.matrix(s) for s in labels])
    return keys, ii, jj, amats


def check_pathdep(system, certificate, cap=DEFAULT_PATH_CAP):
    """Smallest constraint margin of a path-indexed candidate.

    The certificate must carry exactly one form per (node, incoming
    length-memory path); any missing or extraneous key raises
    MissingPathKey. Returns min over all length-(memory+1) paths of the
    smallest eigenvalue of gamma^2 Q_prefix - A^T Q_suffix A.
    """
    memory = certificate.memory
    keys, ii, jj, amats = _pathdep_program(system, memory, cap)
    have = set(certificate.forms)
    want = set(keys)
    if have != want:
        missing = sorted(want - have)
        extra = sorted(have - want)
        raise MissingPathKey(
            f"certificate keys do not cover the length-{memory} paths: "
            f"{len(missing)} missing, {len(extra)} extraneous; "
            f"first missing: {missing[:1]}, first extraneous: {extra[:1]}"
        )
    q = _as_form_stack(
        [certificate.forms[k] for k in keys], len(keys), system.dim, "forms"
    )
    gamma2 = certificate.gamma * certificate.gamma
    return float(np.min(K.constraint_min_eigs(gamma2, q, ii, jj, amats)))


class _Barrier:
    """Log-det barrier model of one slack-maximization program."""

    def __init__(self, n, num_slots, ii, jj, amats, gamma, opts):
        self.n = n
        self.m = n * (n + 1) // 2
        self.num_slots = num_slots
        self.dim = num_slots * self.m + 1
        self.ii = ii
        self.jj = jj
        self.amats = np.ascontiguousarray(amats, dtype=np.float64)
        self.gamma2 = gamma * gamma
        self.opts = opts
        self.basis = K.sym_basis(n)
        tmp = np.einsum("mkl,clj->cmkj", self.basis, self.amats)
        self.te = np.ascontiguousarray(np.einsum("cki,cmkj->cmij", self.amats, tmp))
        self.eye = np.eye(n)
        # total barrier parameter: every block contributes its size
        self.nu = n * (len(ii) + 2 * num_slots)

    def start_point(self):
        c0 = math.sqrt(self.opts.tau)
        q = np.repeat(c0 * self.eye[None], self.num_slots, axis=0)
        norms2 = K.norm_sq_batch(self.amats)
        smin = float(np.min(c0 * (self.gamma2 - norms2)))
        s = smin - max(1.0, 0.1 * abs(smin))
        return q, s

    def value(self, t_bar, q, s):
        """Barrier objective, or None outside the strict interior."""
        ok, ld_c = K.constraint_logdet(self.gamma2, q, self.ii, self.jj, self.amats, s)
        if not ok:
            return None
        total = -t_bar * s - ld_c
        for blk in (q - self.eye, self.opts.tau * self.eye - q):
            try:
                chol = np.linalg.cholesky(blk)
            except np.linalg.LinAlgError:
                return None
            diag = np.einsum("kii->ki", chol)
            if np.any(diag <= 0.0):
                return None
            total -= float(2.0 * np.log(diag).sum())
        return total

    def derivatives(self, t_bar, q, s):
        """(gradient, Hessian) of the barrier objective, or None."""
        grad = np.zeros(self.dim)
        hess = np.zeros((self.dim, self.dim))
        ok = K.constraint_newton(
            self.gamma2, q, self.ii, self.jj, self.amats,
            self.te, self.basis, s, grad, hess,
        )
        if not ok:
            return None
        m, e = self.m, self.basis
        for blk, sign in ((q - self.eye, 1.0), (self.opts.tau * self.eye - q, -1.0)):
            try:
                np.linalg.cholesky(blk)
            except np.linalg.LinAlgError:
                return None
            w = np.linalg.inv(blk)
            w = 0.5 * (w + w.transpose(0, 2, 1))
            g = np.einsum("kij,mij->km", w, e)
            grad[:-1] += (-sign * g).ravel()
            we = np.einsum("kij,mjl->kmil", w, e)
            h = np.einsum("kaij,kbji->kab", we, we)
            for k in range(self.num_slots):
                sl = slice(k * m, (k + 1) * m)
                hess[sl, sl] += h[k]
        grad[-1] -= t_bar
        return grad, hess

    def verified_slack(self, q):
        mins = K.constraint_min_eigs(self.gamma2, q, self.ii, self.jj, self.amats)
        return float(np.min(mins))


def _newton_direction(hess, grad):
    ridge = 0.0
    scale = max(1.0, float(np.trace(hess)) / hess.shape[0])
    for _ in range(8):
        try:
            chol = np.linalg.cholesky(hess + ridge * np.eye(hess.shape[0]))
            y = np.linalg.solve(chol, -grad)
            return np.linalg.solve(chol.T, y)
        except np.linalg.LinAlgError:
            ridge = max(2.0 * ridge, 1e-14 * scale)
    return None


def _solve_feasibility(n, num_slots, ii, jj, amats, gamma, opts):
    """Core slack maximization. Returns (status, q or None, iterations, best_s).

    Feasible requires an independently verified slack above tol_feas.
    Infeasible requires the duality-gap upper bound s + nu/t to fall below
    -tol_feas at an (approximately) centered iterate. Everything else,
    including exhausted Newton budgets, is Unknown.
    """
    bar = _Barrier(n, num_slots, ii, jj, amats, gamma, opts)
    q, s = bar.start_point()
    t_bar, mult = opts.barrier_schedule
    iterations = 0
    best_s = s
    inner_tol = 1e-9

    while iterations < opts.max_newton_steps:
        centered = False
        while iterations < opts.max_newton_steps:
            der = bar.derivatives(t_bar, q, s)
            if der is None:
                return FeasibilityStatus.UNKNOWN, None, iterations, best_s
            grad, hess = der
            step = _newton_direction(hess, grad)
            if step is None:
                return FeasibilityStatus.UNKNOWN, None, iterations, best_s
            lam2 = float(-grad @ step)
            if lam2 / 2.0 <= inner_tol:
                centered = True
                break
            phi0 = bar.value(t_bar, q, s)
            gd = float(grad @ step)
            dq = K.vec_to_sym(step[:-1].reshape(num_slots, bar.m), n)
            ds = step[-1]
            alpha = 1.0
            moved = False
            while alpha > 1e-14:
                cand_q = q + alpha * dq
                cand_s = s + alpha * ds
                phi1 = bar.value(t_bar, cand_q, cand_s)
                if phi1 is not None and phi1 <= phi0 + 0.25 * alpha * gd:
                    q, s = cand_q, cand_s
                    moved = True
                    break
                alpha *= 0.5
            iterations += 1
            if not moved:
                return FeasibilityStatus.UNKNOWN, None, iterations, best_s
            best_s = max(best_s, s)
            if s > opts.tol_feas and bar.verified_slack(q) > opts.tol_feas:
                return FeasibilityStatus.FEASIBLE, q.copy(), iterations, s

        gap = bar.nu / t_bar
        if centered and s + gap < -opts.tol_feas:
            return FeasibilityStatus.INFEASIBLE, None, iterations, best_s
        if gap < 0.05 * opts.tol_feas:
            return FeasibilityStatus.UNKNOWN, None, iterations, best_s
        t_bar *= mult

    return FeasibilityStatus.UNKNOWN, None, iterations, best_s


def solve_multinorm(system_or_lift, gamma, opts=None):
    """Decide the node-indexed program at this gamma.

    A Feasible outcome carries a MultinormCertificate that passed
    check_multinorm with slack above tol_feas.
    """
    if gamma <= 0.0:
        raise ValueError("gamma must be positive")
    opts = opts or SolverOptions()
    sys = as_switched_system(system_or_lift)
    ii, jj, amats = _multinorm_arrays(system_or_lift)
    status, q, iterations, best_s = _solve_feasibility(
        sys.dim, sys.num_nodes, ii, jj, amats, gamma, opts
    )
    cert = None
    if status is FeasibilityStatus.FEASIBLE:
        forms = tuple(_freeze(f) for f in q)
        slack, normalization = check_multinorm(system_or_lift, gamma, forms)
        if slack > 0.0 and normalization > 0.0:
            cert = MultinormCertificate(gamma, forms, slack, normalization)
            best_s = slack
        else:
            status = FeasibilityStatus.UNKNOWN
    return FeasibilityOutcome(status, cert, iterations, best_s)


def solve_pathdep(system, memory, gamma, opts=None, cap=DEFAULT_PATH_CAP):
    """Decide the path-indexed program with the given memory at this gamma.

    memory 0 coincides with solve_multinorm on the same system. A Feasible
    outcome carries a PathDepCertificate re-verified by check_pathdep.
    """
    if gamma <= 0.0:
        raise ValueError("gamma must be positive")
    if memory < 0:
        raise ValueError("memory must be >= 0")
    opts = opts or SolverOptions()
    keys, ii, jj, amats = _pathdep_program(system, memory, cap)
    status, q, iterations, best_s = _solve_feasibility(
        system.dim, len(keys), ii, jj, amats, gamma, opts
    )
    cert = None
    if status is FeasibilityStatus.FEASIBLE:
        forms = {k: _freeze(f) for k, f in zip(keys, q)}
        cert = PathDepCertificate(gamma, memory, forms, 0.0)
        slack = check_pathdep(system, cert, cap=cap)
        if slack > 0.0:
            cert = PathDepCertificate(gamma, memory, forms, slack)
            best_s = slack
        else:
            cert = None
            status = FeasibilityStatus.UNKNOWN
    return FeasibilityOutcome(status, cert, iterations, best_s)
