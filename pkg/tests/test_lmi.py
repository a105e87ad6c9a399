"""Feasibility programs: verification routines and the interior-point solver."""

import numpy as np
import pytest

from conftest import random_system, rotation, single_loop_system
from cjsr import (
    DimensionMismatch,
    FeasibilityStatus,
    MissingPathKey,
    PathDepCertificate,
    SolverOptions,
    SwitchedSystem,
    arbitrary_switching,
    check_multinorm,
    check_pathdep,
    count_paths,
    cycle_lower_bound,
    lift,
    solve_multinorm,
    solve_pathdep,
)


def half_identity_system():
    return single_loop_system(0.5 * np.eye(1))


def test_solver_options_defaults():
    opts = SolverOptions()
    assert opts.tau == 1e6
    assert opts.tol_feas == 1e-7
    assert opts.max_newton_steps == 200
    assert opts.barrier_schedule == (1.0, 10.0)


def test_check_multinorm_scalar_slack():
    sys = half_identity_system()
    slack, normalization = check_multinorm(sys, 0.6, (np.eye(1),))
    assert slack == pytest.approx(0.6**2 - 0.5**2, abs=1e-12)
    assert normalization == 1.0
    slack, _ = check_multinorm(sys, 0.4, (np.eye(1),))
    assert slack == pytest.approx(0.4**2 - 0.25, abs=1e-12)


def test_check_multinorm_identity_above_max_norm():
    rng = np.random.default_rng(41)
    sys = random_system(rng, 2, 3, 2, extra_edges=3)
    from cjsr.numerics import spectral_norm

    gamma = 1.01 * max(spectral_norm(a) for a in sys.matrices)
    forms = tuple(np.eye(2) for _ in range(sys.num_nodes))
    slack, normalization = check_multinorm(sys, gamma, forms)
    assert slack > 0.0
    assert normalization == pytest.approx(1.0)


def test_check_multinorm_validates_shapes():
    sys = half_identity_system()
    with pytest.raises(DimensionMismatch):
        check_multinorm(sys, 1.0, (np.eye(1), np.eye(1)))
    with pytest.raises(DimensionMismatch):
        check_multinorm(sys, 1.0, (np.eye(2),))


@pytest.mark.filterwarnings("ignore::cjsr.ConnectivityWarning")
def test_check_multinorm_on_lift_uses_word_constraints():
    # a lift of a bipartite-ish graph can lose strong connectivity; that
    # only warns and the constraint set is unaffected
    rng = np.random.default_rng(42)
    sys = random_system(rng, 2, 2, 2, norm_cap=0.8)
    lifted = lift(sys, 2)
    forms = tuple(np.eye(2) for _ in range(sys.num_nodes))
    slack_direct, _ = check_multinorm(lifted.as_system, 0.9**2, forms)
    slack_lift, _ = check_multinorm(lifted, 0.9**2, forms)
    assert slack_lift == pytest.approx(slack_direct, rel=1e-12)


def test_solve_multinorm_feasible_scalar():
    out = solve_multinorm(half_identity_system(), 0.6)
    assert out.status is FeasibilityStatus.FEASIBLE
    cert = out.certificate
    assert cert is not None
    assert cert.gamma == 0.6
    assert cert.slack > SolverOptions().tol_feas
    slack, normalization = check_multinorm(half_identity_system(), 0.6, cert.forms)
    assert slack == pytest.approx(cert.slack)
    assert normalization > 0.0


def test_solve_multinorm_infeasible_above_radius():
    sys = single_loop_system(np.diag([1.2, 0.3]))
    out = solve_multinorm(sys, 1.0)
    assert out.status is FeasibilityStatus.INFEASIBLE
    assert out.certificate is None


def test_solve_multinorm_rotation_scale():
    sys = single_loop_system(0.9 * rotation(np.pi / 6))
    out = solve_multinorm(sys, 0.95)
    assert out.status is FeasibilityStatus.FEASIBLE
    q = out.certificate.forms[0]
    # the rotation preserves the euclidean norm, so a multiple of the
    # identity is optimal; solver output must stay near-isotropic
    ratio = q[0, 0] / q[1, 1]
    assert ratio == pytest.approx(1.0, rel=0.2)
    assert abs(q[0, 1]) <= 0.2 * q[0, 0]


def test_solve_multinorm_never_feasible_below_cycle_bound():
    rng = np.random.default_rng(43)
    for _ in range(6):
        sys = random_system(rng, 2, 2, 2, extra_edges=2)
        lb, _ = cycle_lower_bound(sys)
        out = solve_multinorm(sys, 0.9 * lb)
        assert out.status is not FeasibilityStatus.FEASIBLE


def test_solve_multinorm_feasible_certificates_reverify():
    rng = np.random.default_rng(44)
    hits = 0
    for _ in range(6):
        sys = random_system(rng, 2, 2, 2, norm_cap=0.9)
        out = solve_multinorm(sys, 1.0)
        if out.status is FeasibilityStatus.FEASIBLE:
            hits += 1
            slack, normalization = check_multinorm(sys, 1.0, out.certificate.forms)
            assert slack > 0.0
            assert normalization > 0.0
    assert hits == 6  # identity forms already witness feasibility here


def test_solve_multinorm_rejects_bad_gamma():
    with pytest.raises(ValueError):
        solve_multinorm(half_identity_system(), 0.0)
    with pytest.raises(ValueError):
        solve_multinorm(half_identity_system(), -1.0)


def test_solve_pathdep_memory_zero_matches_multinorm():
    rng = np.random.default_rng(45)
    for _ in range(4):
        sys = random_system(rng, 2, 2, 2, extra_edges=2)
        lb, _ = cycle_lower_bound(sys)
        for gamma in (0.85 * lb, 1.6 * lb):
            a = solve_multinorm(sys, gamma)
            b = solve_pathdep(sys, 0, gamma)
            assert a.status is b.status


def test_solve_pathdep_memory_zero_keys():
    rng = np.random.default_rng(46)
    sys = random_system(rng, 2, 3, 2, norm_cap=0.8)
    out = solve_pathdep(sys, 0, 1.0)
    assert out.status is FeasibilityStatus.FEASIBLE
    assert sorted(out.certificate.forms) == [(v, ()) for v in range(1, 4)]


def test_solve_pathdep_scalar_memory_two():
    sys = SwitchedSystem(
        arbitrary_switching(2), [0.5 * np.eye(2), 0.5 * np.eye(2)]
    )
    out = solve_pathdep(sys, 2, 0.6)
    assert out.status is FeasibilityStatus.FEASIBLE
    cert = out.certificate
    assert cert.memory == 2
    assert len(cert.forms) == count_paths(sys.automaton, 2)
    assert cert.normalization > 0.0
    assert check_pathdep(sys, cert) == pytest.approx(cert.slack)


def test_solve_pathdep_keys_cover_length_m_paths():
    rng = np.random.default_rng(47)
    sys = random_system(rng, 2, 2, 2, extra_edges=2, norm_cap=0.7)
    for memory in (1, 2):
        out = solve_pathdep(sys, memory, 1.0)
        assert out.status is FeasibilityStatus.FEASIBLE
        forms = out.certificate.forms
        assert len(forms) == count_paths(sys.automaton, memory)
        for node, edges in forms:
            assert len(edges) == memory
            assert edges[-1][1] == node


def test_solve_pathdep_rejects_bad_arguments():
    sys = half_identity_system()
    with pytest.raises(ValueError):
        solve_pathdep(sys, -1, 0.6)
    with pytest.raises(ValueError):
        solve_pathdep(sys, 0, 0.0)


def test_check_pathdep_missing_and_extraneous_keys():
    sys = SwitchedSystem(
        arbitrary_switching(2), [0.5 * np.eye(2), 0.5 * np.eye(2)]
    )
    out = solve_pathdep(sys, 1, 0.7)
    forms = dict(out.certificate.forms)
    key = next(iter(forms))
    dropped = {k: v for k, v in forms.items() if k != key}
    with pytest.raises(MissingPathKey):
        check_pathdep(sys, PathDepCertificate(0.7, 1, dropped, 0.0))
    extraneous = dict(forms)
    extraneous[(1, ((1, 1, 7),))] = np.eye(2)
    with pytest.raises(MissingPathKey):
        check_pathdep(sys, PathDepCertificate(0.7, 1, extraneous, 0.0))


def test_pathdep_memory_one_separates_on_bundled_example():
    # gamma = 1 sits between the memory-0 threshold (about 1.034) and
    # the memory-1 threshold (about 0.986) on the bundled example, so
    # one extra step of memory flips the outcome
    from conftest import EXAMPLE_FILE
    from cjsr import load_system

    sys = load_system(EXAMPLE_FILE)
    m0 = solve_pathdep(sys, 0, 1.0)
    m1 = solve_pathdep(sys, 1, 1.0)
    assert m1.status is FeasibilityStatus.FEASIBLE
    assert m0.status is not FeasibilityStatus.FEASIBLE
    assert check_pathdep(sys, m1.certificate) > 0.0


def test_solver_is_deterministic():
    sys = single_loop_system(np.array([[0.4, 0.2], [0.0, 0.3]]))
    a = solve_multinorm(sys, 0.6)
    b = solve_multinorm(sys, 0.6)
    assert a.status is b.status
    assert a.iterations == b.iterations
    np.testing.assert_array_equal(a.certificate.forms[0], b.certificate.forms[0])


def test_outcome_counts_iterations():
    out = solve_multinorm(half_identity_system(), 0.6)
    assert out.iterations >= 1
    assert out.best_slack > 0.0
