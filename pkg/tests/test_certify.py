"""Bisection, certificate conversion, two-sided bounds and verdicts."""

import math

import numpy as np
import pytest

from conftest import EXAMPLE_FILE, random_system, rotation, single_loop_system
from cjsr import (
    Automaton,
    SwitchedSystem,
    VerificationFailure,
    arbitrary_switching,
    load_system,
)
from cjsr.automaton import count_paths
from cjsr.certify import (
    BisectionResult,
    cjsr_bounds,
    gamma_star,
    gamma_star_pathdep,
    pathdep_from_lift,
    stability_verdict,
)
from cjsr.lmi import MultinormCertificate, check_multinorm, check_pathdep, solve_multinorm


def two_mode():
    aut = Automaton(2, 2, [(1, 2, 1), (2, 1, 2), (2, 2, 1)])
    mats = [np.array([[0.4, 0.1], [0.0, 0.3]]), np.array([[0.2, 0.0], [0.3, 0.5]])]
    return SwitchedSystem(aut, mats)


def test_single_contraction_bracket_is_tight():
    res = gamma_star(single_loop_system([[0.7]]))
    assert res.gamma_not_proven == 0.7
    assert res.gamma_feasible == pytest.approx(0.7 * (1 + 1e-6), rel=1e-12)


def test_rotation_needs_no_bisection_steps():
    res = gamma_star(single_loop_system(rotation(math.pi / 2)))
    # spectral norm equals the growth rate, so the initial bracket already
    # meets the tolerance
    assert res.bisection_steps == 0
    assert res.gamma_not_proven == 1.0
    assert res.gamma_feasible == pytest.approx(1.000001, rel=1e-12)


def test_shear_rate_lands_between_radius_and_norm_scaled():
    a = np.array([[0.9, 10.0], [0.0, 0.9]])
    res = gamma_star(single_loop_system(a))
    assert res.gamma_not_proven >= 0.9
    assert res.gamma_feasible <= math.sqrt(2) * 0.9 * 1.001
    assert res.gamma_feasible == pytest.approx(0.90504, abs=5e-4)


def test_bisection_result_invariants():
    rng = np.random.default_rng(20260815)
    for _ in range(5):
        sys_ = random_system(rng, dim=2, num_nodes=2, num_labels=2)
        res = gamma_star(sys_)
        assert isinstance(res, BisectionResult)
        assert res.gamma_feasible >= res.gamma_not_proven >= 0.0
        assert (
            res.tol_bisect <= 1e-3
            or res.gamma_feasible <= 1e-11
            or res.bisection_steps == 200
        )
        assert res.certificate.gamma == res.gamma_feasible
        slack, _ = check_multinorm(
            sys_, res.gamma_feasible, res.certificate.forms
        )
        assert slack > 0.0
        if res.gamma_infeasible is not None:
            assert res.gamma_infeasible <= res.gamma_not_proven
        assert 0 <= res.bisection_steps <= 200
        assert res.newton_steps >= 0


def test_zero_dynamics_stop_at_the_norm_floor():
    # solves below the absolute slack threshold come back unknown, so the
    # certified top of the bracket stays at the 1e-9 norm floor
    res = gamma_star(single_loop_system([[0.0, 0.0], [0.0, 0.0]]))
    assert res.gamma_feasible == pytest.approx(1e-9 * (1 + 1e-6), rel=1e-12)
    assert res.gamma_infeasible is None
    slack, _ = check_multinorm(
        single_loop_system([[0.0, 0.0], [0.0, 0.0]]),
        res.gamma_feasible,
        res.certificate.forms,
    )
    assert slack > 0.0


def test_memoryless_path_bisection_matches_node_bisection():
    sys_ = two_mode()
    a = gamma_star(sys_)
    b = gamma_star_pathdep(sys_, 0)
    assert b.gamma_feasible == pytest.approx(a.gamma_feasible, rel=3e-3)
    assert b.certificate.memory == 0


def test_conversion_depth_one_reuses_node_forms():
    sys_ = two_mode()
    out = solve_multinorm(sys_, 0.9)
    cert = pathdep_from_lift(sys_, 1, out.certificate)
    assert cert.memory == 0
    assert cert.gamma == out.certificate.gamma
    assert cert.slack > 0.0
    for (node, path), form in cert.forms.items():
        assert path == ()
        assert np.array_equal(form, np.asarray(out.certificate.forms[node - 1]))


def test_conversion_from_depth_two_lift_verifies():
    sys_ = two_mode()
    from cjsr.system import lift

    lifted = lift(sys_, 2)
    res = gamma_star(lifted)
    cert = pathdep_from_lift(sys_, 2, res.certificate)
    assert cert.memory == 1
    assert cert.gamma <= res.gamma_feasible ** 0.5 * (1 + 1e-6)
    assert cert.slack > 0.0
    assert check_pathdep(sys_, cert) == cert.slack
    assert len(cert.forms) == count_paths(sys_.automaton, 1)


def test_conversion_rejects_an_unfounded_rate():
    sys_ = single_loop_system(0.9 * rotation(0.8))
    fake = MultinormCertificate(0.25, (np.eye(2),), 1.0, 1.0)
    with pytest.raises(VerificationFailure):
        pathdep_from_lift(sys_, 2, fake)


def test_conversion_depth_must_be_positive():
    sys_ = two_mode()
    out = solve_multinorm(sys_, 0.9)
    with pytest.raises(ValueError):
        pathdep_from_lift(sys_, 0, out.certificate)


def test_bounds_rejects_bad_arguments():
    sys_ = two_mode()
    with pytest.raises(ValueError):
        cjsr_bounds(sys_, T=0)
    with pytest.raises(ValueError):
        cjsr_bounds(sys_, method="magic")


def test_bounds_shape_per_method():
    sys_ = two_mode()
    est = cjsr_bounds(sys_, T=2, method="lift-multinorm")
    assert est.num_forms == 2
    assert est.guaranteed_eps == pytest.approx(2 ** 0.25 - 1, abs=1e-15)
    assert est.lower <= est.upper
    assert est.gamma == pytest.approx(est.upper ** 2, rel=1e-12)
    pd = cjsr_bounds(sys_, T=2, method="path-dependent")
    assert pd.num_forms == count_paths(sys_.automaton, 1)
    assert pd.gamma == pd.upper
    assert pd.upper <= est.upper + 2e-3


def test_verdict_unstable_from_a_growing_cycle():
    v = stability_verdict(single_loop_system(np.diag([1.2, 0.3])))
    assert v.status == "unstable"
    assert v.cjsr_lower >= 1.2 - 1e-12
    assert v.cjsr_upper == math.inf
    assert v.witness.word == (1,)
    assert v.estimate is None


def test_verdict_stable_contraction():
    v = stability_verdict(single_loop_system(0.5 * np.eye(2)), schedule=(1,))
    assert v.status == "stable"
    assert v.witness is None
    assert v.cjsr_lower == pytest.approx(0.5, rel=1e-9)
    assert v.cjsr_upper == pytest.approx(0.5, abs=2e-3)
    assert v.estimate.T == 1


def test_verdict_undecided_on_the_boundary():
    v = stability_verdict(single_loop_system(np.eye(2)), schedule=(1,))
    assert v.status == "undecided"
    assert v.cjsr_lower == pytest.approx(1.0, rel=1e-12)
    assert v.cjsr_upper >= 1.0
    assert v.cjsr_upper == pytest.approx(1.0, abs=2e-3)
    assert v.estimate is not None


def test_verdict_uses_the_given_schedule():
    v = stability_verdict(single_loop_system(0.5 * np.eye(2)), schedule=(2,))
    assert v.status == "stable"
    assert v.estimate.T == 2


BUNDLED_LIFT_UPPER = {
    1: 1.034065711400,
    2: 1.011691207707,
    3: 1.008049529512,
    4: 0.998507061460,
}
BUNDLED_PATHDEP_UPPER = {
    1: 1.034065711400,
    2: 0.985540501752,
    3: 0.979474850546,
    4: 0.979474850546,
}
BUNDLED_CYCLE_LOWER = 0.978608328946


@pytest.fixture(scope="module")
def bundled():
    return load_system(EXAMPLE_FILE)


def test_bundled_cycle_bound_and_witness(bundled):
    from cjsr.growth import cycle_lower_bound

    lo, witness = cycle_lower_bound(bundled)
    assert lo == pytest.approx(BUNDLED_CYCLE_LOWER, abs=1e-9)
    assert witness.word == (4, 3)


@pytest.mark.parametrize("T", [1, 2, 3, 4])
def test_bundled_lift_upper_table(bundled, T):
    est = cjsr_bounds(bundled, T=T, method="lift-multinorm")
    assert est.upper == pytest.approx(BUNDLED_LIFT_UPPER[T], abs=2e-3)
    assert est.num_forms == 5
    if T < 4:
        assert est.upper > 1.0
    else:
        assert est.upper < 1.0 - 1e-3


@pytest.mark.parametrize("T", [1, 2, 3])
def test_bundled_pathdep_upper_table(bundled, T):
    est = cjsr_bounds(bundled, T=T, method="path-dependent")
    assert est.upper == pytest.approx(BUNDLED_PATHDEP_UPPER[T], abs=2e-3)
    assert est.num_forms == {1: 5, 2: 10, 3: 20}[T]
    if T >= 2:
        assert est.upper < 1.0 - 1e-3
    assert est.lower >= BUNDLED_CYCLE_LOWER - 1e-9


def test_bundled_verdicts(bundled):
    v = stability_verdict(bundled, schedule=(4,))
    assert v.status == "stable"
    assert v.cjsr_upper < 1.0
    assert v.cjsr_lower >= BUNDLED_CYCLE_LOWER - 1e-9
    w = stability_verdict(bundled, method="path-dependent", schedule=(2,))
    assert w.status == "stable"
    assert w.cjsr_upper == pytest.approx(BUNDLED_PATHDEP_UPPER[2], abs=2e-3)
