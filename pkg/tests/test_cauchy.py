import csv
import io

import numpy as np
import pytest

from rnsemigroup.cauchy import (
    CauchyProblem,
    Trajectory,
    check_differentiability_upgrade,
    check_existence_family,
    check_mild_existence_family,
    check_mild_solution,
    check_strong_solution,
    perturbed_trajectory,
    solve_from_semigroup,
    trajectory_from_function,
    uniqueness_probe,
)
from rnsemigroup.errors import (
    ConditionExceededError,
    HorizonMismatchError,
    LipschitzCertificateFailedError,
    NotDifferentiableError,
    SingularCError,
)
from rnsemigroup.example_sde import build_from_space, closed_form_solution, shift_commutation_control
from rnsemigroup.measure_space import gauss_hermite_space
from rnsemigroup.operators import apply, compose, exp_op, identity, shift_op, zero_op
from rnsemigroup.report import FAIL, PASS
from rnsemigroup.rn_module import TimeGrid, catalog_process, l0_norm
from rnsemigroup.semigroup import CSemigroup, constant_family, identity_semigroup

SPACE, Z = gauss_hermite_space(4)
GRID = TimeGrid.uniform(2.0, 16)
SC = build_from_space(SPACE, Z, GRID)
PROB = CauchyProblem(SC.A, SC.y, 2.0)


def closed(n=33):
    return trajectory_from_function(lambda s: closed_form_solution(SC, s), 2.0, n, "closed_form")


def statuses(rep):
    return {r.name: r.status for r in rep.records}


def test_trivial_problem_with_zero_generator():
    sg = identity_semigroup(SPACE, GRID)
    z = catalog_process("ramp", SPACE, GRID)
    prob = CauchyProblem(zero_op(SPACE, GRID), z, 1.0)
    tr = solve_from_semigroup(sg, z, horizon=1.0)
    for rep in (check_mild_solution(prob, tr, panels=16), check_strong_solution(prob, tr)):
        assert rep.passed
        assert all(r.worst() in (None, 0.0) for r in rep.records if r.tol is not None)


def test_closed_form_is_strong_and_mild():
    tr = closed()
    assert check_strong_solution(PROB, tr).passed
    rep = check_mild_solution(PROB, tr)
    assert rep.passed
    for r in rep.records:
        assert all(s is None or -4.5 <= s <= -3.5 for s in r.slope)


def test_wrong_power_candidate_rejected():
    # exp(s^2 A) y solves a different equation; at s = 1 the defect is O(1)
    tr = trajectory_from_function(lambda s: apply(exp_op(SC.A, s * s), SC.y), 2.0, 33, "wrong")
    rep = check_strong_solution(PROB, tr, audit=[1.0])
    rec = rep.get("strong[wrong, s=1]")
    assert rec.status == FAIL and rec.worst() > 0.1
    assert rep.get("initial_value[wrong]").status == PASS


def test_perturbed_candidate_rejected():
    tr = perturbed_trajectory(closed(), catalog_process("one_on_unit", SPACE, GRID), 0.05)
    rep = check_mild_solution(PROB, tr, audit=[0.5])
    assert np.all(rep.records[0].residual.values >= 1e-3)
    assert np.array_equal(tr.at(0.0).values, SC.y.values)


def test_solve_from_semigroup_matches_closed_form():
    tr = solve_from_semigroup(SC.semigroup, SC.y, "C_of_DA", 2.0)
    assert tr.meta["mode"] == "C_of_DA"
    for s in tr.s_nodes:
        ref = closed_form_solution(SC, s)
        assert np.all(l0_norm(tr.at(s) - ref).values <= 1e-12 * l0_norm(ref).values)
    with pytest.raises(ValueError):
        solve_from_semigroup(SC.semigroup, SC.y, "bogus")


def test_solve_guards():
    sg = CSemigroup(SC.V, shift_op(SPACE, GRID), generator=SC.A)
    with pytest.raises(SingularCError):
        solve_from_semigroup(sg, SC.y)
    with pytest.raises(ConditionExceededError):
        solve_from_semigroup(SC.semigroup, SC.y, condition_cap=1.0)


def test_horizon_mismatch():
    tr = trajectory_from_function(lambda s: closed_form_solution(SC, s), 1.0, 9, "short")
    with pytest.raises(HorizonMismatchError):
        check_mild_solution(PROB, tr)
    with pytest.raises(ValueError):
        CauchyProblem(SC.A, SC.y, 0.0)


def test_trajectory_validation():
    with pytest.raises(ValueError):
        Trajectory(np.array([0.1, 1.0]), [SC.y, SC.y])
    with pytest.raises(ValueError):
        Trajectory(np.array([0.0, 1.0, 0.5]), [SC.y] * 3)
    with pytest.raises(ValueError):
        Trajectory(np.array([0.0, 1.0]), [SC.y])


def test_spline_trajectory_is_accurate_between_nodes():
    ref = closed(129)
    tab = Trajectory(ref.s_nodes, ref.states, "tabulated")
    for s in (0.3, 1.1, 1.77):
        exact = closed_form_solution(SC, s)
        assert np.all(l0_norm(tab.at(s) - exact).values <= 1e-5 * l0_norm(exact).values)
    rep = check_mild_solution(PROB, tab, panels=128, tol=1e-4)
    assert rep.passed


def test_csv_long_format():
    tr = trajectory_from_function(lambda s: closed_form_solution(SC, s), 1.0, 3, "x")
    rows = list(csv.reader(io.StringIO(tr.to_csv())))
    assert rows[0] == ["s", "t", "atom", "value"]
    assert len(rows) == 1 + 3 * SPACE.n_atoms * GRID.n_cols
    assert float(rows[1][0]) == 0.0 and rows[1][2] == SPACE.labels[0]


def test_mild_family_passes_and_2A_fails():
    probes = SC.probes()[:1]
    ok = check_mild_existence_family(SC.V, SC.A, SC.C, probes, [0.5, 1.0], panels=256)
    assert ok.passed, ok.to_text()
    bad = check_mild_existence_family(SC.V, SC.A.scaled(2.0), SC.C, probes, [0.5, 1.0], panels=256)
    assert bad.find("mild_family.identity")[0].status == FAIL


def test_existence_family_and_shift_control():
    rep = check_existence_family(SC.V, SC.A, SC.C, SC.probes()[:1], [0.5, 1.0], panels=256)
    assert rep.passed, rep.to_text()
    ctrl = shift_commutation_control()
    assert ctrl.status == PASS and ctrl.details["detected"]


@pytest.mark.parametrize("s0,tol", [(0.5, 1e-8), (0.0, 1e-6)])
def test_differentiability_upgrade(s0, tol):
    rep = check_differentiability_upgrade(SC.V, SC.A, SC.y, s0, [2.5e-4, 5e-4], tol)
    assert rep.passed


def test_not_differentiable_detected():
    # square-root kink at s = 0.5
    def V(s):
        return compose(exp_op(SC.A, float(np.sqrt(max(s - 0.5, 0.0)))), SC.C)

    with pytest.raises(NotDifferentiableError):
        check_differentiability_upgrade(V, SC.A, SC.y, 0.5, [1e-3, 2e-3], 1e-8)


def test_uniqueness_probe_on_closed_form():
    rep = uniqueness_probe(PROB, SC.semigroup, closed(), probes=SC.probes())
    assert rep.passed, rep.to_text()


def test_uniqueness_probe_flags_perturbation():
    pert = perturbed_trajectory(closed(), catalog_process("one_on_unit", SPACE, GRID), 0.05)
    st = statuses(uniqueness_probe(PROB, SC.semigroup, pert))
    assert st["uniqueness.difference"] == FAIL
    assert st["uniqueness.extension"] == PASS


def test_uniqueness_extension_fails_for_other_operator():
    prob = CauchyProblem(SC.H, SC.y, 2.0)
    st = statuses(uniqueness_probe(prob, SC.semigroup, closed()))
    assert st["uniqueness.extension"] == FAIL


def test_strict_certificate_raises_on_rough_candidate():
    rough = trajectory_from_function(
        lambda s: SC.y * float(1.0 + np.sqrt(abs(s - 1.0))), 2.0, 33, "rough")
    with pytest.raises(LipschitzCertificateFailedError):
        uniqueness_probe(PROB, SC.semigroup, rough, strict=True)


def test_identity_family_is_its_own_solution():
    I = identity(SPACE, GRID)
    sg = CSemigroup(constant_family(I), I, generator=zero_op(SPACE, GRID))
    tr = solve_from_semigroup(sg, SC.y, horizon=1.0)
    assert all(np.array_equal(st.values, SC.y.values) for st in tr.states)
