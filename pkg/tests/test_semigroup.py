import math

import numpy as np
import pytest

from rnsemigroup.errors import MissingGeneratorError, NonPositiveNormError, SingularCError
from rnsemigroup.example_sde import build_from_space
from rnsemigroup.measure_space import gauss_hermite_space, make_space
from rnsemigroup.operators import ModOp, apply, compose, exp_op, identity, shift_op, zero_op
from rnsemigroup.report import FAIL, PASS
from rnsemigroup.rn_module import TimeGrid, catalog_process, l0_norm
from rnsemigroup.semigroup import (
    CSemigroup,
    check_axioms,
    check_cas_bound,
    check_lipschitz_CVz,
    constant_family,
    estimate_generator,
    exp_family,
    fit_exponential_bound,
    generator_record,
    identity_semigroup,
    local_bound,
    panel_ladder,
    rel_residual,
    verify_generator_properties,
)

GRID = TimeGrid.uniform(2.0, 16)
H_SEQ = [2.0 ** -k for k in range(3, 11)]


def single(z: float):
    space = make_space([("w", 1.0)])
    return build_from_space(space, space.scalar([z]), GRID)


def four():
    space, Z = gauss_hermite_space(4)
    return build_from_space(space, Z, GRID)


def names(rep):
    return {r.name: r for r in rep.records}


def test_rel_residual_zero_and_scaling():
    sc = single(1.0)
    y = sc.y
    assert rel_residual(y, y).tolist() == [0.0]
    zero = y * 0.0
    assert rel_residual(zero, zero).tolist() == [0.0]
    assert rel_residual(y * 2.0, y)[0] == pytest.approx(0.5)
    assert rel_residual(zero, zero, y)[0] == 0.0


def test_identity_semigroup_axioms_exact():
    space, _ = gauss_hermite_space(3)
    sg = identity_semigroup(space, GRID)
    probes = [catalog_process("ramp", space, GRID)]
    rep = check_axioms(sg, [0.0, 0.5, 1.0], probes, 1e-12)
    r = names(rep)
    assert r["axiom.identity_at_zero"].worst() == 0.0
    assert r["axiom.semigroup_law"].worst() == 0.0


def test_example_axioms_pass_and_slope_near_one():
    sc = four()
    rep = check_axioms(sc.semigroup, [0.0, 0.5, 1.0, 1.5], sc.probes(), 1e-12)
    assert rep.passed, rep.to_text()
    slopes = names(rep)["axiom.strong_continuity"].slope
    assert all(s is None or 0.7 <= s <= 1.3 for s in slopes)


def test_identity_at_zero_control_fails():
    # V(s) = exp(sH): a semigroup with V(0) = I, not C
    sc = four()
    sg = CSemigroup(exp_family(sc.H, identity(sc.space, sc.grid)), sc.C, label="bad")
    rep = check_axioms(sg, [0.0, 0.5], sc.probes(), 1e-12)
    assert names(rep)["axiom.identity_at_zero"].status == FAIL


def test_semigroup_law_fails_for_wrong_power():
    sc = four()
    sg = CSemigroup(lambda s: compose(exp_op(sc.A, s * s), sc.C), sc.C)
    rep = check_axioms(sg, [0.0, 0.5, 1.0], sc.probes(), 1e-12)
    assert names(rep)["axiom.semigroup_law"].status == FAIL


def test_local_bound_single_atom():
    # ||V(s)|| = e^{s+1} for Z = 1
    sc = single(1.0)
    b, stable = local_bound(sc.semigroup, 1.0, 33)
    assert stable and b.values[0] == pytest.approx(math.e ** 2, rel=1e-13)


def test_exponential_fit_two_atoms():
    space = make_space([("neg", 0.5), ("pos", 0.5)])
    sc = build_from_space(space, space.scalar([-1.0, 1.0]), GRID)
    fit = fit_exponential_bound(sc.semigroup, np.linspace(0.0, 2.0, 9))
    assert np.all(fit.valid)
    # Z = 1: exactly e^{1 + s}
    assert fit.W.values[1] == pytest.approx(math.e, rel=1e-10)
    assert fit.tau.values[1] == pytest.approx(1.0, rel=1e-10)
    # Z = -1: max(1, e^{s - 1}) is kinked, the fit still bounds it
    s = np.linspace(0, 2, 17)
    bound = fit.W.values[0] * np.exp(fit.tau.values[0] * s)
    assert np.all(np.maximum(1.0, np.exp(s - 1)) <= bound * (1 + 1e-12))


def test_fit_rejects_zero_norm():
    sc = four()
    sg = CSemigroup(constant_family(zero_op(sc.space, sc.grid)), sc.C)
    with pytest.raises(NonPositiveNormError):
        fit_exponential_bound(sg, [0.0, 1.0, 2.0])


def test_generator_of_constant_family_is_zero():
    sc = four()
    sg = CSemigroup(constant_family(sc.C), sc.C, generator=zero_op(sc.space, sc.grid))
    est = estimate_generator(sg, sc.y, H_SEQ)
    assert np.all(l0_norm(est.value).values == 0.0)


def test_generator_single_atom_slopes():
    sc = single(1.5)
    est = estimate_generator(sc.semigroup, sc.y, H_SEQ)
    assert est.order == 1
    assert 0.7 <= est.slope_pre[0] <= 1.3
    assert est.slope_post[0] >= 1.7
    err = l0_norm(est.value - apply(sc.A, sc.y)).values[0]
    assert err <= 1e-6


def test_generator_record_and_missing_generator():
    sc = four()
    rec = generator_record(sc.semigroup, sc.y, H_SEQ, 1e-6, "y")
    assert rec.status == PASS and rec.metric == "absolute"
    with pytest.raises(MissingGeneratorError):
        generator_record(CSemigroup(sc.V, sc.C), sc.y, H_SEQ, 1e-6, "y")


def test_generator_rejects_bad_steps():
    sc = single(1.0)
    with pytest.raises(ValueError):
        estimate_generator(sc.semigroup, sc.y, [0.1, 0.2, 0.05])
    with pytest.raises(ValueError):
        estimate_generator(sc.semigroup, sc.y, [0.1, 0.05, 0.01])


def test_singular_C_for_general_operator():
    sc = four()
    sg = CSemigroup(sc.V, shift_op(sc.space, sc.grid), generator=sc.A)
    with pytest.raises(SingularCError):
        sg.inverse_of_C()


@pytest.mark.parametrize("l", [0.5, 1.0, 2.0])
def test_cas_bound_holds(l):
    sc = four()
    rep = check_cas_bound(sc.semigroup, sc.y, l)
    assert rep.passed, rep.to_text()


def test_cas_bound_scaled_control_flagged():
    sc = four()
    rep = check_cas_bound(sc.semigroup, sc.y, 1.0, cAz_scale=0.1)
    assert not rep.passed
    flagged = np.zeros(4, dtype=bool)
    for r in rep.records:
        flagged |= np.asarray(r.details["violated_atoms"])
    assert flagged.all()


def test_cas_bound_domain():
    sc = single(1.0)
    with pytest.raises(ValueError):
        check_cas_bound(sc.semigroup, sc.y, 1.0, s_grid=[0.0, 0.5])


def test_lipschitz_single_atom_closed_form():
    # y = C 1_unit, so s -> C V(s) C y is e^{I t (s + 4)}; its s-derivative peaks at s = l
    sc = single(1.0)
    rep = check_lipschitz_CVz(sc.semigroup, sc.y, 1.0, n=129)
    assert rep.passed
    lip = names(rep)["theorem.lipschitz_CVz[l=1.0]"].residual.values[0]
    It = np.where(GRID.unit, GRID.t, 0.0)
    exact = np.sqrt(np.dot((It * np.exp(5 * It)) ** 2, GRID.weights))
    # last chord lags the endpoint derivative by about h/2 times the growth rate
    assert lip == pytest.approx(exact, rel=1e-2)
    assert lip <= exact * (1 + 1e-12)


def test_panel_ladder():
    assert panel_ladder(256) == [16, 32, 64, 128, 256]
    assert panel_ladder(6) == [6]
    assert panel_ladder(8) == [2, 4, 8]


def test_generator_properties_small_scenario():
    sc = four()
    rep = verify_generator_properties(sc.semigroup, sc.A, [sc.y], [0.5, 1.0], panels=256,
                                      probe_names=["y"])
    assert rep.passed, rep.to_text()
    r = names(rep)
    assert r["item6[y]"].worst() <= 1e-12
    assert all(-4.5 <= s <= -3.5 for s in r["item2[y]"].slope if s is not None)


def test_generator_properties_detect_wrong_generator():
    sc = four()
    rep = verify_generator_properties(sc.semigroup, sc.H, [sc.y], [0.5, 1.0], panels=64,
                                      probe_names=["y"])
    r = names(rep)
    assert r["item2[y]"].status == FAIL and r["item4a[y]"].status == FAIL


def test_general_modop_family_runs_through_axioms():
    sc = four()
    I = identity(sc.space, sc.grid)
    mod = ModOp(sc.space, sc.grid, lambda Y: Y, label="id")
    sg = CSemigroup(constant_family(mod), I, generator=zero_op(sc.space, sc.grid))
    rep = check_axioms(sg, [0.0, 1.0], sc.probes(), 1e-12)
    assert names(rep)["axiom.identity_at_zero"].status == PASS
