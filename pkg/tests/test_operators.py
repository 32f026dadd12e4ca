import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rnsemigroup.errors import EmptyProbeSetError, ExponentOverflowError, SingularMultiplierError
from rnsemigroup.example_sde import build_from_space
from rnsemigroup.measure_space import gauss_hermite_space, make_space
from rnsemigroup.operators import (
    ModOp,
    MultOp,
    apply,
    as_modop,
    compose,
    exp_op,
    homomorphism_defect,
    identity,
    invert_mult,
    node_bumps,
    op_norm_mult,
    op_norm_probe,
    shift_op,
    zero_op,
)
from rnsemigroup.rn_module import Process, TimeGrid, catalog_process, l0_norm, random_process

GRID = TimeGrid.uniform()
ONE = make_space([("w1", 1.0)])
SC1 = build_from_space(ONE, ONE.scalar([1.0]), GRID, "one_on_unit")
SPACE, Z = gauss_hermite_space(4)
SMALL = TimeGrid.uniform(2.0, 32)
SC4 = build_from_space(SPACE, Z, SMALL)
unit = GRID.unit


def test_apply_H_single_atom():
    Y = catalog_process("one_on_unit", ONE, GRID)
    out = apply(SC1.H, Y).values[0]
    assert np.array_equal(out, np.where(unit, GRID.t, 0.0))


def test_identity_apply_unchanged():
    Y = random_process(SPACE, SMALL, np.random.default_rng(1))
    assert np.array_equal(apply(identity(SPACE, SMALL), Y).values, Y.values)


def test_C_single_atom_is_exp_t():
    Y = catalog_process("one_on_unit", ONE, GRID)
    out = apply(SC1.C, Y).values[0]
    assert np.allclose(out[unit], np.exp(GRID.t[unit]), rtol=1e-15)
    assert np.all(out[~unit] == 0.0)
    ones = Process(ONE, GRID, np.ones((1, GRID.n_cols)))
    assert np.all(apply(SC1.C, ones).values[0][~unit] == 1.0)


def test_exp_of_zero_is_identity():
    e = exp_op(zero_op(SPACE, SMALL), 3.0)
    assert np.array_equal(e.multiplier, identity(SPACE, SMALL).multiplier)


def test_exp_H_multiplier():
    e = exp_op(SC4.H, 1.0)
    expect = np.exp(np.where(SMALL.unit, SMALL.t, 0.0)[None, :] * Z.values[:, None])
    assert np.allclose(e.multiplier, expect, rtol=1e-15)


def test_exp_ZH_composed_with_C():
    s = 0.7
    V = compose(exp_op(SC4.H, Z * s), SC4.C)
    It = np.where(SMALL.unit, SMALL.t, 0.0)[None, :]
    z = Z.values[:, None]
    assert np.allclose(V.multiplier, np.exp(z * z * It * s + z * It), rtol=1e-14)


def test_exp_accepts_per_atom_array():
    scales = np.array([0.0, 0.1, 0.2, 0.3])
    e = exp_op(SC4.A, scales)
    for i, s in enumerate(scales):
        assert np.array_equal(e.multiplier[i], exp_op(SC4.A, float(s)).multiplier[i])


def test_overflow_raises_with_location():
    with pytest.raises(ExponentOverflowError) as info:
        exp_op(SC4.A, 200.0)
    assert info.value.atom is not None and "s=200" in str(info.value)


def test_compose_identity_and_C_squared():
    I = identity(SPACE, SMALL)
    assert np.array_equal(compose(SC4.C, I).multiplier, SC4.C.multiplier)
    assert np.allclose(compose(SC4.C, SC4.C).multiplier, exp_op(SC4.H, 2.0).multiplier, rtol=1e-15)


def test_semigroup_law_multiplier_oracle():
    # e^{Z^2 It (s+u) + 2 Z It} on both sides, added by hand
    s, u = 0.5, 1.25
    lhs = compose(SC4.V(s), SC4.V(u))
    rhs = compose(SC4.C, SC4.V(s + u))
    It = np.where(SMALL.unit, SMALL.t, 0.0)[None, :]
    z = Z.values[:, None]
    hand = np.exp(z * z * It * (s + u) + 2 * z * It)
    assert np.allclose(lhs.multiplier, hand, rtol=1e-13)
    assert np.allclose(rhs.multiplier, hand, rtol=1e-13)


def test_invert_identity_and_C():
    inv, cond = invert_mult(identity(SPACE, SMALL))
    assert np.array_equal(inv.multiplier, np.ones_like(inv.multiplier)) and cond.tolist() == [1.0] * 4
    inv, cond = invert_mult(SC1.C)
    assert np.allclose(inv.multiplier[0][unit], np.exp(-GRID.t[unit]), rtol=1e-15)
    assert cond.values[0] == pytest.approx(math.e, rel=1e-15)


def test_invert_singular():
    m = np.ones((4, SMALL.n_cols))
    m[2, 5] = 0.0
    with pytest.raises(SingularMultiplierError):
        invert_mult(MultOp(SPACE, SMALL, m))


def test_norms():
    assert op_norm_mult(identity(SPACE, SMALL)).tolist() == [1.0] * 4
    assert op_norm_mult(SC1.C).values[0] == pytest.approx(math.e, rel=1e-15)
    for s in (0.0, 0.5, 2.0):
        got = op_norm_mult(SC4.V(s)).values
        z = Z.values
        assert np.allclose(got, np.maximum(1.0, np.exp(z * z * s + z)), rtol=1e-13)


def test_probe_norm_examples():
    probes = [catalog_process("ramp", SPACE, SMALL)]
    assert op_norm_probe(zero_op(SPACE, SMALL), probes).tolist() == [0.0] * 4
    got = op_norm_probe(identity(SPACE, SMALL), probes).values
    assert np.allclose(got, 1.0, rtol=1e-14)
    with pytest.raises(EmptyProbeSetError):
        op_norm_probe(identity(SPACE, SMALL), [])


def test_probe_norm_with_bumps_close_to_exact():
    sc = build_from_space(SPACE, Z, GRID)
    V = sc.V(0.5)
    exact = op_norm_mult(V).values
    est = op_norm_probe(as_modop(V), node_bumps(SPACE, GRID)).values
    assert np.all(est <= exact * (1 + 1e-12))
    assert np.all(est >= 0.98 * exact)


def test_shift_is_a_module_homomorphism_that_does_not_commute():
    sh = shift_op(SPACE, SMALL)
    rng = np.random.default_rng(5)
    x, y = random_process(SPACE, SMALL, rng), random_process(SPACE, SMALL, rng)
    assert np.all(homomorphism_defect(sh, SPACE.scalar(rng.normal(size=4)), x, y).values <= 1e-12)
    a = apply(sh, apply(SC4.A, x))
    b = apply(SC4.A, apply(sh, x))
    assert np.any(l0_norm(a - b).values > 1e-3)


def test_mixed_compose_is_modop_with_bound():
    op = compose(shift_op(SPACE, SMALL), SC4.A)
    assert isinstance(op, ModOp) and op.norm_bound is None
    op = compose(as_modop(SC4.C), SC4.A)
    assert np.allclose(op.norm_bound.values, op_norm_mult(SC4.C).values * op_norm_mult(SC4.A).values)


proc = arrays(np.float64, (4, SMALL.n_cols), elements=st.floats(-100, 100))
mult = arrays(np.float64, (4, SMALL.n_cols), elements=st.floats(-5, 5, allow_subnormal=False))
scal = arrays(np.float64, 4, elements=st.floats(-10, 10))


@settings(max_examples=60)
@given(mult, scal, proc, proc)
def test_homomorphism_law(m, xi, x, y):
    T = MultOp(SPACE, SMALL, m)
    d = homomorphism_defect(T, SPACE.scalar(xi), Process(SPACE, SMALL, x), Process(SPACE, SMALL, y))
    assert np.all(d.values <= 1e-12)


@settings(max_examples=60)
@given(mult, proc)
def test_bounded_by_op_norm(m, x):
    T = MultOp(SPACE, SMALL, m)
    Y = Process(SPACE, SMALL, x)
    assert np.all(l0_norm(apply(T, Y)).values <= op_norm_mult(T).values * l0_norm(Y).values * (1 + 1e-12))


@settings(max_examples=60)
@given(mult, mult, mult)
def test_compose_associative(a, b, c):
    A, B, C = (MultOp(SPACE, SMALL, v) for v in (a, b, c))
    lhs = compose(compose(A, B), C).multiplier
    rhs = compose(A, compose(B, C)).multiplier
    # triple products of tiny entries underflow differently per grouping
    assert np.allclose(lhs, rhs, rtol=1e-14, atol=1e-290)


@settings(max_examples=60)
@given(arrays(np.float64, (4, SMALL.n_cols), elements=st.floats(0.01, 100)),
       arrays(np.bool_, (4, SMALL.n_cols)))
def test_inverse_composes_to_identity(mag, neg):
    m = np.where(neg, -mag, mag)
    T = MultOp(SPACE, SMALL, m)
    inv, cond = invert_mult(T)
    err = np.abs(compose(inv, T).multiplier - 1.0).max(axis=1)
    assert np.all(err <= cond.values * 1e-15 + 1e-16)
