import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rnsemigroup.errors import (
    DuplicateLabelError,
    EmptyFamilyError,
    NonPositiveProbError,
    ProbSumMismatchError,
    SpaceMismatchError,
)
from rnsemigroup.measure_space import (
    ProbSpace,
    RScalar,
    converges_in_prob,
    gauss_hermite_space,
    indicator_gt,
    indicator_le,
    make_space,
    rs_inf,
    rs_sup,
)

TWO = make_space([("w1", 0.5), ("w2", 0.5)])
finite = st.floats(-1e6, 1e6, allow_nan=False)


def test_point_mass_space():
    sp = make_space([("w1", 1.0)])
    assert sp.n_atoms == 1 and sp.labels == ("w1",)


def test_atom_order_is_preserved():
    sp = make_space([("b", 0.25), ("a", 0.75)])
    assert sp.labels == ("b", "a")


@pytest.mark.parametrize(
    "atoms, err",
    [
        ([("w1", 0.3), ("w2", 0.8)], ProbSumMismatchError),
        ([("w1", 1.0), ("w2", 0.0)], NonPositiveProbError),
        ([("w1", 0.5), ("w1", 0.5)], DuplicateLabelError),
        ([], EmptyFamilyError),
    ],
)
def test_make_space_rejects(atoms, err):
    with pytest.raises(err):
        make_space(atoms)


def test_sum_tolerance_is_1e12():
    make_space([("w1", 0.5), ("w2", 0.5 + 5e-13)])
    with pytest.raises(ProbSumMismatchError):
        make_space([("w1", 0.5), ("w2", 0.5 + 5e-12)])


def test_gauss_hermite_one_node():
    sp, Z = gauss_hermite_space(1)
    assert Z.tolist() == [0.0] and sp.probs.tolist() == [1.0]


def test_gauss_hermite_two_nodes_match_hand_solution():
    # E[Z]=0, E[Z^2]=1, E[Z^3]=0 with two symmetric atoms forces Z = +-1, p = 1/2
    sp, Z = gauss_hermite_space(2)
    assert np.allclose(sorted(Z.values), [-1.0, 1.0], atol=1e-15)
    assert np.allclose(sp.probs, [0.5, 0.5], atol=1e-15)


@pytest.mark.parametrize("n", [3, 8, 16])
def test_gauss_hermite_moments(n):
    sp, Z = gauss_hermite_space(n)
    # normal moments: E[Z^k] = (k-1)!! for even k, 0 for odd
    for k in range(0, 2 * n):
        exact = 0.0 if k % 2 else float(math.prod(range(k - 1, 0, -2)))
        got = math.fsum(sp.probs * Z.values ** k)
        # odd moments cancel; judge them against the absolute moment
        scale = math.fsum(sp.probs * np.abs(Z.values) ** k)
        assert abs(got - exact) <= 1e-10 * max(scale, 1.0), k


def test_gauss_hermite_sixteen_second_and_fourth():
    sp, Z = gauss_hermite_space(16)
    assert abs((Z * Z).expectation() - 1.0) <= 1e-10
    assert abs((Z * Z * Z * Z).expectation() - 3.0) <= 1e-10


def test_gauss_hermite_odd_has_exact_zero_node():
    _, Z = gauss_hermite_space(7)
    assert 0.0 in Z.tolist()


def test_sup_examples():
    a, b = TWO.scalar([1.0, 5.0]), TWO.scalar([4.0, 2.0])
    assert rs_sup([a, b]).tolist() == [4.0, 5.0]
    assert rs_sup([a]).tolist() == a.tolist()
    x = TWO.scalar([-3.0, 2.0])
    assert rs_sup([x, -x]).tolist() == abs(x).tolist()


def test_sup_errors():
    with pytest.raises(EmptyFamilyError):
        rs_sup([])
    other = make_space([("v1", 1.0)])
    with pytest.raises(SpaceMismatchError):
        rs_sup([TWO.scalar([0, 0]), other.scalar([0])])


def test_nonfinite_rejected():
    with pytest.raises(ValueError):
        TWO.scalar([np.nan, 0.0])


@given(arrays(np.float64, (3, 4), elements=finite))
def test_sup_lattice_laws(v):
    sp = make_space([(f"w{i}", 0.25) for i in range(4)])
    a, b, c = (sp.scalar(r) for r in v)
    assert rs_sup([a, a]).tolist() == a.tolist()
    assert rs_sup([a, b]).tolist() == rs_sup([b, a]).tolist()
    assert rs_sup([rs_sup([a, b]), c]).tolist() == rs_sup([a, rs_sup([b, c])]).tolist()
    assert rs_inf([a, b]).tolist() == (-rs_sup([-a, -b])).tolist()


def test_indicator_examples():
    f, g = TWO.scalar([2.0, 1.0]), TWO.scalar([0.0, 1.0])
    assert indicator_gt(f, g).tolist() == [1.0, 0.0]
    assert indicator_gt(f, f).tolist() == [0.0, 0.0]


@given(arrays(np.float64, (2, 5), elements=finite))
def test_indicators_partition(v):
    sp = make_space([(f"w{i}", 0.2) for i in range(5)])
    f, g = sp.scalar(v[0]), sp.scalar(v[1])
    assert (indicator_gt(f, g) + indicator_le(f, g)).tolist() == [1.0] * 5


@given(st.lists(st.booleans(), min_size=4, max_size=4), st.lists(st.booleans(), min_size=4, max_size=4))
def test_finite_additivity(m1, m2):
    sp = make_space([("a", 0.1), ("b", 0.2), ("c", 0.3), ("d", 0.4)])
    m1, m2 = np.array(m1), np.array(m2)
    assert sp.prob(m1 | m2) == pytest.approx(sp.prob(m1) + sp.prob(m2) - sp.prob(m1 & m2), abs=1e-15)


@pytest.mark.parametrize("eps", [0.1, 0.25, 0.05])
def test_convergence_one_over_k(eps):
    seq = [TWO.const(1.0 / k) for k in range(1, 200)]
    ok, tail = converges_in_prob(seq, TWO.const(0.0), eps, 0.5)
    # 0-based index of the first term 1/k < eps for good
    assert ok and tail == math.ceil(1.0 / eps)


def test_convergence_constant_sequence():
    lim = TWO.scalar([0.3, -0.2])
    assert converges_in_prob([lim] * 5, lim, 0.01, 0.9) == (True, 0)


def test_convergence_fails_on_mass_count():
    seq = [TWO.scalar([0.0, 1.0])] * 10
    ok, tail = converges_in_prob(seq, TWO.const(0.0), 0.5, 0.6)
    assert not ok and tail is None


@given(st.lists(st.floats(-2, 2), min_size=1, max_size=20), st.floats(0.01, 1.0))
def test_single_atom_convergence_is_eventual_closeness(vals, eps):
    sp = make_space([("w1", 1.0)])
    ok, tail = converges_in_prob([sp.scalar([v]) for v in vals], sp.const(0.0), eps, 0.5)
    close = [abs(v) < eps for v in vals]
    if ok:
        assert all(close[tail:]) and (tail == 0 or not close[tail - 1])
    else:
        assert not close[-1]


def test_json_roundtrip():
    sp, Z = gauss_hermite_space(4)
    sp2, Z2 = ProbSpace.from_json(sp.to_json(Z))
    assert sp2.labels == sp.labels and np.array_equal(sp2.probs, sp.probs)
    assert Z2.tolist() == Z.tolist()
