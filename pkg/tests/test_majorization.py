import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from mingraph.errors import InvalidInputError
from mingraph.majorization import asymp_l, l_majorizes, weak_hull_test

from oracles import in_hull_lp, majorized_bruteforce


def test_equal_vectors():
    x = np.array([0.3, 2.0, 1.0])
    rep = l_majorizes(x, x, 3)
    assert rep.holds and rep.equal_upto == 3


def test_sum_equality_only():
    # partial sums (1, 2) against (2, 2)
    rep = l_majorizes([1, 1], [2, 0], 2)
    assert rep.holds
    assert rep.equal_upto == 0
    np.testing.assert_array_equal(rep.partial_sums_x, [1, 2])
    np.testing.assert_array_equal(rep.partial_sums_y, [2, 2])


def test_violation():
    assert not l_majorizes([2, 0], [1, 1], 1).holds


def test_l_range():
    with pytest.raises(InvalidInputError):
        l_majorizes([1, 2], [1, 2], 3)
    with pytest.raises(InvalidInputError):
        asymp_l([1, 2], [1, 2], 0)


def test_asymp_examples():
    assert asymp_l([1, 2, 3], [3, 1, 2], 3)
    assert not asymp_l([1, 1], [2, 0], 1)
    assert asymp_l([2, 0.5, 0.1], [2, 0.5, 0.3], 2)


def test_hull_examples():
    z = np.array([1.5, 0.2])
    assert weak_hull_test(z, z)
    assert weak_hull_test(np.zeros(2), z)
    assert not weak_hull_test(np.array([1.0, 1.0]), z)


def test_hull_rejects_negative():
    with pytest.raises(InvalidInputError):
        weak_hull_test([-0.1, 0.2], [1, 1])


vec = lambda m: arrays(float, m, elements=st.floats(-3, 3, allow_nan=False))


@given(st.data())
@settings(max_examples=300, deadline=None)
def test_agrees_with_bruteforce(data):
    m = data.draw(st.integers(1, 5))
    x, y = data.draw(vec(m)), data.draw(vec(m))
    l = data.draw(st.integers(1, m))
    assert l_majorizes(x, y, l).holds == majorized_bruteforce(x, y, l)


@given(st.data())
@settings(max_examples=300, deadline=None)
def test_permutation_invariance(data):
    m = data.draw(st.integers(1, 5))
    x, y = data.draw(vec(m)), data.draw(vec(m))
    l = data.draw(st.integers(1, m))
    perm = data.draw(st.permutations(range(m)))
    a = l_majorizes(x, y, l)
    b = l_majorizes(x[list(perm)], y, l)
    c = l_majorizes(x, y[list(perm)], l)
    for r in (b, c):
        assert (r.holds, r.equal_upto) == (a.holds, a.equal_upto)
        np.testing.assert_array_equal(r.partial_sums_x, a.partial_sums_x)
        np.testing.assert_array_equal(r.partial_sums_y, a.partial_sums_y)


def test_transitivity_random():
    rng = np.random.default_rng(0)
    checked = 0
    for _ in range(5000):
        m = rng.integers(2, 5)
        l = rng.integers(1, m + 1)
        x, y, z = rng.uniform(0, 2, (3, m))
        if l_majorizes(x, y, l).holds and l_majorizes(y, z, l).holds:
            checked += 1
            assert l_majorizes(x, z, l).holds
    assert checked > 100


def test_hull_matches_lp_oracle():
    rng = np.random.default_rng(4)
    agree = 0
    for trial in range(1000):
        m = int(rng.integers(2, 5))
        z = rng.uniform(0, 2, m)
        if trial % 2:
            # convex combination of random hull vertices: inside by construction
            w = rng.dirichlet(np.ones(3))
            verts = [rng.permutation(z) * rng.integers(0, 2, m) for _ in range(3)]
            x = sum(wi * v for wi, v in zip(w, verts))
        else:
            x = rng.uniform(0, 1.2, m)
        assert weak_hull_test(x, z, tol=1e-9) == in_hull_lp(x, z)
        agree += 1
    assert agree == 1000
