import numpy as np
import pytest

from mingraph.errors import InvalidInputError, PreconditionError
from mingraph.graphgeom import Domain, GridMap
from mingraph.homotopy import (
    check_prop1, check_prop2, classify_lambda, exterior_count_batch, gradient_vanishing_diagnostic,
    prop1_batch, trace, trace_jacobians, trace_to_csv,
)
from mingraph.svkit import RegionStatus, classify_region

from oracles import singular_values_eig


def rot(a):
    return np.array([[np.cos(a), -np.sin(a)], [np.sin(a), np.cos(a)]])


def test_constant_trace():
    J = np.array([[1.2, 0.3], [-0.4, 0.7]])
    tr = trace_jacobians(J, J)
    np.testing.assert_allclose(tr.lambdas, np.tile(tr.lambdas[0], (101, 1)), rtol=2e-15, atol=0)
    np.testing.assert_allclose(tr.mus, tr.lambdas, atol=1e-15)
    rep = check_prop1(tr)
    assert rep.passed and rep.majorization_slack >= -1e-15


def test_swap_example():
    tr = trace_jacobians(np.diag([1.0, 0.0]), np.diag([0.0, 1.0]), ts=np.linspace(0, 1, 11))
    np.testing.assert_allclose(tr.lambdas[5], [0.5, 0.5], atol=1e-15)
    np.testing.assert_allclose(tr.mus[5], [1.0, 0.0], atol=1e-15)
    rep = check_prop1(tr)
    assert rep.majorizes and rep.passed
    assert rep.equality_level == 0           # only the total sums coincide
    assert rep.linearity_residual is None


def test_swap_example_total_sum_equal():
    tr = trace_jacobians(np.diag([1.0, 0.0]), np.diag([0.0, 1.0]), ts=np.linspace(0, 1, 11))
    np.testing.assert_allclose(tr.S[:, -1], 1.0, atol=1e-15)


def test_diagonal_family_linear():
    tr = trace_jacobians(np.zeros((2, 2)), np.diag([2.0, 0.5]))
    np.testing.assert_allclose(tr.lambdas, np.outer(tr.ts, [2.0, 0.5]), atol=1e-14)
    rep = check_prop1(tr)
    assert rep.passed
    assert rep.equality_level == 2
    assert rep.linearity_residual < 1e-12


def test_diagonal_family_general():
    # a(t), b(t) linear with a > b > 0
    tr = trace_jacobians(np.diag([3.0, 1.0]), np.diag([1.5, 0.2]))
    rep = check_prop1(tr)
    assert rep.equality_level == 2 and rep.linearity_residual < 1e-12


def test_lambda_matches_eig_oracle():
    rng = np.random.default_rng(0)
    J0, J1 = rng.uniform(-2, 2, (2, 3, 2))
    tr = trace_jacobians(J0, J1, ts=np.linspace(0, 1, 21))
    for t, lam in zip(tr.ts, tr.lambdas):
        np.testing.assert_allclose(lam, singular_values_eig((1 - t) * J0 + t * J1), atol=1e-10)


def test_trace_continuity():
    rng = np.random.default_rng(1)
    J0, J1 = rng.uniform(-2, 2, (2, 3, 3))
    tr = trace_jacobians(J0, J1)
    step = np.abs(np.diff(tr.lambdas, axis=0)).max()
    assert step <= np.linalg.norm(J1 - J0, 2) * (tr.ts[1] - tr.ts[0]) + 1e-12


def test_branch_continuation_at_crossing():
    # diag(1 - t, t): sorted values fold at t = 0.5, the continued branches stay linear
    tr = trace_jacobians(np.diag([1.0, 0.0]), np.diag([0.0, 1.0]), ts=np.linspace(0, 1, 21))
    c = tr.continued
    assert np.abs(np.diff(c, 2, axis=0)).max() < 1e-12


def test_F_identities_random():
    rng = np.random.default_rng(2)
    for m in (2, 3):
        J0, J1 = rng.uniform(-2, 2, (2, 50, m, m))
        slack, F_lin, F_over, F_gap = prop1_batch(J0, J1, np.linspace(0, 1, 13))
        assert slack.min() >= -1e-9
        assert F_lin.max() < 1e-9 and F_over.max() <= 1e-9 and F_gap.max() < 1e-10


def test_check_prop1_rectangular_and_subinterval():
    rng = np.random.default_rng(3)
    J0, J1 = rng.uniform(-2, 2, (2, 3, 2))
    tr = trace_jacobians(J0, J1, t0=0.3)
    assert tr.t0 == pytest.approx(0.3)
    rep = check_prop1(tr, 0.2, 0.8)
    assert rep.passed
    with pytest.raises(InvalidInputError):
        check_prop1(tr, 0.8, 0.2)


def test_check_prop2_supone():
    rng = np.random.default_rng(4)
    for _ in range(20):
        J0 = rot(rng.uniform(0, 6)) @ np.diag(rng.uniform(0, 1, 2)) @ rot(rng.uniform(0, 6))
        J1 = rot(rng.uniform(0, 6)) @ np.diag(rng.uniform(0, 1, 2)) @ rot(rng.uniform(0, 6))
        rep = check_prop2(trace_jacobians(J0, J1), "SupOne")
        assert rep.passed and rep.all_in_closure


def test_symmetric_swap_pair_leaves_region():
    # diag(2, .5) -> diag(.5, 2) passes through 1.25 I, where lam1 * lam2 > 1;
    # both endpoints are on the boundary of the region, the midpoint is not in its closure
    tr = trace_jacobians(np.diag([2.0, 0.5]), np.diag([0.5, 2.0]), ts=np.linspace(0, 1, 11))
    np.testing.assert_allclose(tr.lambdas[5], [1.25, 1.25], atol=1e-15)
    assert classify_region(tr.lambdas[5]).status is RegionStatus.EXTERIOR
    rep = check_prop2(tr, "region")
    assert not rep.all_in_closure and not rep.passed


def test_constant_boundary_trace():
    J = np.diag([2.0, 0.5])
    rep = check_prop2(trace_jacobians(J, J), "region")
    assert rep.passed
    assert rep.boundary_samples_big > 0 and rep.linearity_residual == 0.0


def test_prop2_precondition():
    with pytest.raises(PreconditionError):
        check_prop2(trace_jacobians(np.diag([3.0, 1.0]), np.eye(2)), "region")
    with pytest.raises(PreconditionError):
        check_prop2(trace_jacobians(np.diag([1.5, 0.1]), np.eye(2)), "SupOne")


def test_exterior_count_batch():
    J0 = np.stack([np.diag([2.0, 0.5]), np.diag([0.5, 0.5])])
    J1 = np.stack([np.diag([0.5, 2.0]), np.diag([0.9, 0.1])])
    np.testing.assert_array_equal(exterior_count_batch(J0, J1, np.linspace(0, 1, 11)) > 0, [True, False])


# --- Lambda_k classification ---------------------------------------------------

def test_classify_lambda_examples():
    c = classify_lambda(trace_jacobians(np.zeros((3, 3)), np.zeros((3, 3)), ts=np.linspace(0, 1, 5)))
    assert np.all(c.level == 1)
    J = np.diag([1.0, 1.0, 0.5])
    assert np.all(classify_lambda(trace_jacobians(J, J, ts=np.linspace(0, 1, 5))).level == 3)
    for m in (2, 3, 4):
        I = np.eye(m)
        assert np.all(classify_lambda(trace_jacobians(I, I, ts=np.linspace(0, 1, 5))).level == m + 1)


def test_classify_lambda_monotone():
    rng = np.random.default_rng(5)
    for _ in range(20):
        J0, J1 = rng.uniform(-2, 2, (2, 3, 3))
        c = classify_lambda(trace_jacobians(J0, J1, ts=np.linspace(0, 1, 21)))
        members = np.stack([c.member(k) for k in range(1, 5)])
        assert np.all(members[:-1] <= members[1:])
        assert np.all(members[-1])


def test_trace_csv():
    tr = trace_jacobians(np.zeros((2, 2)), np.diag([2.0, 0.5]), ts=np.linspace(0, 1, 3))
    lines = trace_to_csv(tr).splitlines()
    assert lines[0] == "t,lambda_1,lambda_2,mu_1,mu_2,F_1,F_2,S_1,S_2,lambda_class"
    assert len(lines) == 4
    assert lines[1].split(",")[-1] == "1"
    assert float(lines[3].split(",")[1]) == 2.0


# --- grid-map traces and the vanishing diagnostic ----------------------------------

def _bump_pair(n=2):
    dom = Domain((1.0, 1.0), (9, 9))
    A = np.array([[0.8, 0.1], [-0.2, 0.5], [0.3, 0.3]])[:n]
    f0 = GridMap.from_function(dom, lambda x: x @ A.T)
    x = dom.nodes
    bump = np.clip(0.15 - np.abs(x - 0.5).max(axis=1), 0, None) * 4
    f1 = GridMap(dom, f0.values + bump[:, None] * np.ones(n))
    return f0, f1


def test_trace_on_grid_maps():
    f0, f1 = _bump_pair()
    tr = trace(f0, f1, 10, ts=np.linspace(0, 1, 5))
    assert tr.simplex_id == 10
    assert check_prop1(tr).passed
    with pytest.raises(InvalidInputError):
        trace(f0, GridMap(f0.domain, f0.values + 1.0), 0)


def test_vanishing_examples():
    f0, f1 = _bump_pair()
    rep = gradient_vanishing_diagnostic(f0, f0)
    assert rep.max_p_squared == 0.0 and rep.passed
    rep = gradient_vanishing_diagnostic(f0, f1)
    assert rep.max_p_squared > 1e-3 and not rep.passed
    assert set(rep.to_dict()) == {"t", "max_p_squared", "argmax_simplex", "passed"}
    with pytest.raises(InvalidInputError):
        gradient_vanishing_diagnostic(f0, f1, t=1.0)
