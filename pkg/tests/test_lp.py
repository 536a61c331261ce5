import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from grouptest.decode import dd_decode, smallest_satisfying_oracle
from grouptest.design import ItemSet, TestDesign, bernoulli_design, compute_outcomes, sample_defective_set
from grouptest.lp import (CoverLp, InconsistentInputError, LpSolution, RoundingError, SolverError,
                          build_relaxation, dump_lp, lp_decode, parse_lp, round_solution, simplex_solve)

from conftest import A, B, D
from lp_oracle import random_cover, vertex_minimum


def cover_from_matrix(a):
    nv = a.shape[1]
    cons = tuple(tuple(np.flatnonzero(row).tolist()) for row in a)
    return CoverLp(nv, tuple(range(nv)), cons)


def test_worked_relaxation(worked):
    design, _, y = worked
    lp = build_relaxation(design, y)
    assert lp.variables == (A, B, D)
    assert lp.constraints == ((A,), (B, D))


def test_empty_relaxation(worked):
    design, _, _ = worked
    lp = build_relaxation(design, np.zeros(3, dtype=bool))
    assert lp.variables == () and lp.constraints == ()
    sol = simplex_solve(lp)
    assert sol.objective == 0.0 and sol.integral and sol.status == "optimal"


def test_inconsistent_input(worked):
    design, _, _ = worked
    # test 0 ({c}) positive, test 1 ({a,c}) negative: c is eliminated yet must explain test 0
    with pytest.raises(InconsistentInputError):
        build_relaxation(design, np.array([True, False, False]))
    res = lp_decode(design, np.array([True, False, False]))
    assert res.failed and not res.satisfying


def test_worked_simplex(worked):
    design, _, y = worked
    sol = simplex_solve(build_relaxation(design, y))
    assert sol.objective == pytest.approx(2.0, abs=1e-9)
    assert sol.values[A] == pytest.approx(1.0)
    assert sol.values[B] + sol.values[D] == pytest.approx(1.0)
    assert sol.integral
    # Bland's rule lands on z_b = 1 here
    assert sol.values[B] == 1.0
    assert round_solution(sol, "malioutov") == ItemSet.of([A, B])


def test_triangle_is_fractional():
    lp = CoverLp(3, (0, 1, 2), ((0, 1), (1, 2), (0, 2)))
    sol = simplex_solve(lp)
    assert sol.objective == pytest.approx(1.5)
    np.testing.assert_allclose(sol.values, 0.5, atol=1e-9)
    assert not sol.integral


def test_rounding_rules_on_fractional():
    sol = LpSolution(np.array([0.5, 0.5]), 1.0, "optimal", False)
    assert round_solution(sol, "malioutov") == ItemSet.of([0, 1])
    assert round_solution(sol, "half") == ItemSet.of([0, 1])
    with pytest.raises(RoundingError):
        round_solution(sol, "crude")
    sol = LpSolution(np.array([0.25, 0.75, 0.0]), 1.0, "optimal", False)
    assert round_solution(sol, "half") == ItemSet.of([1])
    assert round_solution(sol, "malioutov") == ItemSet.of([0, 1])


@pytest.mark.parametrize("rule", ["malioutov", "half", "crude", "randomized"])
def test_all_rules_agree_on_integral(rule):
    sol = LpSolution(np.array([1.0, 0.0, 0.0]), 1.0, "optimal", True)
    assert round_solution(sol, rule, np.random.default_rng(0)) == ItemSet.of([0])


def test_unknown_rule():
    sol = LpSolution(np.array([1.0]), 1.0, "optimal", True)
    with pytest.raises(ValueError):
        round_solution(sol, "ceil")


def test_randomized_mean_size_matches_objective():
    lp = CoverLp(3, (0, 1, 2), ((0, 1), (1, 2), (0, 2)))
    sol = simplex_solve(lp)
    rng = np.random.default_rng(2)
    sizes = np.array([len(round_solution(sol, "randomized", rng)) for _ in range(20_000)])
    se = sizes.std() / np.sqrt(sizes.size)
    assert abs(sizes.mean() - sol.objective) < 4 * se


def test_crude_failure_is_decode_failure():
    # two positive tests {0,1}, {1,2}, {0,2} make the LP fractional
    design = TestDesign(np.array([[1, 1, 0], [0, 1, 1], [1, 0, 1]], dtype=bool))
    y = np.ones(3, dtype=bool)
    res = lp_decode(design, y, "crude")
    assert res.failed and res.estimate == ItemSet()
    assert lp_decode(design, y, "half").estimate == ItemSet.of([0, 1, 2])


def test_dd_satisfying_forces_dd_indicator():
    rng = np.random.default_rng(12)
    hits = 0
    for _ in range(300):
        design = bernoulli_design(60, 40, 0.2, rng)
        k = sample_defective_set(60, 3, rng)
        y = compute_outcomes(design, k)
        dd = dd_decode(design, y)
        if not dd.satisfying:
            continue
        hits += 1
        lp = build_relaxation(design, y)
        # DD indicator is feasible with objective |DD|
        assert all(set(c) & set(dd.estimate) for c in lp.constraints)
        sol = simplex_solve(lp)
        assert sol.integral
        assert sol.objective == pytest.approx(len(dd.estimate))
        np.testing.assert_allclose(sol.values, dd.estimate.mask(60), atol=1e-9)
        for rule in ("malioutov", "half", "crude", "randomized"):
            assert lp_decode(design, y, rule, np.random.default_rng(0)).estimate == dd.estimate
    assert hits > 50


def test_iteration_cap():
    a = random_cover(np.random.default_rng(3), 6, 8)
    with pytest.raises(SolverError):
        simplex_solve(cover_from_matrix(a), max_iter=0)


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32))
def test_simplex_against_vertices_and_scipy(seed):
    rng = np.random.default_rng(seed)
    a = random_cover(rng)
    lp = cover_from_matrix(a)
    sol = simplex_solve(lp)
    assert sol.status == "optimal"
    assert sol.objective == pytest.approx(vertex_minimum(a), abs=1e-7)
    ref = linprog(np.ones(a.shape[1]), A_ub=-a, b_ub=-np.ones(a.shape[0]), bounds=(0, None))
    assert sol.objective == pytest.approx(ref.fun, abs=1e-7)
    # solution invariants
    assert np.all(sol.values >= -1e-9)
    assert np.all(a @ sol.values >= 1 - 1e-9)
    assert sol.objective == pytest.approx(sol.values.sum(), abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32))
def test_duplicates_and_order_do_not_change_objective(seed):
    rng = np.random.default_rng(seed)
    a = random_cover(rng)
    base = simplex_solve(cover_from_matrix(a)).objective
    shuffled = a[rng.permutation(len(a))]
    doubled = np.vstack([a, a[rng.integers(len(a), size=3)]])
    for variant in (shuffled, doubled):
        lp = cover_from_matrix(variant)
        assert simplex_solve(lp).objective == pytest.approx(base, abs=1e-9)
        assert lp.matrix(dedupe=False).shape[0] == len(variant)


@settings(max_examples=150, deadline=None)
@given(seed=st.integers(0, 2**32), n=st.integers(3, 15), t=st.integers(2, 15), k=st.integers(1, 4))
def test_lp_bound_below_smallest_satisfying(seed, n, t, k):
    rng = np.random.default_rng(seed)
    design = bernoulli_design(n, t, 0.25, rng)
    defectives = sample_defective_set(n, min(k, n), rng)
    y = compute_outcomes(design, defectives)
    sol = simplex_solve(build_relaxation(design, y))
    best = smallest_satisfying_oracle(design, y)
    assert sol.objective <= best.size + 1e-9


def test_dump_round_trip(worked):
    design, _, y = worked
    lp = build_relaxation(design, y)
    text = dump_lp(lp)
    assert ">=1: 0\n>=1: 1 3\n" in text
    assert parse_lp(text) == lp
    bare = parse_lp(">=1: 0\n>=1: 3 1\n")
    assert bare.constraints == ((0,), (1, 3))
    assert simplex_solve(bare).objective == pytest.approx(2.0)
