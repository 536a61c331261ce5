"""Exit criteria, one test per criterion.

A PASS/FAIL line per criterion is printed in the "acceptance criteria"
section of the pytest summary.  Criteria 6, 7 and 9 run full Monte Carlo
sweeps and take a few minutes.
"""
import math

import numpy as np
import pytest

from grouptest.bounds import achieved_rate, capacity, counting_bound_tests, dd_lower_rate, dd_upper_rate, theta_star
from grouptest.decode import comp_decode, dd_decode, is_satisfying, scomp_decode, smallest_satisfying_oracle
from grouptest.design import bernoulli_design, compute_outcomes, sample_defective_set
from grouptest.lp import CoverLp, simplex_solve
from grouptest.sim import AuditReport, SweepConfig, property_p_audit, run_sweep

from lp_oracle import random_cover, vertex_minimum

# t values give DD success near 0.5 for each (n, k, p); 10^5 instances in total
AUDIT_SET = [
    (50, 3, 1 / 4, 24, 33_334),
    (100, 5, 1 / 6, 46, 33_333),
    (500, 10, 1 / 11, 123, 33_333),
]
FIG1 = SweepConfig(n=500, k=10, t_values=tuple(range(50, 301, 10)), trials=1000,
                   decoders=("comp", "dd", "scomp", "lp-malioutov"), master_seed=1)


@pytest.fixture(scope="module")
def audit_reports():
    return [property_p_audit(n, k, p, t, trials, master_seed=2024) for n, k, p, t, trials in AUDIT_SET]


@pytest.fixture(scope="module")
def fig1():
    return run_sweep(FIG1)


def test_ac01_theta_star():
    assert round(theta_star(), 3) == 0.407


@pytest.mark.parametrize("theta", [0.10, 0.20, 0.30, 0.35])
def test_ac02_dd_upper_plateau(theta):
    assert abs(dd_upper_rate(theta) - 0.853) <= 2e-3


def test_ac03_capacity_simplification():
    for th in (0.1, 0.2, 0.33):
        assert abs(capacity(th) - 1.0) <= 1e-3, th
    for th in (0.40, 0.50, 0.75, 0.90):
        assert abs(capacity(th) - 0.531 * (1 - th) / th) <= 1e-3, th


def test_ac04_optimality_boundary():
    thetas = np.round(np.arange(0.01, 1.0, 0.01), 2)
    for th in thetas[thetas >= 0.41]:
        assert abs(dd_upper_rate(th) - capacity(th)) <= 1e-3, th
    for th in thetas[thetas <= 0.39]:
        assert dd_upper_rate(th) < capacity(th) - 0.01, th


def test_ac05_dd_lower_at_knee():
    assert abs(dd_lower_rate(0.5) - 0.5307) <= 1e-4
    assert abs(dd_lower_rate(0.5) - capacity(0.5)) <= 1e-3


def test_ac06_property_p_scomp(audit_reports):
    total = AuditReport(0, 0, 0.0, 0)
    for rep in audit_reports:
        total.merge(rep)
    assert total.instances == 100_000
    assert total.dd_satisfying > 20_000
    assert total.violations["scomp"] == 0
    assert total.violations["scomp-random"] == 0


def test_ac07_property_p_lp(audit_reports):
    for rep in audit_reports:
        assert rep.lp_nonintegral == 0
        assert rep.lp_not_dd_indicator == 0
        for rule in ("malioutov", "half", "crude", "randomized"):
            assert rep.violations[f"lp-{rule}"] == 0, (rep.n, rule)


def test_ac08_oracle_equivalence():
    rep = property_p_audit(12, 3, 1 / 4, 10, 10_000, master_seed=8, oracle=True)
    assert rep.instances == 10_000
    assert rep.oracle_checked == rep.dd_satisfying > 1000
    assert rep.oracle_mismatches == 0


def test_ac09a_matched_dominance(fig1):
    for t in FIG1.t_values:
        for d in ("scomp", "lp-malioutov"):
            assert fig1.points[d, t].dominance_violations == 0, (d, t)


def test_ac09b_curve_ordering(fig1):
    comp, dd, scomp = fig1.curve("comp"), fig1.curve("dd"), fig1.curve("scomp")
    assert np.all(comp <= dd + 0.03)
    assert np.all(dd <= scomp + 0.03)
    assert np.all(scomp <= 1.0)


def test_ac09c_lp_tracks_scomp(fig1):
    gap = np.abs(fig1.curve("scomp") - fig1.curve("lp-malioutov"))
    assert gap.max() <= 0.05


def test_ac10_decoder_micro_oracles():
    rng = np.random.default_rng(10)
    for _ in range(1000):
        n = int(rng.integers(2, 16))
        k = int(rng.integers(0, min(n, 5) + 1))
        t = int(rng.integers(1, 16))
        p = float(rng.choice([0.1, 0.2, 0.3, 0.5]))
        design = bernoulli_design(n, t, p, rng)
        defectives = sample_defective_set(n, k, rng)
        y = compute_outcomes(design, defectives)
        assert comp_decode(design, y).estimate.issuperset(defectives)
        assert dd_decode(design, y).estimate.issubset(defectives)
        sc = scomp_decode(design, y)
        assert sc.satisfying and is_satisfying(design, y, sc.estimate)
        # exhaustive cross-check: the true set is satisfying, so the minimum is no larger
        assert smallest_satisfying_oracle(design, y).size <= k


def test_ac11_simplex_vs_vertex_enumeration():
    rng = np.random.default_rng(11)
    for _ in range(200):
        a = random_cover(rng, max_vars=6)
        nv = a.shape[1]
        lp = CoverLp(nv, tuple(range(nv)), tuple(tuple(np.flatnonzero(r).tolist()) for r in a))
        assert abs(simplex_solve(lp).objective - vertex_minimum(a)) <= 1e-7


def test_ac12_counting_bound():
    bits = counting_bound_tests(500, 10)
    assert abs(bits - math.log2(math.comb(500, 10))) < 1e-9
    assert abs(bits - 67.7) < 0.05
    cross = next(t for t in range(1, 1000) if achieved_rate(500, 10, t) < 0.5)
    assert cross - 1 == 135
