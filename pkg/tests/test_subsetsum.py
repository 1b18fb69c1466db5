import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lth_subsetsum.distributions import Distribution
from lth_subsetsum.errors import CapacityError
from lth_subsetsum.evalbench import calibrate_C
from lth_subsetsum.subsetsum import (
    SubsetSumInstance,
    brute_force_solve,
    coverage_check,
    enumerate_sums,
    estimate_coverage_probability,
    solve_subset_sum,
    trial_values,
    wilson_interval,
)


def _oracle(values, target):
    """Plain itertools reference with the same exact ranking key."""
    best = None
    for r in range(len(values) + 1):
        for idx in itertools.combinations(range(len(values)), r):
            s = math.fsum(values[i] for i in idx)
            key = (abs(target - s), len(idx), idx)
            if best is None or key < best:
                best = key
    return best


# ---- instance validation ----

def test_instance_validation():
    with pytest.raises(ValueError):
        SubsetSumInstance([np.inf], 0.0)
    with pytest.raises(ValueError):
        SubsetSumInstance([1.0], np.nan)
    with pytest.raises(ValueError):
        SubsetSumInstance([1.0], 0.0, tolerance=0.0)


# ---- solver examples ----

def test_solve_small_example():
    sel = solve_subset_sum(SubsetSumInstance([0.3, -0.2, 0.7], 0.5))
    assert sel.indices == (1, 2)
    assert sel.abs_error == pytest.approx(0.0, abs=1e-15)


def test_solve_target_zero_gives_empty():
    vals = np.random.default_rng(0).uniform(-1, 1, 15)
    sel = solve_subset_sum(SubsetSumInstance(vals, 0.0))
    assert sel.indices == () and sel.abs_error == 0.0


def test_brute_single_value():
    sel = brute_force_solve(SubsetSumInstance([0.4], 0.4))
    assert sel.indices == (0,) and sel.abs_error == 0.0
    sel = brute_force_solve(SubsetSumInstance([0.4], -0.1))
    assert sel.indices == () and sel.abs_error == pytest.approx(0.1)


def test_solve_empty_values():
    sel = solve_subset_sum(SubsetSumInstance([], 0.3))
    assert sel.indices == () and sel.abs_error == pytest.approx(0.3)


def test_cardinality_tie_break():
    # {0} and {1, 2} both reach 0.5 exactly
    sel = solve_subset_sum(SubsetSumInstance([0.5, 0.25, 0.25], 0.5))
    assert sel.indices == (0,)


def test_lexicographic_tie_break():
    sel = solve_subset_sum(SubsetSumInstance([0.25, 0.5, 0.25, 0.5], 0.75))
    assert sel.indices == (0, 1)
    assert brute_force_solve(SubsetSumInstance([0.25, 0.5, 0.25, 0.5], 0.75)).indices == (0, 1)


def test_zero_values_never_selected():
    sel = solve_subset_sum(SubsetSumInstance([0.0, 0.3, 0.0, 0.2], 0.5))
    assert sel.indices == (1, 3)


def test_infeasible_flag():
    sel = solve_subset_sum(SubsetSumInstance([0.1], 0.5, tolerance=0.05))
    assert not sel.feasible
    assert sel.indices == (0,) and sel.abs_error == pytest.approx(0.4)


def test_selection_invariants():
    rng = np.random.default_rng(3)
    for n in range(1, 30, 3):
        vals = rng.uniform(-1, 1, n)
        t = rng.uniform(-2, 2)
        sel = solve_subset_sum(SubsetSumInstance(vals, t))
        assert list(sel.indices) == sorted(set(sel.indices))
        assert all(0 <= i < n for i in sel.indices)
        s = math.fsum(vals[list(sel.indices)])
        assert sel.achieved_sum == s
        assert sel.abs_error == abs(t - s)


def test_solve_matches_itertools_oracle():
    rng = np.random.default_rng(4)
    for _ in range(200):
        n = int(rng.integers(0, 11))
        vals = rng.uniform(-1, 1, n).tolist()
        t = float(rng.uniform(-1, 1))
        err, _, idx = _oracle(vals, t)
        sel = solve_subset_sum(SubsetSumInstance(vals, t))
        assert sel.indices == idx and sel.abs_error == err


def test_solver_equivalence_with_duplicates():
    # quantized values produce many exact ties
    rng = np.random.default_rng(5)
    for _ in range(200):
        n = int(rng.integers(1, 13))
        vals = rng.integers(-4, 5, n) / 8.0
        t = rng.integers(-8, 9) / 8.0
        a = solve_subset_sum(SubsetSumInstance(vals, t))
        b = brute_force_solve(SubsetSumInstance(vals, t))
        assert a.indices == b.indices and a.abs_error == b.abs_error


def test_solve_per_weight_success_rate():
    # n = 21, eps = 0.01, target in [-0.5, 0.5]: at least 99% of 1000 within eps
    hits = 0
    rng = np.random.default_rng(21)
    for _ in range(1000):
        vals = rng.uniform(-1, 1, 21)
        t = rng.uniform(-0.5, 0.5)
        hits += solve_subset_sum(SubsetSumInstance(vals, t, 0.01)).feasible
    assert hits >= 990


def test_capacity_limits():
    with pytest.raises(CapacityError):
        brute_force_solve(SubsetSumInstance(np.ones(21), 0.0))
    with pytest.raises(CapacityError):
        solve_subset_sum(SubsetSumInstance(np.ones(47), 0.0))
    with pytest.raises(CapacityError):
        enumerate_sums(np.ones(27))
    # zeros do not count towards the solver's limit
    vals = np.concatenate([np.zeros(10), np.full(5, 0.1)])
    assert solve_subset_sum(SubsetSumInstance(np.concatenate([vals, np.zeros(40)]), 0.3)).size == 3


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-1, 1), max_size=12), st.floats(-3, 3))
def test_solver_equivalence_property(values, target):
    a = solve_subset_sum(SubsetSumInstance(values, target))
    b = brute_force_solve(SubsetSumInstance(values, target))
    assert a.indices == b.indices and a.abs_error == b.abs_error


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=1, max_size=10), st.floats(-3, 3))
def test_solver_is_optimal_over_sums(values, target):
    sel = solve_subset_sum(SubsetSumInstance(values, target))
    sums = enumerate_sums(values)
    assert sel.abs_error <= np.abs(target - sums).min() + 1e-12


# ---- enumeration ----

def test_enumerate_examples():
    assert enumerate_sums([]).tolist() == [0.0]
    assert enumerate_sums([0.5]).tolist() == [0.0, 0.5]
    assert np.allclose(enumerate_sums([0.3, -0.2]), [-0.2, 0.0, 0.1, 0.3])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1, 1), max_size=12))
def test_enumerate_properties(values):
    s = enumerate_sums(values)
    assert s.size == 2 ** len(values)
    assert np.all(np.diff(s) >= 0)
    assert 0.0 in s


# ---- coverage ----

def _grid_oracle(values, lo, hi, eps, points=10_000):
    s = enumerate_sums(values)
    z = np.linspace(lo, hi, points)
    pos = np.clip(np.searchsorted(s, z), 1, s.size - 1) if s.size > 1 else np.zeros(z.size, int)
    d = np.minimum(np.abs(z - s[pos]), np.abs(z - s[np.maximum(pos - 1, 0)]))
    return float(d.max())


def test_coverage_examples():
    r = coverage_check([0.5], -0.5, 0.5, 0.25)
    assert not r.covered and r.boundary_slack[0] == pytest.approx(0.5)
    r = coverage_check([-0.5, 0.25, 0.5, -0.25], -0.5, 0.5, 0.25)
    assert r.covered
    assert _grid_oracle([-0.5, 0.25, 0.5, -0.25], -0.5, 0.5, 0.25) <= 0.25 + 1e-12


def test_coverage_wide_eps():
    r = coverage_check(np.random.default_rng(0).uniform(-1, 1, 5), -0.5, 0.5, 0.5)
    assert r.covered
    assert coverage_check([], -0.5, 0.5, 0.5).covered
    assert not coverage_check([], -0.5, 0.5, 0.49).covered


def test_coverage_gap_outside_interval_ignored():
    # a wide gap above hi + eps must not matter
    assert coverage_check([0.1, -0.1, 5.0], -0.1, 0.1, 0.06).covered


def test_coverage_validation():
    with pytest.raises(ValueError):
        coverage_check([0.1], 0.5, 0.5, 0.1)
    with pytest.raises(ValueError):
        coverage_check([0.1], -0.5, 0.5, 0.0)
    with pytest.raises(CapacityError):
        coverage_check(np.full(27, 0.01), -0.5, 0.5, 0.1)


def test_coverage_agrees_with_grid_oracle():
    rng = np.random.default_rng(8)
    disagreements = 0
    for _ in range(200):
        n = int(rng.integers(1, 17))
        vals = rng.uniform(-1, 1, n)
        eps = float(rng.uniform(0.005, 0.2))
        r = coverage_check(vals, -0.5, 0.5, eps)
        d = _grid_oracle(vals, -0.5, 0.5, eps)
        h = 1.0 / 9999  # grid spacing
        if r.covered:
            assert d <= eps + 1e-12
        elif d <= eps - h:
            disagreements += 1
    assert disagreements == 0


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1, 1), max_size=10), st.floats(0.01, 0.5))
def test_coverage_exact_criterion_property(values, eps):
    r = coverage_check(values, -0.5, 0.5, eps)
    expected = r.worst_gap <= 2 * eps and max(r.boundary_slack) <= eps
    assert r.covered == expected
    if r.covered:
        assert _grid_oracle(values, -0.5, 0.5, eps, 2001) <= eps + 1e-12


# ---- probability estimates ----

def test_wilson_interval():
    lo, hi = wilson_interval(0, 200)
    assert lo == 0.0 and 0 < hi < 0.03
    lo, hi = wilson_interval(100, 200)
    assert lo < 0.5 < hi


def test_coverage_one_value_never_covers():
    p, ci = estimate_coverage_probability(Distribution.uniform(), 1, 0.01, trials=50)
    assert p == 0.0 and ci[0] == 0.0


def test_trial_values_prefix():
    d = Distribution.uniform()
    assert np.array_equal(trial_values(d, 5, 3, 7), trial_values(d, 12, 3, 7)[:5])


def test_coverage_workers_invariant():
    d = Distribution.uniform()
    a = estimate_coverage_probability(d, 10, 0.05, trials=60, seed=4, workers=1)
    b = estimate_coverage_probability(d, 10, 0.05, trials=60, seed=4, workers=4)
    assert a == b


def test_coverage_monotone_in_n():
    d = Distribution.uniform()
    probs = [estimate_coverage_probability(d, n, 0.05, trials=100, seed=2)[0] for n in range(2, 15)]
    # prefix draws make this exact, no CI slack needed
    assert all(a <= b for a, b in zip(probs, probs[1:]))


def test_calibrated_uniform_reaches_target():
    d = Distribution.uniform()
    C = calibrate_C(0.05, 0.05, d, trials=200, seed=0)
    n = math.ceil(C * math.log(2 / 0.05) - 1e-12)
    p, _ = estimate_coverage_probability(d, n, 0.05, trials=200, seed=0)
    assert p >= 0.95


def test_calibrated_half_product_reaches_target():
    d = Distribution.half_product_atom()
    C = calibrate_C(0.05, 0.05, d, trials=200, seed=0, n_max=34)
    n = math.ceil(C * math.log(2 / 0.05) - 1e-12)
    p, _ = estimate_coverage_probability(d, n, 0.05, trials=200, seed=0)
    assert p >= 1 - 0.05
