import math

import numpy as np
import pytest

from lth_subsetsum.distributions import HALF_LN2, Distribution
from lth_subsetsum.errors import CapacityError, ShapeError
from lth_subsetsum.evalbench import (
    PER_WEIGHT_HEADER,
    calibrate_C,
    density_check,
    fit_log_law,
    lueker_sweep,
    minimal_n,
    per_weight_report,
    random_weight_target,
    sup_error_estimate,
)
from lth_subsetsum.gadgets import linearize
from lth_subsetsum.subsetsum import estimate_coverage_probability
from lth_subsetsum.tensor import DenseNetwork, MaskSet, forward, masked_forward, random_network, spectral_norm

U = Distribution.uniform()


# ---- sup error ----

def test_sup_error_identical_is_zero():
    net = random_network([3, 4, 2], seed=0)
    assert sup_error_estimate(net, (net, MaskSet.ones_like(net)), 1000) == 0.0


def test_sup_error_linearized_oracle():
    rng = np.random.default_rng(1)
    w, w2 = rng.uniform(-1, 1, (2, 2)), rng.uniform(-1, 1, (2, 2))
    f, g = linearize(w), linearize(w2)
    est = sup_error_estimate(f, (g, MaskSet.ones_like(g)), 100_000)
    true = spectral_norm(w - w2)
    # power iteration is accurate to 1e-9 relative
    assert est <= true * (1 + 1e-9)
    assert est >= 0.98 * true


def test_sup_error_homogeneity_spot_check():
    f = random_network([3, 5, 2], seed=2)
    g = random_network([3, 5, 2], seed=3)
    m = MaskSet.ones_like(g)
    x = np.random.default_rng(0).normal(size=(50, 3))
    e1 = np.linalg.norm(forward(f, x) - masked_forward(g, m, x), axis=1)
    e2 = np.linalg.norm(forward(f, 0.5 * x) - masked_forward(g, m, 0.5 * x), axis=1)
    assert np.allclose(e2, 0.5 * e1, rtol=1e-12)


def test_sup_error_nested_monotone():
    f = random_network([3, 5, 2], seed=2)
    g = random_network([3, 5, 2], seed=3)
    m = MaskSet.ones_like(g)
    vals = [sup_error_estimate(f, (g, m), n, seed=4) for n in (10, 100, 1000, 10_000)]
    assert all(a <= b for a, b in zip(vals, vals[1:]))


def test_sup_error_shape_mismatch():
    f = random_network([3, 2], seed=0)
    g = random_network([4, 2], seed=0)
    with pytest.raises(ShapeError):
        sup_error_estimate(f, (g, MaskSet.ones_like(g)), 10)


# ---- fit ----

def test_fit_recovers_synthetic_law():
    eps = np.array([0.2, 0.1, 0.05, 0.02, 0.01])
    ns = 2.5 * np.log(1 / eps) + 3.0
    fit = fit_log_law(eps, ns)
    assert fit.slope == pytest.approx(2.5, rel=0.05)
    assert fit.r2 == pytest.approx(1.0)
    noisy = ns + np.array([0.3, -0.2, 0.1, -0.3, 0.2])
    assert fit_log_law(eps, noisy).slope == pytest.approx(2.5, rel=0.05)


def test_fit_degenerate():
    assert math.isnan(fit_log_law([0.1], [5]).slope)


# ---- minimal n and sweep ----

def test_minimal_n_is_minimal():
    n, p, ci, sat = minimal_n(U, 0.05, 0.1, trials=100, seed=3)
    assert not sat and p >= 0.9
    assert estimate_coverage_probability(U, n - 1, 0.05, trials=100, seed=3)[0] < 0.9


def test_minimal_n_saturates():
    n, p, ci, sat = minimal_n(U, 0.001, 0.1, trials=20, seed=0, n_max=6)
    assert sat and n == 6 and p < 0.9


def test_sweep_small():
    rows, fit = lueker_sweep([0.2, 0.05, 0.01], 0.1, U, trials=60, seed=1)
    assert [r.eps for r in rows] == [0.2, 0.05, 0.01]
    assert rows[0].minimal_n <= rows[-1].minimal_n
    assert fit.slope > 0
    assert rows[0].csv_row()[:2] == (0.2, 0.1)


def test_sweep_normal_finite():
    rows, _ = lueker_sweep([0.2, 0.1], 0.1, Distribution.normal(), trials=50, seed=0)
    assert all(not r.saturated for r in rows)


def test_sweep_rejects_bad_eps():
    with pytest.raises(ValueError):
        lueker_sweep([1.5], 0.1, U, trials=5)


def test_sweep_deterministic():
    a = lueker_sweep([0.1, 0.05], 0.1, U, trials=40, seed=7)
    b = lueker_sweep([0.1, 0.05], 0.1, U, trials=40, seed=7, workers=4)
    assert a == b


# ---- calibration ----

def test_calibrate_by_construction():
    C = calibrate_C(0.1, 0.1, U, trials=100, seed=0)
    n = math.ceil(C * math.log(2 / 0.1) - 1e-9)
    assert estimate_coverage_probability(U, n, 0.1, trials=100, seed=0)[0] >= 0.9
    assert C <= 26 / math.log(2 / 0.2)


def test_calibrate_seed_stability():
    a = calibrate_C(0.1, 0.05, U, trials=200, seed=0)
    b = calibrate_C(0.1, 0.05, U, trials=200, seed=1)
    assert abs(a - b) <= 0.2 * a


def test_calibrate_saturation_raises():
    with pytest.raises(CapacityError):
        calibrate_C(0.1, 0.001, U, trials=10, n_max=5)


# ---- per weight ----

def test_per_weight_zero_target():
    rows = per_weight_report(DenseNetwork([np.zeros((3, 2))]), 5, 0.01)
    assert all(r[4] == 0.0 and r[5] == 0 and r[6] for r in rows)


def test_per_weight_rows_and_count():
    target = random_weight_target(100, 10, seed=0)
    assert np.abs(target.layers[0]).max() <= 0.5
    rows = per_weight_report(target, 21, 0.01, seed=0)
    assert len(rows) == 1000 and len(rows[0]) == len(PER_WEIGHT_HEADER)
    assert 21 * len(rows) == 21000
    assert [r[:3] for r in rows[:3]] == [(0, 0, 0), (0, 0, 1), (0, 0, 2)]
    assert sum(r[4] <= 0.01 for r in rows) >= 990


def test_per_weight_deterministic():
    t = random_weight_target(5, 4, seed=1)
    assert per_weight_report(t, 10, 0.01, seed=2) == per_weight_report(t, 10, 0.01, seed=2)


# ---- density ----

def test_density_check_values():
    r = density_check(n_samples=20_000)
    assert r["pdf_half"] == HALF_LN2
    assert abs(r["mass"] - 1.0) <= 1e-6
    assert r["ks_pvalue"] > 0.01
    assert r["min_pdf_on_half_interval"] >= HALF_LN2
