"""Measurement harness: sup-error estimation, subset-sum scaling sweeps,
constant calibration and the per-weight subset-sum experiment."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, stats

from .distributions import HALF_LN2, Distribution, cdf, pdf
from .errors import CapacityError, ShapeError
from .rng import derive_rng
from .subsetsum import ENUM_MAX_N, SubsetSumInstance, estimate_coverage_probability, solve_subset_sum
from .tensor import DenseNetwork, forward, masked_forward, sample_unit_sphere

SWEEP_HEADER = ("epsilon", "delta", "n", "prob", "ci_lo", "ci_hi", "trials", "seed")
PER_WEIGHT_HEADER = ("layer", "i", "j", "target_w", "achieved_error", "subset_size", "feasible")


@dataclass(frozen=True)
class SweepRow:
    eps: float
    delta: float
    minimal_n: int
    coverage_prob: float
    ci: tuple
    trials: int
    dist: str
    seed: int
    saturated: bool = False

    def csv_row(self):
        return (self.eps, self.delta, self.minimal_n, self.coverage_prob,
                self.ci[0], self.ci[1], self.trials, self.seed)


@dataclass(frozen=True)
class LogFit:
    slope: float
    intercept: float
    r2: float


def sup_error_estimate(f: DenseNetwork, g_masked, n_samples: int = 10_000, seed: int = 0) -> float:
    """Largest ``||f(x) - g(x)||`` over ``n_samples`` points on the unit sphere.

    Both maps are positively homogeneous, so the sup over the ball is attained
    on the sphere. Samples for a smaller ``n_samples`` are a prefix of those for
    a larger one.
    """
    g, masks = g_masked
    if f.in_dim != g.in_dim or f.out_dim != g.out_dim:
        raise ShapeError(
            f"target maps R^{f.in_dim} -> R^{f.out_dim} but pruned net maps "
            f"R^{g.in_dim} -> R^{g.out_dim}"
        )
    x = sample_unit_sphere(f.in_dim, seed, n_samples)
    diff = forward(f, x) - masked_forward(g, masks, x)
    return float(np.linalg.norm(diff, axis=1).max())


def fit_log_law(eps_values, ns) -> LogFit:
    """Least-squares fit of ``n = slope * ln(1/eps) + intercept``."""
    x = np.log(1.0 / np.asarray(eps_values, dtype=np.float64))
    y = np.asarray(ns, dtype=np.float64)
    if x.size < 2 or np.ptp(x) == 0.0:
        return LogFit(math.nan, math.nan, math.nan)
    res = stats.linregress(x, y)
    return LogFit(float(res.slope), float(res.intercept), float(res.rvalue ** 2))


def minimal_n(dist, eps, delta, trials, seed, lo=-0.5, hi=0.5, n_max=ENUM_MAX_N, workers=1):
    """Smallest ``n <= n_max`` whose estimated coverage reaches ``1 - delta``.

    Each trial's n-value draw is a prefix of its (n+1)-value draw, so coverage
    is monotone in ``n`` trial by trial. The search brackets the answer by
    doubling ``n`` and then bisects, which keeps large (expensive) ``n`` out of
    reach unless needed. Returns ``(n, prob, ci, saturated)``; when even
    ``n_max`` falls short, ``n = n_max`` and ``saturated`` is true.
    """
    def reaches(n):
        p, ci = estimate_coverage_probability(dist, n, eps, lo, hi, trials, seed, workers)
        return p >= 1.0 - delta, p, ci

    a, b = 0, 1  # coverage fails at a; b is the next probe
    while True:
        ok, p, ci = reaches(b)
        if ok:
            break
        if b == n_max:
            return n_max, p, ci, True
        a, b = b, min(2 * b, n_max)
    best = (p, ci)
    while b - a > 1:
        mid = (a + b) // 2
        ok, p, ci = reaches(mid)
        if ok:
            b, best = mid, (p, ci)
        else:
            a = mid
    return b, best[0], best[1], False


def lueker_sweep(eps_list, delta, dist: Distribution, trials=200, seed=0, lo=-0.5, hi=0.5,
                 n_max=ENUM_MAX_N, workers=1):
    """Minimal subset-sum size per eps and its fit against ``ln(1/eps)``.

    Saturated rows are excluded from the fit.
    """
    rows = []
    for eps in eps_list:
        if not 0.0 < eps < 1.0:
            raise ValueError(f"eps must lie in (0, 1), got {eps}")
        n, p, ci, sat = minimal_n(dist, eps, delta, trials, seed, lo, hi, n_max, workers)
        rows.append(SweepRow(float(eps), float(delta), n, p, ci, trials, dist.tag, seed, sat))
    ok = [r for r in rows if not r.saturated]
    fit = fit_log_law([r.eps for r in ok], [r.minimal_n for r in ok])
    return rows, fit


def calibrate_C(delta, eps, dist: Distribution, trials=200, seed=0, lo=-0.5, hi=0.5,
                n_max=ENUM_MAX_N, workers=1) -> float:
    """Empirical constant ``minimal_n / ln(2 / min(eps, delta))``."""
    n, p, _, sat = minimal_n(dist, eps, delta, trials, seed, lo, hi, n_max, workers)
    if sat:
        raise CapacityError(
            f"coverage only reached {p:.3f} < {1 - delta} at n = {n_max}; raise n_max or eps"
        )
    return n / math.log(2.0 / min(eps, delta))


def per_weight_report(target: DenseNetwork, n: int, eps: float, dist: Distribution = None,
                      seed: int = 0):
    """Approximate every target weight by a subset sum of ``n`` fresh coefficients.

    Returns rows ``(layer, i, j, target_w, achieved_error, subset_size, feasible)``
    in layer, row, column order.
    """
    dist = Distribution.uniform(-1.0, 1.0) if dist is None else dist
    rows = []
    for layer, w in enumerate(target.layers):
        for i in range(w.shape[0]):
            for j in range(w.shape[1]):
                coeffs = dist.sample(derive_rng(seed, "per_weight", layer, i, j), n)
                sel = solve_subset_sum(SubsetSumInstance(coeffs, w[i, j], eps))
                rows.append((layer, i, j, float(w[i, j]), sel.abs_error, sel.size, sel.feasible))
    return rows


def random_weight_target(rows: int, cols: int, seed: int = 0, scale: float = 0.5) -> DenseNetwork:
    """Single-layer target with i.i.d. weights in ``[-scale, scale]``."""
    rng = derive_rng(seed, "per_weight_target")
    return DenseNetwork([rng.uniform(-scale, scale, (rows, cols))])


def density_check(n_samples: int = 100_000, seed: int = 0, grid_points: int = 10_000) -> dict:
    """Check the product-of-uniforms law: density value, total mass, sampler fit, lower bound."""
    dist = Distribution.product_uniform()
    # quad never evaluates the endpoints, so the singularity at 0 is not touched
    neg, err_neg = integrate.quad(lambda z: pdf(dist, z), -1.0, 0.0, limit=200)
    pos, err_pos = integrate.quad(lambda z: pdf(dist, z), 0.0, 1.0, limit=200)
    draws = dist.sample(derive_rng(seed, "density_check"), n_samples)
    ks = stats.kstest(draws, lambda z: cdf(dist, z))
    grid = np.linspace(1e-9, 0.5, grid_points)
    grid = np.concatenate([-grid, grid])
    return {
        "pdf_half": pdf(dist, 0.5),
        "half_ln2": HALF_LN2,
        "mass": neg + pos,
        "quad_error": err_neg + err_pos,
        "ks_statistic": float(ks.statistic),
        "ks_pvalue": float(ks.pvalue),
        "min_pdf_on_half_interval": float(pdf(dist, grid).min()),
    }
