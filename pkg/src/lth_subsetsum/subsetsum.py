"""Exact random subset-sum: solver, enumeration and interval coverage.

Ranking of subsets
------------------
A subset ``S`` is scored by ``|target - fsum(values[S])|`` where ``fsum`` is the
correctly rounded sum, so the score does not depend on summation order. Ties
go to the smaller subset, then to the lexicographically smaller index tuple.
Both solvers below locate candidates with ordinary float sums, keep every
candidate whose float score is within a rounding window of the best one, and
rank those candidates by the exact key. This makes their answers identical
bit for bit.

Zero coefficients never appear in a tie-broken optimum (dropping one keeps the
sum and shrinks the subset), so the meet-in-the-middle solver and the coverage
check discard them before enumerating.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from statsmodels.stats.proportion import proportion_confint

from .distributions import Distribution
from .errors import CapacityError
from .rng import derive_rng

MITM_MAX_N = 46
BRUTE_MAX_N = 20
ENUM_MAX_N = 26
# coefficients drawn per coverage trial; a fixed stream length makes the
# n-value instance a prefix of the (n+1)-value one
TRIAL_STREAM_LEN = 64
_CHUNK = 1 << 18


@dataclass(frozen=True)
class SubsetSumInstance:
    values: tuple
    target: float
    tolerance: float = math.inf

    def __init__(self, values, target, tolerance=math.inf):
        vals = tuple(float(v) for v in np.asarray(values, dtype=np.float64).ravel())
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("values must be finite")
        if not math.isfinite(float(target)):
            raise ValueError("target must be finite")
        if not tolerance > 0:
            raise ValueError("tolerance must be positive")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "target", float(target))
        object.__setattr__(self, "tolerance", float(tolerance))

    @property
    def n(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class SubsetSelection:
    indices: tuple
    achieved_sum: float
    abs_error: float
    feasible: bool = True

    @property
    def size(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class CoverageResult:
    covered: bool
    worst_gap: float
    boundary_slack: tuple = field(default=(0.0, 0.0))
    sum_count: int = 0


def _exact_key(values, target, idx):
    s = math.fsum(values[i] for i in idx)
    return (abs(target - s), len(idx), idx), s


def _rounding_window(values, target) -> float:
    # bound on |float sum - exact sum| for any subset, with a wide margin
    n = max(len(values), 1)
    scale = math.fsum(abs(v) for v in values) + abs(target) + 1.0
    return 64.0 * n * np.finfo(np.float64).eps * scale


def _select(values, target, tolerance, candidates) -> SubsetSelection:
    best = None
    for idx in candidates:
        key, s = _exact_key(values, target, idx)
        if best is None or key < best[0]:
            best = (key, s)
    (err, _, idx), s = best
    return SubsetSelection(idx, s, err, err <= tolerance)


def _half_table(vals: np.ndarray):
    """All subset sums of ``vals`` with their bitmasks, in bitmask order."""
    sums = np.zeros(1)
    masks = np.zeros(1, dtype=np.int64)
    for i, v in enumerate(vals):
        sums = np.concatenate([sums, sums + v])
        masks = np.concatenate([masks, masks | (1 << i)])
    return sums, masks


def _bits(mask: int, offset: int, positions) -> list:
    out = []
    b = 0
    while mask:
        if mask & 1:
            out.append(positions[offset + b])
        mask >>= 1
        b += 1
    return out


def solve_subset_sum(inst: SubsetSumInstance) -> SubsetSelection:
    """Minimize ``|target - sum(values[S])|`` over all subsets by meet in the middle.

    The returned selection has ``feasible=False`` when the optimum misses the
    instance tolerance; it is still the optimum.
    """
    values, target = inst.values, inst.target
    nz = [i for i, v in enumerate(values) if v != 0.0]
    if len(nz) > MITM_MAX_N:
        raise CapacityError(
            f"meet-in-the-middle handles at most {MITM_MAX_N} non-zero values, got {len(nz)}"
        )
    if not nz:
        return _select(values, target, inst.tolerance, [()])

    v = np.array([values[i] for i in nz])
    n1 = len(nz) // 2
    left_s, left_m = _half_table(v[:n1])
    right_s, right_m = _half_table(v[n1:])
    order = np.argsort(right_s, kind="stable")
    right_s, right_m = right_s[order], right_m[order]
    last = right_s.size - 1

    # pass 1: best float error
    best = math.inf
    for lo in range(0, left_s.size, _CHUNK):
        r = target - left_s[lo:lo + _CHUNK]
        pos = np.searchsorted(right_s, r)
        e = np.minimum(
            np.abs(r - right_s[np.minimum(pos, last)]),
            np.abs(r - right_s[np.maximum(pos - 1, 0)]),
        )
        best = min(best, float(e.min()))

    # pass 2: every pair inside the rounding window around the best
    w = best + 2.0 * _rounding_window(values, target)
    candidates = []
    for lo in range(0, left_s.size, _CHUNK):
        r = target - left_s[lo:lo + _CHUNK]
        a = np.searchsorted(right_s, r - w, side="left")
        b = np.searchsorted(right_s, r + w, side="right")
        for li in np.nonzero(b > a)[0]:
            lm = int(left_m[lo + li])
            left_idx = _bits(lm, 0, nz)
            for rj in range(a[li], b[li]):
                idx = left_idx + _bits(int(right_m[rj]), n1, nz)
                candidates.append(tuple(sorted(idx)))
    return _select(values, target, inst.tolerance, candidates)


def brute_force_solve(inst: SubsetSumInstance) -> SubsetSelection:
    """Exhaustive reference solver over all ``2**n`` subsets (``n <= 20``)."""
    n = inst.n
    if n > BRUTE_MAX_N:
        raise CapacityError(f"brute force handles at most {BRUTE_MAX_N} values, got {n}")
    codes = np.arange(1 << n, dtype=np.int64)
    sums = np.zeros(codes.size)
    for i, v in enumerate(inst.values):
        sums += np.where((codes >> i) & 1, v, 0.0)
    err = np.abs(inst.target - sums)
    w = err.min() + 2.0 * _rounding_window(inst.values, inst.target)
    candidates = [
        tuple(i for i in range(n) if (int(c) >> i) & 1) for c in codes[err <= w]
    ]
    return _select(inst.values, inst.target, inst.tolerance, candidates)


def enumerate_sums(values) -> np.ndarray:
    """All ``2**n`` subset sums (the empty sum included), sorted ascending."""
    vals = np.asarray(values, dtype=np.float64).ravel()
    if vals.size > ENUM_MAX_N:
        raise CapacityError(f"enumeration handles at most {ENUM_MAX_N} values, got {vals.size}")
    sums = np.zeros(1)
    for v in vals:
        # both halves are already sorted, so the stable sort is a linear merge
        sums = np.sort(np.concatenate([sums, sums + v]), kind="stable")
    return sums


def coverage_check(values, lo: float, hi: float, eps: float) -> CoverageResult:
    """Does every ``z`` in ``[lo, hi]`` have a subset sum within ``eps``?

    ``worst_gap`` is the widest gap between consecutive sums after clipping the
    gap to ``[lo - eps, hi + eps]``; the interval is covered exactly when that
    clipped gap is at most ``2 eps`` and both boundary slacks
    ``(min_sum - lo, hi - max_sum)`` are at most ``eps``.
    """
    if not lo < hi:
        raise ValueError("coverage interval needs lo < hi")
    if not eps > 0:
        raise ValueError("eps must be positive")
    vals = np.asarray(values, dtype=np.float64).ravel()
    vals = vals[vals != 0.0]
    if vals.size > ENUM_MAX_N:
        raise CapacityError(
            f"coverage check handles at most {ENUM_MAX_N} non-zero values, got {vals.size}"
        )
    s = enumerate_sums(vals)
    slack = (float(s[0] - lo), float(hi - s[-1]))
    if s.size > 1:
        gaps = np.minimum(s[1:], hi + eps) - np.maximum(s[:-1], lo - eps)
        worst = max(0.0, float(gaps.max()))
    else:
        worst = 0.0
    covered = worst <= 2.0 * eps and slack[0] <= eps and slack[1] <= eps
    return CoverageResult(bool(covered), worst, slack, int(s.size))


def wilson_interval(successes: int, trials: int, alpha: float = 0.05) -> tuple[float, float]:
    lo, hi = proportion_confint(successes, trials, alpha=alpha, method="wilson")
    return float(lo), float(hi)


def trial_values(dist: Distribution, n: int, seed: int, trial: int) -> np.ndarray:
    """Coefficients for one coverage trial; ``n`` values are a prefix of ``n+1``."""
    rng = derive_rng(seed, "coverage_trial", trial)
    return np.asarray(dist.sample(rng, max(n, TRIAL_STREAM_LEN)))[:n]


def estimate_coverage_probability(
    dist: Distribution,
    n: int,
    eps: float,
    lo: float = -0.5,
    hi: float = 0.5,
    trials: int = 200,
    seed: int = 0,
    workers: int = 1,
):
    """Fraction of seeded trials whose ``n`` draws from ``dist`` eps-cover ``[lo, hi]``.

    Returns ``(prob, (ci_lo, ci_hi))`` with a Wilson 95% interval. Trial ``t``
    uses its own generator derived from ``(seed, t)``, so the estimate does
    not depend on ``workers``.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if n < 0:
        raise ValueError("n must be non-negative")

    def one(t):
        return coverage_check(trial_values(dist, n, seed, t), lo, hi, eps).covered

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            hits = sum(pool.map(one, range(trials)))
    else:
        hits = sum(one(t) for t in range(trials))
    return hits / trials, wilson_interval(hits, trials)
