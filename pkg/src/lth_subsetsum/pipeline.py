"""End-to-end pruning of a random 2l-layer network onto an l-layer target.

Target layer ``i`` (``d_i x d_{i-1}``) is matched by random layers ``2i-1``
(``h_i x d_{i-1}``) and ``2i`` (``d_i x h_i``) with ``h_i = d_{i-1} k_i`` and
``k_i = ceil(C log(d_{i-1} d_i l / min(eps, delta)))`` rounded up to even.

Error composition: if layer ``i`` of the pruned net is within ``eta_i ||x||`` of
``W_i x`` and every ``||W_i|| <= 1``, the whole network is within
``prod(1 + eta_i) - 1`` on the unit ball. With ``eta_i = eps/2l`` that is
``(1 + eps/2l)^l - 1 < exp(eps/2) - 1 < eps``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .distributions import Distribution
from .errors import DomainError
from .evalbench import sup_error_estimate
from .gadgets import build_layer_gadget
from .tensor import DenseNetwork, MaskSet, random_network, spectral_norm

DEFAULT_C = 10.0
NORM_SLACK = 1e-6


@dataclass(frozen=True)
class WidthPlan:
    target_widths: tuple
    random_widths: tuple
    block_sizes: tuple
    per_layer_eps: float
    constant_C: float
    delta: float

    @property
    def depth(self) -> int:
        return len(self.target_widths) - 1


@dataclass
class ApproxReport:
    per_layer_errors: list
    theoretical_budget: float
    achieved_bound: float
    measured_sup_error: float
    infeasible_count: int
    seeds: dict
    layer_reports: list = field(default_factory=list, repr=False)

    def csv_rows(self):
        for rep in self.layer_reports:
            yield from rep.csv_rows()


def _check_unit_interval(name, value):
    if not 0.0 < value < 1.0:
        raise DomainError(f"{name} must lie in (0, 1), got {value}")


def block_size(d_in: int, d_out: int, depth: int, eps: float, delta: float, C: float) -> int:
    k = math.ceil(C * math.log(d_in * d_out * depth / min(eps, delta)))
    return max(2, k + (k % 2))


def width_plan(target_widths, eps: float, delta: float, C: float = DEFAULT_C) -> WidthPlan:
    _check_unit_interval("eps", eps)
    _check_unit_interval("delta", delta)
    if not C > 0:
        raise DomainError(f"C must be positive, got {C}")
    widths = tuple(int(w) for w in target_widths)
    if len(widths) < 2 or min(widths) < 1:
        raise DomainError(f"target widths must list at least two positive sizes, got {widths}")
    depth = len(widths) - 1
    ks, rw = [], [widths[0]]
    for i in range(1, depth + 1):
        k = block_size(widths[i - 1], widths[i], depth, eps, delta, C)
        ks.append(k)
        rw += [widths[i - 1] * k, widths[i]]
    return WidthPlan(widths, tuple(rw), tuple(ks), eps / (2 * depth), float(C), delta)


def composition_error_bound(per_layer_eps: float, l: int) -> float:
    """``(1 + per_layer_eps)^l - 1`` for ``per_layer_eps = eps / 2l`` with ``0 < eps < 1``."""
    if l < 1:
        raise DomainError("depth must be at least 1")
    eps = per_layer_eps * 2 * l
    if not 0.0 <= eps < 1.0:
        raise DomainError(f"the composition bound needs 0 <= eps < 1, got eps = {eps}")
    return math.expm1(l * math.log1p(per_layer_eps))


def achieved_composition_bound(layer_errors) -> float:
    """Composition bound from realized per-layer errors: ``prod(1 + e_i) - 1``."""
    return math.expm1(math.fsum(math.log1p(e) for e in layer_errors))


def _check_normalized(target: DenseNetwork):
    for k, w in enumerate(target.layers):
        s = spectral_norm(w)
        if s > 1.0 + NORM_SLACK:
            raise DomainError(f"target layer {k} has spectral norm {s:.6g} > 1; normalize first")


def prune_to_approximate(
    target: DenseNetwork,
    eps: float,
    delta: float,
    C: float = DEFAULT_C,
    seed: int = 0,
    n_samples: int = 10_000,
    workers: int = 1,
):
    """Draw a random U[-1, 1] network per :func:`width_plan` and prune it onto ``target``.

    Budget misses are counted in the report, never raised.
    Returns ``(random_net, masks, report)``.
    """
    _check_normalized(target)
    plan = width_plan(target.widths, eps, delta, C)
    random_net = random_network(plan.random_widths, Distribution.uniform(-1.0, 1.0), seed)

    masks, reports = [], []
    for i, w in enumerate(target.layers):
        m, n = random_net.layers[2 * i], random_net.layers[2 * i + 1]
        t, s, rep = build_layer_gadget(w, m, n, plan.per_layer_eps, layer=i, workers=workers)
        masks += [t, s]
        reports.append(rep)
    mask_set = MaskSet(masks)

    errors = [r.total_error for r in reports]
    measured = sup_error_estimate(target, (random_net, mask_set), n_samples, seed)
    report = ApproxReport(
        per_layer_errors=errors,
        theoretical_budget=composition_error_bound(plan.per_layer_eps, plan.depth),
        achieved_bound=achieved_composition_bound(errors),
        measured_sup_error=measured,
        infeasible_count=sum(r.infeasible_count for r in reports),
        seeds={"network": seed, "sphere": seed},
        layer_reports=reports,
    )
    return random_net, mask_set, report


def _check_lower_bound_eps(eps):
    if not 0.0 < eps < 0.5:
        raise DomainError(f"lower bound needs 0 < eps < 1/2, got {eps}")


def lower_bound_min_params(d: int, eps: float) -> float:
    """Parameters needed so that ``2^(m+1) > (1/(2 eps))^(d^2)``: ``d^2 log2(1/(2 eps)) - 1``."""
    _check_lower_bound_eps(eps)
    return d * d * math.log2(1.0 / (2.0 * eps)) - 1.0


def lower_bound_min_width(d: int, eps: float) -> float:
    """Hidden width of a two-layer net with ``m = 2 s d`` prunable weights."""
    return lower_bound_min_params(d, eps) / (2.0 * d)


def plan_summary(plan: WidthPlan) -> dict:
    return {
        "target_widths": list(plan.target_widths),
        "random_widths": list(plan.random_widths),
        "block_sizes": list(plan.block_sizes),
        "per_layer_eps": plan.per_layer_eps,
        "C": plan.constant_C,
        "delta": plan.delta,
    }

