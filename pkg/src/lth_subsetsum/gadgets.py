"""Pruning constructions that turn a random two-layer ReLU net into a linear map.

Link
    ``g(x) = v^T relu(u x)`` with ``u = [a; c]`` and ``v = [b; d]``. The first
    mask drops negative ``a`` and positive ``c``; afterwards the top half only
    fires for ``x > 0`` and the bottom half only for ``x < 0``. On ``x > 0`` the
    output is ``sum_S1 b_i a_i^+ * x`` and on ``x < 0`` it is
    ``sum_S2 d_i c_i^- * x``, so each half is a subset-sum problem with target
    ``w``. The second mask holds the two selections.

Layer
    Hidden units come in ``d1`` blocks of ``k`` units. Block ``j`` is wired to
    input ``j`` only and is split into a top (``a``) and a bottom (``c``) half.
    The first mask depends only on the random first layer, so one first layer
    serves every target of the same shape; each output row then picks its own
    subsets in the second layer.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .subsetsum import SubsetSumInstance, solve_subset_sum
from .tensor import DenseNetwork, MaskSet

CSV_HEADER = ("layer", "out_idx", "in_idx", "branch", "target", "achieved_error", "feasible")


@dataclass(frozen=True)
class LinkGadget:
    first_layer_weights: np.ndarray
    second_layer_weights: np.ndarray
    first_mask: np.ndarray
    second_mask: np.ndarray
    target_w: float
    achieved_errors: tuple
    feasible: bool

    @property
    def error_bound(self) -> float:
        return float(sum(self.achieved_errors))

    def network(self) -> DenseNetwork:
        return DenseNetwork([self.first_layer_weights[:, None], self.second_layer_weights[None, :]])

    def masks(self) -> MaskSet:
        return MaskSet([self.first_mask[:, None], self.second_mask[None, :]])


@dataclass(frozen=True)
class LayerReport:
    target: np.ndarray
    branch_errors: np.ndarray  # (d2, d1, 2): positive and negative branch
    branch_feasible: np.ndarray
    pair_budget: float
    layer: int = 0

    @property
    def pair_errors(self) -> np.ndarray:
        return self.branch_errors.sum(axis=2)

    @property
    def total_error(self) -> float:
        return float(self.pair_errors.sum())

    @property
    def infeasible_count(self) -> int:
        return int((~self.branch_feasible).sum())

    def csv_rows(self):
        d2, d1 = self.target.shape
        for i in range(d2):
            for j in range(d1):
                for b, name in enumerate(("pos", "neg")):
                    yield (
                        self.layer, i, j, name, float(self.target[i, j]),
                        float(self.branch_errors[i, j, b]), bool(self.branch_feasible[i, j, b]),
                    )


@dataclass(frozen=True)
class LayerGadgetPlan:
    block_size: int
    in_dim: int
    out_dim: int
    first_mask: np.ndarray
    second_mask: np.ndarray

    def block_rows(self, j: int) -> slice:
        return slice(j * self.block_size, (j + 1) * self.block_size)


def linearize(w) -> DenseNetwork:
    """Two-layer ReLU net ``[I, -I] relu([W; -W] x)`` computing ``W x`` exactly."""
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got shape {w.shape}")
    eye = np.eye(w.shape[0])
    return DenseNetwork([np.vstack([w, -w]), np.hstack([eye, -eye])])


def _branch(coeffs: np.ndarray, w: float, budget: float):
    sel = solve_subset_sum(SubsetSumInstance(coeffs, w, budget))
    return sel.indices, sel.abs_error, sel.feasible


def _sign_mask(first: np.ndarray) -> np.ndarray:
    """Keep non-negative entries in the top half and non-positive in the bottom half."""
    h = first.size // 2
    keep = np.empty(first.size, dtype=np.uint8)
    keep[:h] = first[:h] >= 0
    keep[h:] = first[h:] <= 0
    return keep


def _link_masks(w, first, second, keep, budget):
    h = first.size // 2
    kept = first * keep
    pos = second[:h] * kept[:h]
    neg = second[h:] * kept[h:]
    s1, e1, f1 = _branch(pos, w, budget / 2)
    s2, e2, f2 = _branch(neg, w, budget / 2)
    sel = np.zeros(first.size, dtype=np.uint8)
    sel[list(s1)] = 1
    sel[[h + i for i in s2]] = 1
    return sel, (e1, e2), (f1, f2)


def _check_even_split(size: int, what: str):
    if size < 2 or size % 2:
        raise ShapeError(f"{what} must be even and at least 2, got {size}")


def build_link_gadget(w: float, u, v, eps_link: float) -> LinkGadget:
    """Prune ``v^T relu(u x)`` so that it approximates ``w x`` on ``[-1, 1]``.

    Each branch gets ``eps_link / 2``; the gadget is flagged infeasible when a
    branch optimum misses that, and the achieved errors are reported either way.
    """
    u = np.asarray(u, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    if u.shape != v.shape:
        raise ShapeError(f"u and v differ in length: {u.size} vs {v.size}")
    _check_even_split(u.size, "link width 2n")
    if abs(w) > 1:
        raise ValueError(f"target weight {w} outside [-1, 1]")
    keep = _sign_mask(u)
    sel, errs, feas = _link_masks(float(w), u, v, keep, eps_link)
    return LinkGadget(u, v, keep, sel, float(w), errs, all(feas))


def layer_first_mask(m, block_size: int) -> np.ndarray:
    """Block-diagonal, sign-pruned mask for the random first layer.

    Depends on ``m`` only, never on the target.
    """
    m = np.asarray(m, dtype=np.float64)
    rows, d1 = m.shape
    if rows != d1 * block_size:
        raise ShapeError(f"first layer has {rows} rows, expected {d1} blocks of {block_size}")
    _check_even_split(block_size, "block size")
    t = np.zeros(m.shape, dtype=np.uint8)
    for j in range(d1):
        rs = slice(j * block_size, (j + 1) * block_size)
        t[rs, j] = _sign_mask(m[rs, j])
    return t


def build_layer_gadget(W, M, N, eps: float, layer: int = 0, workers: int = 1):
    """Masks ``(T, S)`` so that ``(S*N) relu((T*M) x)`` approximates ``W x``.

    ``W`` is ``d2 x d1``, ``M`` is ``(d1 k) x d1`` and ``N`` is ``d2 x (d1 k)``.
    Every (output, input) pair gets ``eps / (d1 d2)``. Returns ``(T, S, report)``.
    """
    W = np.asarray(W, dtype=np.float64)
    M = np.asarray(M, dtype=np.float64)
    N = np.asarray(N, dtype=np.float64)
    if W.ndim != 2 or M.ndim != 2 or N.ndim != 2:
        raise ShapeError("W, M and N must all be 2-D")
    d2, d1 = W.shape
    if M.shape[1] != d1 or M.shape[0] % d1:
        raise ShapeError(f"first layer shape {M.shape} does not fit {d1} inputs")
    k = M.shape[0] // d1
    if N.shape != (d2, d1 * k):
        raise ShapeError(f"second layer shape {N.shape}, expected {(d2, d1 * k)}")
    if np.any(np.abs(W) > 1):
        raise ValueError("target entries must lie in [-1, 1]")

    T = layer_first_mask(M, k)
    pair_budget = eps / (d1 * d2)
    S = np.zeros(N.shape, dtype=np.uint8)
    errs = np.zeros((d2, d1, 2))
    feas = np.ones((d2, d1, 2), dtype=bool)

    def row(i):
        out = []
        for j in range(d1):
            rs = slice(j * k, (j + 1) * k)
            out.append(_link_masks(W[i, j], M[rs, j], N[i, rs], T[rs, j], pair_budget))
        return out

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(row, range(d2)))
    else:
        rows = [row(i) for i in range(d2)]

    for i, links in enumerate(rows):
        for j, (sel, e, f) in enumerate(links):
            S[i, j * k:(j + 1) * k] = sel
            errs[i, j] = e
            feas[i, j] = f
    return T, S, LayerReport(W.copy(), errs, feas, pair_budget, layer)


def build_neuron_gadget(w_vec, M, v, eps: float):
    """Single-output case of :func:`build_layer_gadget`; each link gets ``eps / d``.

    Returns ``(first_mask, second_mask, report)`` with ``second_mask`` 1-D.
    """
    w_vec = np.asarray(w_vec, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    T, S, report = build_layer_gadget(w_vec[None, :], M, v[None, :], eps)
    return T, S[0], report


def layer_plan(W, M, N, eps: float) -> LayerGadgetPlan:
    T, S, _ = build_layer_gadget(W, M, N, eps)
    d2, d1 = np.shape(W)
    return LayerGadgetPlan(np.shape(M)[0] // d1, d1, d2, T, S)
