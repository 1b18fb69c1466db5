"""Dense bias-free ReLU networks.

A network ``f(x) = W_l relu(W_{l-1} ... relu(W_1 x))`` is stored as an ordered
tuple of 2-D float64 arrays. Layer ``k`` maps ``widths[k]`` to
``widths[k+1]``. Every layer except the last is followed by a ReLU.

Inputs may be a single vector of shape ``(d0,)`` or a batch of row vectors of
shape ``(m, d0)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConvergenceError, ShapeError
from .rng import derive_rng

UNIT_NORM_SLACK = 1e-12


def _as_matrix(m) -> np.ndarray:
    a = np.array(m, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ShapeError(f"expected a non-empty 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    a.setflags(write=False)
    return a


def _check_chain(layers: Sequence[np.ndarray]) -> None:
    if len(layers) < 1:
        raise ShapeError("a network needs at least one layer")
    for k in range(1, len(layers)):
        if layers[k].shape[1] != layers[k - 1].shape[0]:
            raise ShapeError(
                f"layer {k} expects {layers[k].shape[1]} inputs but layer {k - 1} "
                f"produces {layers[k - 1].shape[0]}"
            )


@dataclass(frozen=True)
class DenseNetwork:
    layers: tuple

    def __init__(self, layers):
        mats = tuple(_as_matrix(m) for m in layers)
        _check_chain(mats)
        object.__setattr__(self, "layers", mats)

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def widths(self) -> list[int]:
        return [self.layers[0].shape[1]] + [m.shape[0] for m in self.layers]

    @property
    def in_dim(self) -> int:
        return self.layers[0].shape[1]

    @property
    def out_dim(self) -> int:
        return self.layers[-1].shape[0]

    def __eq__(self, other):
        if not isinstance(other, DenseNetwork):
            return NotImplemented
        return self.depth == other.depth and all(
            np.array_equal(a, b) for a, b in zip(self.layers, other.layers)
        )

    __hash__ = None


@dataclass(frozen=True)
class MaskSet:
    """Binary pruning matrices, one per layer of the network they apply to."""

    masks: tuple

    def __init__(self, masks):
        out = []
        for m in masks:
            a = np.array(m)
            if a.ndim != 2:
                raise ShapeError(f"mask must be 2-D, got shape {a.shape}")
            if not np.all((a == 0) | (a == 1)):
                raise ValueError("mask entries must be 0 or 1")
            a = a.astype(np.uint8)
            a.setflags(write=False)
            out.append(a)
        object.__setattr__(self, "masks", tuple(out))

    @classmethod
    def ones_like(cls, net: DenseNetwork) -> "MaskSet":
        return cls([np.ones(m.shape, dtype=np.uint8) for m in net.layers])

    @classmethod
    def zeros_like(cls, net: DenseNetwork) -> "MaskSet":
        return cls([np.zeros(m.shape, dtype=np.uint8) for m in net.layers])

    def __len__(self):
        return len(self.masks)

    def __eq__(self, other):
        if not isinstance(other, MaskSet):
            return NotImplemented
        return len(self) == len(other) and all(
            np.array_equal(a, b) for a, b in zip(self.masks, other.masks)
        )

    __hash__ = None


def relu(x):
    return np.maximum(x, 0.0)


def _prepare_input(net: DenseNetwork, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim not in (1, 2) or x.shape[-1] != net.in_dim:
        raise ShapeError(f"input of shape {x.shape} does not match input dimension {net.in_dim}")
    return x


def forward(net: DenseNetwork, x) -> np.ndarray:
    """Evaluate ``net`` at ``x`` (one vector or a batch of rows)."""
    h = _prepare_input(net, x)
    last = net.depth - 1
    for k, w in enumerate(net.layers):
        h = h @ w.T
        if k < last:
            h = relu(h)
    return h


def apply_masks(net: DenseNetwork, masks: MaskSet) -> DenseNetwork:
    """Return the network with weights ``S_k * M_k``."""
    if len(masks) != net.depth:
        raise ShapeError(f"{len(masks)} masks given for a {net.depth}-layer network")
    for k, (s, w) in enumerate(zip(masks.masks, net.layers)):
        if s.shape != w.shape:
            raise ShapeError(f"mask {k} has shape {s.shape}, layer has {w.shape}")
    return DenseNetwork([s * w for s, w in zip(masks.masks, net.layers)])


def masked_forward(net: DenseNetwork, masks: MaskSet, x) -> np.ndarray:
    return forward(apply_masks(net, masks), x)


def spectral_norm(m, tol: float = 1e-9, max_iters: int = 1000) -> float:
    """Largest singular value by power iteration on ``M^T M``.

    Starts from the normalized all-ones vector. If that start is orthogonal to
    the row space (``M v = 0`` while ``M != 0``) a fixed-seed Gaussian start is
    used instead, so the result stays deterministic.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got shape {a.shape}")
    if not np.any(a):
        return 0.0

    v = np.ones(a.shape[1]) / np.sqrt(a.shape[1])
    if np.linalg.norm(a @ v) == 0.0:
        v = np.random.default_rng(0).standard_normal(a.shape[1])
        v /= np.linalg.norm(v)

    est = np.linalg.norm(a @ v)
    for _ in range(max_iters):
        w = a.T @ (a @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        new = float(np.linalg.norm(a @ v))
        if abs(new - est) <= tol * new:
            return new
        est = new
    raise ConvergenceError(
        f"power iteration did not reach relative tolerance {tol} in {max_iters} iterations",
        estimate=est,
    )


def normalize_network(net: DenseNetwork, tol: float = 1e-9, max_iters: int = 1000):
    """Scale each layer down to spectral norm at most one.

    Returns ``(normalized, scales)`` where layer ``k`` was divided by
    ``scales[k] = max(1, ||W_k||)``. Since the network is positively
    homogeneous, ``prod(scales) * forward(normalized, x) == forward(net, x)``.
    """
    scales = []
    layers = []
    for w in net.layers:
        s = max(1.0, spectral_norm(w, tol=tol, max_iters=max_iters))
        scales.append(s)
        layers.append(w if s == 1.0 else w / s)
    return DenseNetwork(layers), scales


def random_network(widths: Sequence[int], dist=None, seed: int = 0) -> DenseNetwork:
    """Network with i.i.d. weights from ``dist`` (default uniform on [-1, 1])."""
    from .distributions import Distribution

    if len(widths) < 2:
        raise ShapeError("widths needs at least an input and an output size")
    if any(int(w) < 1 for w in widths):
        raise ShapeError(f"widths must be positive, got {list(widths)}")
    dist = Distribution.uniform(-1.0, 1.0) if dist is None else dist
    rng = derive_rng(seed, "random_network")
    layers = [dist.sample(rng, (int(widths[k + 1]), int(widths[k]))) for k in range(len(widths) - 1)]
    return DenseNetwork(layers)


def sample_unit_sphere(dim: int, seed: int, n: int) -> np.ndarray:
    """``n`` points drawn uniformly from the unit sphere in ``R^dim``, as rows."""
    if dim < 1:
        raise ShapeError("dim must be at least 1")
    rng = derive_rng(seed, "unit_sphere", dim)
    g = rng.standard_normal((n, dim))
    norms = np.linalg.norm(g, axis=1)
    while np.any(norms == 0.0):  # measure zero, but keep the contract
        bad = norms == 0.0
        g[bad] = rng.standard_normal((int(bad.sum()), dim))
        norms = np.linalg.norm(g, axis=1)
    return g / norms[:, None]


def check_unit_vector(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if np.linalg.norm(x) > 1.0 + UNIT_NORM_SLACK:
        raise ValueError(f"vector norm {np.linalg.norm(x)} exceeds 1")
    return x
