"""Coefficient distributions for random subset-sum instances.

``product_uniform`` is the law of ``X * Y`` with ``X ~ U[0, 1]`` and
``Y ~ U[-1, 1]``; its density is ``0.5 * log(1/|z|)`` on ``0 < |z| <= 1``.
``half_product_atom`` is the law of ``b * max(a, 0)`` with ``a, b ~ U[-1, 1]``,
i.e. an atom of mass one half at zero mixed with ``product_uniform``. These are
the coefficients a sign-pruned ReLU link actually offers to the solver.

The cumulative distribution of ``product_uniform`` on ``(0, 1]`` is
``0.5 + z/2 + z*log(1/z)/2``; the ``0.5`` accounts for the negative half of
the support.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import DomainError

KINDS = ("uniform", "normal", "laplace", "product_uniform", "half_product_atom")
HALF_LN2 = 0.5 * math.log(2.0)


@dataclass(frozen=True)
class Distribution:
    kind: str
    params: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown distribution kind {self.kind!r}; expected one of {KINDS}")
        p = tuple(float(v) for v in self.params)
        object.__setattr__(self, "params", p)
        if self.kind == "uniform" and not p[0] < p[1]:
            raise ValueError("uniform(a, b) needs a < b")
        if self.kind in ("normal", "laplace") and not p[1] > 0:
            raise ValueError(f"{self.kind} scale must be positive")

    @classmethod
    def uniform(cls, a: float = -1.0, b: float = 1.0):
        return cls("uniform", (a, b))

    @classmethod
    def normal(cls, mu: float = 0.0, sigma: float = 1.0):
        return cls("normal", (mu, sigma))

    @classmethod
    def laplace(cls, mu: float = 0.0, b: float = 1.0):
        return cls("laplace", (mu, b))

    @classmethod
    def product_uniform(cls):
        return cls("product_uniform")

    @classmethod
    def half_product_atom(cls):
        return cls("half_product_atom")

    @property
    def tag(self) -> str:
        if not self.params:
            return self.kind
        return f"{self.kind}({','.join(repr(v) for v in self.params)})"

    @classmethod
    def parse(cls, text: str) -> "Distribution":
        """Inverse of :attr:`tag`. Bare ``uniform``/``normal``/``laplace`` take defaults."""
        m = re.fullmatch(r"\s*([a-z_]+)\s*(?:\((.*)\))?\s*", text)
        if not m:
            raise ValueError(f"cannot parse distribution {text!r}")
        kind, args = m.group(1), m.group(2)
        if kind not in KINDS:
            raise ValueError(f"unknown distribution kind {kind!r}; expected one of {KINDS}")
        params = tuple(float(v) for v in args.split(",")) if args and args.strip() else ()
        if not params:
            return getattr(cls, kind)()
        return cls(kind, params)

    def sample(self, rng: np.random.Generator, size=None):
        return sample(self, rng, size)

    def pdf(self, z):
        return pdf(self, z)

    def cdf(self, z):
        return cdf(self, z)


def _product_pdf(z: np.ndarray) -> np.ndarray:
    if np.any(z == 0.0):
        raise DomainError("product_uniform density has a logarithmic singularity at z = 0")
    a = np.abs(z)
    out = np.zeros_like(a)
    inside = a <= 1.0
    out[inside] = -0.5 * np.log(a[inside])
    return out


def _product_cdf(z: np.ndarray) -> np.ndarray:
    a = np.minimum(np.abs(z), 1.0)
    tail = -a * np.log(np.where(a > 0.0, a, 1.0))
    upper = 0.5 + 0.5 * a + 0.5 * tail
    return np.where(z >= 0.0, upper, 1.0 - upper)


def pdf(dist: Distribution, z):
    """Density at ``z``. For ``half_product_atom`` this is the density of the
    continuous part only (total mass one half); the atom at zero has no density."""
    z = np.asarray(z, dtype=np.float64)
    k, p = dist.kind, dist.params
    if k == "uniform":
        out = np.where((z >= p[0]) & (z <= p[1]), 1.0 / (p[1] - p[0]), 0.0)
    elif k == "normal":
        out = stats.norm.pdf(z, loc=p[0], scale=p[1])
    elif k == "laplace":
        out = stats.laplace.pdf(z, loc=p[0], scale=p[1])
    elif k == "product_uniform":
        out = _product_pdf(z)
    else:
        out = 0.5 * _product_pdf(z)
    return float(out) if out.ndim == 0 else out


def cdf(dist: Distribution, z):
    z = np.asarray(z, dtype=np.float64)
    k, p = dist.kind, dist.params
    if k == "uniform":
        out = np.clip((z - p[0]) / (p[1] - p[0]), 0.0, 1.0)
    elif k == "normal":
        out = stats.norm.cdf(z, loc=p[0], scale=p[1])
    elif k == "laplace":
        out = stats.laplace.cdf(z, loc=p[0], scale=p[1])
    elif k == "product_uniform":
        out = _product_cdf(z)
    else:
        out = 0.5 * (z >= 0.0) + 0.5 * _product_cdf(z)
    out = np.asarray(out, dtype=np.float64)
    return float(out) if out.ndim == 0 else out


def sample(dist: Distribution, rng: np.random.Generator, size=None):
    k, p = dist.kind, dist.params
    if k == "uniform":
        return rng.uniform(p[0], p[1], size)
    if k == "normal":
        return rng.normal(p[0], p[1], size)
    if k == "laplace":
        return rng.laplace(p[0], p[1], size)
    if k == "product_uniform":
        x = rng.uniform(0.0, 1.0, size)
        y = rng.uniform(-1.0, 1.0, size)
        return x * y
    a = rng.uniform(-1.0, 1.0, size)
    b = rng.uniform(-1.0, 1.0, size)
    return b * np.maximum(a, 0.0)


def contains_uniform_certificate(dist: Distribution) -> tuple[float, float]:
    """Return ``(alpha, c)`` with ``pdf >= alpha / (2c)`` on ``[-c, c]``.

    Equivalently ``dist = (1 - alpha) Q + alpha U[-c, c]`` for some law ``Q``.
    For ``half_product_atom`` only the continuous half counts.
    """
    k, p = dist.kind, dist.params
    if k == "uniform":
        a, b = p
        if not a < 0.0 < b:
            raise DomainError("uniform(a, b) contains a centred uniform only when a < 0 < b")
        c = min(-a, b)
        return 2.0 * c / (b - a), c
    if k == "normal":
        mu, sigma = p
        c = sigma
        dens = min(stats.norm.pdf(c, mu, sigma), stats.norm.pdf(-c, mu, sigma))
        return float(2.0 * c * dens), c
    if k == "laplace":
        mu, b = p
        c = b
        dens = math.exp(-(c + abs(mu)) / b) / (2.0 * b)
        return 2.0 * c * dens, c
    if k == "product_uniform":
        return HALF_LN2, 0.5
    return 0.5 * HALF_LN2, 0.5
