"""Legendre polynomials, orthonormal bases on [t, T] and Gauss-Legendre rules."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np


class DomainError(ValueError):
    """Argument outside the interval on which a function is defined."""


@dataclass(frozen=True)
class Interval:
    t: float
    T: float

    def __post_init__(self):
        if not (np.isfinite(self.t) and np.isfinite(self.T)):
            raise ValueError("interval endpoints must be finite")
        if not self.T > self.t:
            raise ValueError(f"need T > t, got [{self.t}, {self.T}]")

    @property
    def length(self) -> float:
        return self.T - self.t


class BasisKind(str, Enum):
    LEGENDRE = "legendre"
    TRIGONOMETRIC = "trigonometric"


@dataclass(frozen=True)
class BasisSpec:
    kind: BasisKind
    interval: Interval

    @classmethod
    def legendre(cls, t=0.0, T=1.0) -> "BasisSpec":
        return cls(BasisKind.LEGENDRE, Interval(float(t), float(T)))

    @classmethod
    def trigonometric(cls, t=0.0, T=1.0) -> "BasisSpec":
        return cls(BasisKind.TRIGONOMETRIC, Interval(float(t), float(T)))


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre nodes and weights on [-1, 1]."""

    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)

    def __len__(self):
        return len(self.nodes)

    def mapped(self, a, b, panels=1):
        """Composite rule on [a, b] split into ``panels`` equal sub-intervals.

        ``a`` and ``b`` may be arrays; the returned nodes and weights carry
        their broadcast shape plus one trailing axis of length
        ``panels * len(self)``.
        """
        a = np.asarray(a, dtype=float)[..., None]
        b = np.asarray(b, dtype=float)[..., None]
        k = np.arange(panels)
        x = ((k[:, None] + 0.5 * (self.nodes[None, :] + 1.0)) / panels).ravel()
        w = np.tile(self.weights, panels) / (2.0 * panels)
        width = b - a
        return a + width * x, width * w


def _check_unit(x, tol=1e-12):
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1.0 + tol) or np.any(np.isnan(x)):
        raise DomainError("Legendre argument outside [-1, 1]")
    return x


def legendre_table(n, x):
    """P_0(x), ..., P_n(x) stacked along a new leading axis (no domain check)."""
    x = np.asarray(x, dtype=float)
    out = np.empty((n + 1,) + x.shape)
    out[0] = 1.0
    if n >= 1:
        out[1] = x
    for j in range(1, n):
        out[j + 1] = ((2 * j + 1) * x * out[j] - j * out[j - 1]) / (j + 1)
    return out


def legendre_eval(j, x):
    """Legendre polynomial P_j(x) by the three-term recurrence."""
    if j < 0:
        raise ValueError("index must be nonnegative")
    x = _check_unit(x)
    p = legendre_table(j, x)[j]
    return float(p) if p.ndim == 0 else p


def legendre_pair(j, x):
    """(P_j(x), P_{j+1}(x)) from a single recurrence pass."""
    if j < 0:
        raise ValueError("index must be nonnegative")
    x = _check_unit(x)
    tab = legendre_table(j + 1, x)
    if tab.ndim == 1:
        return float(tab[j]), float(tab[j + 1])
    return tab[j], tab[j + 1]


def legendre_derivative(j, x):
    """P'_j(x).

    Uses j (P_{j-1} - x P_j) / (1 - x^2) in the interior, the closed
    endpoint values P'_j(+-1) = (+-1)^(j+1) j (j+1) / 2, and the additive
    relation P'_{j+1} = P'_{j-1} + (2j+1) P_j where 1 - x^2 is too small for
    the quotient to be accurate.
    """
    if j < 0:
        raise ValueError("index must be nonnegative")
    x = _check_unit(x)
    scalar = x.ndim == 0
    x = np.clip(np.atleast_1d(x), -1.0, 1.0)
    out = np.zeros_like(x)
    if j > 0:
        tab = legendre_table(j, x)
        gap = 1.0 - x * x
        near = gap < 1e-6
        interior = ~near
        out[interior] = j * (tab[j - 1][interior] - x[interior] * tab[j][interior]) / gap[interior]
        if np.any(near):
            xn = x[near]
            d_prev = np.zeros_like(xn)  # P'_0
            d_cur = np.ones_like(xn)  # P'_1
            for i in range(1, j):
                d_prev, d_cur = d_cur, d_prev + (2 * i + 1) * tab[i][near]
            out[near] = d_cur
        ends = np.abs(x) == 1.0
        out[ends] = np.sign(x[ends]) ** (j + 1) * j * (j + 1) / 2.0
    return float(out[0]) if scalar else out


def _check_in_interval(interval, s):
    s = np.asarray(s, dtype=float)
    slack = 1e-12 * interval.length
    if np.any(s < interval.t - slack) or np.any(s > interval.T + slack) or np.any(np.isnan(s)):
        raise DomainError(f"time outside [{interval.t}, {interval.T}]")
    return s


def phi_matrix(basis, jmax, s, check=True):
    """phi_0(s), ..., phi_jmax(s) stacked along a new leading axis."""
    iv = basis.interval
    s = _check_in_interval(iv, s) if check else np.asarray(s, dtype=float)
    L = iv.length
    if basis.kind == BasisKind.LEGENDRE:
        x = np.clip((s - 0.5 * (iv.T + iv.t)) * (2.0 / L), -1.0, 1.0)
        scale = np.sqrt((2.0 * np.arange(jmax + 1) + 1.0) / L)
        return scale.reshape((-1,) + (1,) * x.ndim) * legendre_table(jmax, x)
    out = np.empty((jmax + 1,) + s.shape)
    out[0] = 1.0 / np.sqrt(L)
    if jmax >= 1:
        r = np.arange(1, jmax // 2 + 2).reshape((-1,) + (1,) * s.ndim)
        arg = 2.0 * np.pi * r * ((s - iv.t) / L)
        amp = np.sqrt(2.0 / L)
        sines = amp * np.sin(arg)
        cosines = amp * np.cos(arg)
        out[1::2] = sines[: len(out[1::2])]
        out[2::2] = cosines[: len(out[2::2])]
    return out


def phi(basis, j, s):
    """Orthonormal basis function phi_j on the basis interval."""
    if j < 0:
        raise ValueError("index must be nonnegative")
    v = phi_matrix(basis, j, s)[j]
    return float(v) if v.ndim == 0 else v


def _newton_gauss(n):
    i = np.arange(1, n + 1)
    x = np.cos(np.pi * (i - 0.25) / (n + 0.5))
    for _ in range(100):
        tab = legendre_table(n, x)
        pn, pn1 = tab[n], tab[n - 1]
        dp = n * (pn1 - x * pn) / (1.0 - x * x)
        dx = pn / dp
        x = x - dx
        if np.max(np.abs(dx)) <= 1e-15:
            break
    tab = legendre_table(n, x)
    dp = n * (tab[n - 1] - x * tab[n]) / (1.0 - x * x)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    order = np.argsort(x)
    return x[order], w[order]


@lru_cache(maxsize=64)
def gauss_legendre(n: int) -> QuadratureRule:
    """n-point Gauss-Legendre rule on [-1, 1] (1 <= n <= 512)."""
    if not isinstance(n, (int, np.integer)) or not 1 <= n <= 512:
        raise ValueError(f"quadrature size must be in 1..512, got {n!r}")
    if n == 1:
        return QuadratureRule(np.array([0.0]), np.array([2.0]))
    x, w = _newton_gauss(int(n))
    # symmetrize: nodes come in +-pairs, removes last-bit asymmetry
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    return QuadratureRule(x, w)
