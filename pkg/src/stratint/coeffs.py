"""Fourier coefficients of the ordered kernel K(t_1, ..., t_k).

Index convention
----------------
``CoefficientTable.values[j_1, ..., j_k]`` holds the coefficient written
C_{j_k ... j_1} in the usual notation: the array axes follow the *inner to
outer* integration order (axis 0 belongs to the innermost integral, weight
psi_1 and noise component i_1).  Every function in this package indexes tables
this way; nothing ever transposes them.

The nested integral

    C = int_t^T psi_k phi_{j_k}(t_k) ... int_t^{t_2} psi_1 phi_{j_1}(t_1) dt_1 ... dt_k

is evaluated by recursive Gauss-Legendre quadrature: the running integral of
level ``l`` is needed at the nodes of level ``l + 1``, so it is recomputed on
[t, node] with a freshly mapped rule for every node.  For the Legendre basis
and polynomial weights the integrands are polynomials and the result is exact
once the rule is large enough.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .basis import (
    BasisKind,
    BasisSpec,
    DomainError,
    Interval,
    gauss_legendre,
    phi_matrix,
)

MAX_K = 4
MAX_TABLE_SIZE = 10**7


class QuadratureError(ArithmeticError):
    """Quadrature produced a non-finite value."""


@dataclass(frozen=True)
class WeightSpec:
    """One weight function psi on [t, T].

    ``form`` is ``"constant"``, ``"monomial"`` (``(base_time - tau)**exponent``)
    or ``"tabulated"`` (an arbitrary vectorized callable).
    """

    form: str
    value: float = 1.0
    base_time: float = 0.0
    exponent: int = 0
    func: Optional[Callable] = None
    name: str = ""

    @classmethod
    def constant(cls, value=1.0):
        return cls("constant", value=float(value))

    @classmethod
    def monomial(cls, base_time, exponent):
        if int(exponent) != exponent or exponent < 0:
            raise ValueError("monomial exponent must be a nonnegative integer")
        return cls("monomial", base_time=float(base_time), exponent=int(exponent))

    @classmethod
    def tabulated(cls, func, name=""):
        return cls("tabulated", func=func, name=name or getattr(func, "__name__", "tabulated"))

    @property
    def is_polynomial(self):
        return self.form in ("constant", "monomial")

    @property
    def degree(self):
        return self.exponent if self.form == "monomial" else 0

    def __call__(self, tau):
        tau = np.asarray(tau, dtype=float)
        if self.form == "constant":
            return np.full(tau.shape, self.value)
        if self.form == "monomial":
            return (self.base_time - tau) ** self.exponent
        if self.func is None:
            raise ValueError(f"tabulated weight {self.name!r} has no callable attached")
        out = np.asarray(self.func(tau), dtype=float)
        out = np.broadcast_to(out, tau.shape)
        if not np.all(np.isfinite(out)):
            raise QuadratureError(f"weight {self.name!r} is not finite on the interval")
        return out

    def to_dict(self):
        if self.form == "constant":
            return {"form": "constant", "value": self.value}
        if self.form == "monomial":
            return {"form": "monomial", "base_time": self.base_time, "exponent": self.exponent}
        return {"form": "tabulated", "name": self.name}

    @classmethod
    def from_dict(cls, d):
        if d["form"] == "constant":
            return cls.constant(d["value"])
        if d["form"] == "monomial":
            return cls.monomial(d["base_time"], d["exponent"])
        return cls("tabulated", name=d.get("name", ""))


@dataclass(frozen=True)
class MultiIndex:
    j: tuple

    def __post_init__(self):
        if not 1 <= len(self.j) <= MAX_K:
            raise ValueError(f"multiplicity must be 1..{MAX_K}")
        if any(int(v) != v or v < 0 for v in self.j):
            raise ValueError("indices must be nonnegative integers")

    @property
    def k(self):
        return len(self.j)


def kernel_eval(weights: Sequence[WeightSpec], times, interval: Interval):
    """K(t_1, ..., t_k): product of the weights on the ordered simplex, else 0."""
    times = [float(s) for s in times]
    if len(times) != len(weights):
        raise ValueError("need one time per weight")
    slack = 1e-12 * interval.length
    for s in times:
        if not interval.t - slack <= s <= interval.T + slack:
            raise DomainError(f"time {s} outside [{interval.t}, {interval.T}]")
    if any(b <= a for a, b in zip(times, times[1:])):
        return 0.0
    return float(np.prod([w(s) for w, s in zip(weights, times)]))


def default_quad_points(basis, p):
    if basis.kind == BasisKind.LEGENDRE:
        return max(p) + 16
    return 32


def default_panels(basis, p):
    if basis.kind == BasisKind.LEGENDRE:
        return 1
    return max(1, math.ceil((max(p) + 1) / 8))


def _sum_last(a):
    # reduction always runs over a contiguous trailing axis so that every
    # entry is summed the same way whatever else is in the array
    return np.ascontiguousarray(a).sum(axis=-1)


def _running_integrals(basis, weights, index_sets, rule, panels, points):
    """Level-``len(weights)`` running integrals evaluated at ``points``.

    Returns an array of shape ``points.shape + (len(I_1), ..., len(I_l))``.
    """
    level = len(weights)
    t = basis.interval.t
    u, w = rule.mapped(t, points, panels)  # points.shape + (N,)
    idx = np.asarray(index_sets[-1])
    g = phi_matrix(basis, int(idx.max()), u, check=False)[idx]  # (J, ...points, N)
    g = np.moveaxis(g, 0, -2) * (w * weights[-1](u))[..., None, :]  # points + (J, N)
    if level == 1:
        return _sum_last(g)
    prev = _running_integrals(basis, weights[:-1], index_sets[:-1], rule, panels, u)
    # prev: points + (N,) + inner dims ; move N to the end
    prev = np.moveaxis(prev, points.ndim, -1)  # points + inner + (N,)
    inner = prev.shape[points.ndim : -1]
    prod = prev[..., None, :] * g.reshape(points.shape + (1,) * len(inner) + g.shape[-2:])
    return _sum_last(prod)


def _nested(basis, weights, index_sets, quad_points, panels):
    if not 1 <= len(weights) <= MAX_K:
        raise ValueError(f"multiplicity must be 1..{MAX_K}, got {len(weights)}")
    if quad_points < 2:
        raise ValueError("quad_points must be >= 2")
    rule = gauss_legendre(int(quad_points))
    out = _running_integrals(basis, list(weights), index_sets, rule, panels, np.asarray(basis.interval.T))
    if not np.all(np.isfinite(out)):
        raise QuadratureError("non-finite Fourier coefficient")
    return out


def fourier_coefficient(basis, weights, idx, quad_points=None, panels=None):
    """Single coefficient C_{j_k ... j_1} for ``idx = MultiIndex((j_1, ..., j_k))``."""
    if not isinstance(idx, MultiIndex):
        idx = MultiIndex(tuple(idx))
    if len(weights) != idx.k:
        raise ValueError("weights and index disagree on multiplicity")
    quad_points = quad_points or default_quad_points(basis, idx.j)
    panels = panels or default_panels(basis, idx.j)
    sets = [[j] for j in idx.j]
    return float(_nested(basis, weights, sets, quad_points, panels).reshape(-1)[0])


@dataclass(frozen=True)
class CoefficientTable:
    basis: BasisSpec
    weights: tuple
    p: tuple
    values: np.ndarray

    def __post_init__(self):
        self.values.setflags(write=False)

    @property
    def k(self):
        return len(self.p)

    def to_json(self) -> str:
        from .io import dumps17

        iv = self.basis.interval
        return dumps17(
            {
                "k": self.k,
                "interval": [iv.t, iv.T],
                "basis": self.basis.kind.value,
                "weights": [w.to_dict() for w in self.weights],
                "p": list(self.p),
                "values": self.values.ravel().tolist(),
            }
        )

    @classmethod
    def from_json(cls, text) -> "CoefficientTable":
        d = json.loads(text)
        basis = BasisSpec(BasisKind(d["basis"]), Interval(*d["interval"]))
        p = tuple(int(v) for v in d["p"])
        if len(p) != d["k"]:
            raise ValueError("k does not match the number of orders")
        values = np.asarray(d["values"], dtype=float).reshape(tuple(v + 1 for v in p))
        return cls(basis, tuple(WeightSpec.from_dict(w) for w in d["weights"]), p, values)


def coefficient_table(basis, weights, p, quad_points=None, panels=None) -> CoefficientTable:
    """Dense table of coefficients over the box 0 <= j_l <= p_l."""
    p = tuple(int(v) for v in p)
    if len(p) != len(weights):
        raise ValueError("need one truncation order per weight")
    if any(v < 0 for v in p):
        raise ValueError("truncation orders must be nonnegative")
    if math.prod(v + 1 for v in p) > MAX_TABLE_SIZE:
        raise ValueError(f"table larger than {MAX_TABLE_SIZE} entries")
    quad_points = quad_points or default_quad_points(basis, p)
    panels = panels or default_panels(basis, p)
    sets = [list(range(v + 1)) for v in p]
    values = _nested(basis, weights, sets, quad_points, panels)
    return CoefficientTable(basis, tuple(weights), p, np.array(values, dtype=float))


def trace_sum(table: CoefficientTable, p: int) -> float:
    """Partial diagonal sum sum_{j <= p} C_{jj} of a k = 2 table."""
    if table.k != 2:
        raise ValueError("trace_sum needs a k = 2 table")
    if p > min(table.p) or p < 0:
        raise ValueError(f"order {p} exceeds the table orders {table.p}")
    return float(np.trace(table.values[: p + 1, : p + 1]))


def kernel_norm_sq(weights, interval: Interval, quad_points=32) -> float:
    """int_t^T psi_2^2(t_2) int_t^{t_2} psi_1^2(t_1) dt_1 dt_2 (squared L2 norm of K)."""
    if len(weights) != 2:
        raise ValueError("kernel_norm_sq needs two weights")
    rule = gauss_legendre(int(quad_points))
    s, ws = rule.mapped(interval.t, interval.T)
    u, wu = rule.mapped(interval.t, s)
    inner = _sum_last(wu * weights[0](u) ** 2)
    val = float(_sum_last(ws * weights[1](s) ** 2 * inner))
    if not np.isfinite(val):
        raise QuadratureError("non-finite kernel norm")
    return val


def half_weight_product_integral(weights, interval: Interval, quad_points=32) -> float:
    """(1/2) int_t^T psi_1 psi_2 ds, the limit of the diagonal coefficient sum."""
    rule = gauss_legendre(int(quad_points))
    s, w = rule.mapped(interval.t, interval.T)
    return 0.5 * float(_sum_last(w * weights[0](s) * weights[1](s)))
