"""Closed-form truncated expansions of the standard integrals

    I_(l1)      = int_t^T (t - s)^l1 dW^(i1)_s
    I_(l1 l2)   = int_t^T (t - s2)^l2 int_t^s2 (t - s1)^l1 dW^(i1)_s1 dW^(i2)_s2

(Stratonovich sense) in the Legendre basis, and three trigonometric-basis
counterparts that carry explicit tail variables.

Every formula is stored as coefficients: a vector ``c`` with
``value = c . zeta^(i1)`` for single integrals, or a matrix ``M`` with
``value = zeta^(i1) . M . zeta^(i2)`` for double ones.  For the trigonometric
formulas the variable vector is extended by the tail normals,
``x^(i) = (zeta_0, ..., zeta_2q, xi_q, mu_q)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import random as crng
from .basis import Interval
from .expansion import GaussianPool

TAG_ORDERS = {
    "I0": (0,),
    "I1": (1,),
    "I2": (2,),
    "I3": (3,),
    "I00": (0, 0),
    "I01": (0, 1),
    "I10": (1, 0),
    "I02": (0, 2),
    "I20": (2, 0),
    "I11": (1, 1),
}
TRIG_TAGS = ("I1", "I2", "I10")


@dataclass(frozen=True)
class IntegralId:
    tag: str
    i: tuple

    def __post_init__(self):
        if self.tag not in TAG_ORDERS:
            raise KeyError(f"unknown catalog tag {self.tag!r}")
        if len(self.i) != len(TAG_ORDERS[self.tag]):
            raise ValueError(f"{self.tag} needs {len(TAG_ORDERS[self.tag])} noise indices, got {len(self.i)}")
        if any(v < 1 for v in self.i):
            raise ValueError("catalog integrals are over Wiener components i >= 1")


def required_index(tag, q):
    """Largest zeta index the truncated formula reads."""
    if tag in ("I0", "I1", "I2", "I3"):
        return int(tag[1])
    if tag == "I00":
        return q
    if tag in ("I01", "I10"):
        return max(q + 2, 1)
    return max(q + 3, 2)


def legendre_vector(tag, L):
    s = math.sqrt
    if tag == "I0":
        return np.array([s(L)])
    if tag == "I1":
        return -(L**1.5) / 2 * np.array([1.0, 1 / s(3)])
    if tag == "I2":
        return L**2.5 / 3 * np.array([1.0, s(3) / 2, 1 / (2 * s(5))])
    if tag == "I3":
        return -(L**3.5) / 4 * np.array([1.0, 3 * s(3) / 5, 1 / s(5), 1 / (5 * s(7))])
    raise KeyError(tag)


def _i00(q, L, n):
    M = np.zeros((n, n))
    M[0, 0] = 1.0
    for i in range(1, q + 1):
        c = 1.0 / math.sqrt(4 * i * i - 1)
        M[i - 1, i] += c
        M[i, i - 1] -= c
    return L / 2 * M


def _band2(q, n, swap):
    """Bracketed series shared by I01 (swap=False) and I10 (swap=True)."""
    B = np.zeros((n, n))
    if swap:
        B[1, 0] += 1 / math.sqrt(3)
    else:
        B[0, 1] += 1 / math.sqrt(3)
    for i in range(q + 1):
        den = math.sqrt((2 * i + 1) * (2 * i + 5)) * (2 * i + 3)
        diag = 1.0 / ((2 * i - 1) * (2 * i + 3))
        if swap:
            B[i, i + 2] += (i + 1) / den
            B[i + 2, i] -= (i + 2) / den
            B[i, i] += diag
        else:
            B[i, i + 2] += (i + 2) / den
            B[i + 2, i] -= (i + 1) / den
            B[i, i] -= diag
    return B


def _band3(q, n, kind):
    """Bracketed series of I02, I20 and I11."""
    B = np.zeros((n, n))
    if kind == "I02":
        B[0, 2] += 2 / (3 * math.sqrt(5))
        B[0, 0] += 1 / 3
    elif kind == "I20":
        B[2, 0] += 2 / (3 * math.sqrt(5))
        B[0, 0] += 1 / 3
    else:
        B[1, 1] += 1 / 3
    for i in range(q + 1):
        d3 = math.sqrt((2 * i + 1) * (2 * i + 7)) * (2 * i + 3) * (2 * i + 5)
        d1 = math.sqrt((2 * i + 1) * (2 * i + 3)) * (2 * i - 1) * (2 * i + 5)
        if kind == "I02":
            up3, dn3 = (i + 2) * (i + 3), (i + 1) * (i + 2)
            up1, dn1 = i * i + i - 3, i * i + 3 * i - 1
        elif kind == "I20":
            up3, dn3 = (i + 1) * (i + 2), (i + 2) * (i + 3)
            up1, dn1 = i * i + 3 * i - 1, i * i + i - 3
        else:
            up3 = dn3 = (i + 1) * (i + 3)
            up1 = dn1 = (i + 1) ** 2
        B[i, i + 3] += up3 / d3
        B[i + 3, i] -= dn3 / d3
        B[i, i + 1] += up1 / d1
        B[i + 1, i] -= dn1 / d1
    return B


def legendre_matrix(tag, q, L):
    """Coefficient matrix of the order-q truncation, M[a, b] multiplying zeta_a^(i1) zeta_b^(i2)."""
    n = required_index(tag, q) + 1
    i00 = _i00(q, L, n)
    if tag == "I00":
        return i00
    i01 = -L / 2 * i00 - L**2 / 4 * _band2(q, n, swap=False)
    i10 = -L / 2 * i00 - L**2 / 4 * _band2(q, n, swap=True)
    if tag == "I01":
        return i01
    if tag == "I10":
        return i10
    head = -(L**2) / 4 * i00
    tail = L**3 / 8 * _band3(q, n, tag)
    if tag == "I02":
        return head - L * i01 + tail
    if tag == "I20":
        return head - L * i10 + tail
    if tag == "I11":
        return head - L / 2 * (i10 + i01) + tail
    raise KeyError(tag)


def legendre_coefficients(tag, q, L):
    return legendre_vector(tag, L) if len(TAG_ORDERS[tag]) == 1 else legendre_matrix(tag, q, L)


def _rows(pool, ids, n, interval):
    return [pool.row(i, interval, n) for i in ids]


def catalog_eval(id: IntegralId, interval: Interval, pool: GaussianPool, q: int):
    """Order-q truncation of a Legendre catalog integral evaluated on ``pool``.

    Composite formulas (I01 uses I00, I02 uses I01, ...) use the same pool and
    the same q throughout.
    """
    if q < 0:
        raise ValueError("q must be nonnegative")
    need = required_index(id.tag, q)
    if pool.p_max < need:
        raise ValueError(f"{id.tag} at q={q} reads zeta up to index {need}; pool p_max={pool.p_max}")
    coef = legendre_coefficients(id.tag, q, interval.length)
    n = len(coef)
    z = _rows(pool, id.i, n, interval)
    if coef.ndim == 1:
        v = z[0] @ coef
    else:
        v = np.einsum("...a,ab,...b->...", z[0], coef, z[1])
    return float(v) if np.ndim(v) == 0 else v


@dataclass(frozen=True)
class TrigTail:
    """Normalized tails xi_q, mu_q of the trigonometric series, per component."""

    q: int
    alpha_q: float
    beta_q: float
    xi: np.ndarray
    mu: np.ndarray


def tail_constants(q):
    r = np.arange(1, q + 1, dtype=float)
    alpha = math.pi**2 / 6 - np.sum(1 / r**2)
    beta = math.pi**4 / 90 - np.sum(1 / r**4)
    return float(alpha), float(beta)


def trig_tail(seed, m, q) -> TrigTail:
    """Tail variables drawn from their own streams, keyed by (seed, i, q)."""
    alpha, beta = tail_constants(q)
    comps = np.arange(1, m + 1)
    seed = np.asarray(seed)[..., None]
    xi = crng.keyed_normals(seed, crng.TAIL_XI, q, comps)
    mu = crng.keyed_normals(seed, crng.TAIL_MU, q, comps)
    return TrigTail(q, alpha, beta, xi, mu)


def trig_vector(tag, q, L):
    """Coefficients over (zeta_0, ..., zeta_2q, xi_q, mu_q)."""
    alpha, beta = tail_constants(q)
    c = np.zeros(2 * q + 3)
    xi, mu = 2 * q + 1, 2 * q + 2
    r = np.arange(1, q + 1)
    if tag == "I1":
        f = -(L**1.5) / 2
        c[0] = f
        c[2 * r - 1] = -f * math.sqrt(2) / math.pi / r
        c[xi] = -f * math.sqrt(2) / math.pi * math.sqrt(alpha)
        return c
    if tag == "I2":
        f = L**2.5
        c[0] = f / 3
        c[2 * r] = f / (math.sqrt(2) * math.pi**2 * r**2)
        c[mu] = f * math.sqrt(beta) / (math.sqrt(2) * math.pi**2)
        c[2 * r - 1] = -f / (math.sqrt(2) * math.pi * r)
        c[xi] = -f * math.sqrt(alpha) / (math.sqrt(2) * math.pi)
        return c
    raise KeyError(f"no trigonometric single-integral formula for {tag}")


def trig_matrix(tag, q, L):
    """Coefficients of the trigonometric I10 formula over the extended variables."""
    if tag != "I10":
        raise KeyError(f"no trigonometric double-integral formula for {tag}")
    alpha, beta = tail_constants(q)
    n = 2 * q + 3
    xi, mu = 2 * q + 1, 2 * q + 2
    pi = math.pi
    s2 = math.sqrt(2)
    M = np.zeros((n, n))
    M[0, 0] = 1 / 6
    M[0, xi] = -math.sqrt(alpha) / (2 * s2 * pi)
    M[0, mu] = math.sqrt(beta) / (2 * s2 * pi**2)
    M[mu, 0] = -2 * math.sqrt(beta) / (2 * s2 * pi**2)
    for r in range(1, q + 1):
        M[0, 2 * r - 1] += -1 / (2 * s2 * pi * r)
        M[0, 2 * r] += 1 / (2 * s2 * pi**2 * r**2)
        M[2 * r, 0] += -2 / (2 * s2 * pi**2 * r**2)
        for l in range(1, q + 1):
            if l != r:
                M[2 * r, 2 * l] += -1 / (2 * pi**2 * (r * r - l * l))
                M[2 * r - 1, 2 * l - 1] += -(l / r) / (2 * pi**2 * (r * r - l * l))
        M[2 * r, 2 * r - 1] += 1 / (4 * pi * r)
        M[2 * r - 1, 2 * r] += -1 / (4 * pi * r)
        M[2 * r - 1, 2 * r - 1] += 3 / (8 * pi**2 * r * r)
        M[2 * r, 2 * r] += 1 / (8 * pi**2 * r * r)
    return -(L**2) * M


def trig_coefficients(tag, q, L):
    return trig_vector(tag, q, L) if tag in ("I1", "I2") else trig_matrix(tag, q, L)


def _extended(pool, tail, i, q, interval):
    z = pool.row(i, interval, 2 * q + 1)
    xi = np.asarray(tail.xi)[..., i - 1]
    mu = np.asarray(tail.mu)[..., i - 1]
    shape = np.broadcast_shapes(z.shape[:-1], xi.shape, mu.shape)
    z = np.broadcast_to(z, shape + z.shape[-1:])
    return np.concatenate([z, np.broadcast_to(xi, shape)[..., None], np.broadcast_to(mu, shape)[..., None]], axis=-1)


def catalog_eval_trig(id: IntegralId, interval: Interval, pool: GaussianPool, tail: TrigTail, q: int):
    """Trigonometric-basis formulas for I1, I2 and I10 including the tail terms."""
    if id.tag not in TRIG_TAGS:
        raise KeyError(f"no trigonometric formula for {id.tag}")
    if tail.q != q:
        raise ValueError(f"tail drawn for q={tail.q}, formula evaluated at q={q}")
    if pool.p_max < 2 * q:
        raise ValueError(f"trigonometric formula at q={q} reads zeta up to {2 * q}; pool p_max={pool.p_max}")
    coef = trig_coefficients(id.tag, q, interval.length)
    x = [_extended(pool, tail, i, q, interval) for i in id.i]
    if coef.ndim == 1:
        v = x[0] @ coef
    else:
        v = np.einsum("...a,ab,...b->...", x[0], coef, x[1])
    return float(v) if np.ndim(v) == 0 else v


def _second_moment(coef, same):
    if coef.ndim == 1:
        return float(np.sum(coef**2))
    if not same:
        return float(np.sum(coef**2))
    # E[(z' M z)^2] = (tr M)^2 + 2 ||sym(M)||_F^2 for z ~ N(0, I)
    S = 0.5 * (coef + coef.T)
    return float(np.trace(coef) ** 2 + 2 * np.sum(S**2))


def catalog_second_moment(id: IntegralId, interval: Interval, q: int, trig=False) -> float:
    """Exact second moment of the order-q truncated formula."""
    if q < 0:
        raise ValueError("q must be nonnegative")
    L = interval.length
    coef = trig_coefficients(id.tag, q, L) if trig else legendre_coefficients(id.tag, q, L)
    same = len(id.i) == 2 and id.i[0] == id.i[1]
    return _second_moment(coef, same)


def exact_second_moment(id: IntegralId, interval: Interval) -> float:
    """Second moment of the untruncated integral for distinct components (or k = 1)."""
    L = interval.length
    orders = TAG_ORDERS[id.tag]
    if len(orders) == 1:
        (l,) = orders
        return L ** (2 * l + 1) / (2 * l + 1)
    if id.i[0] == id.i[1]:
        raise ValueError("closed form given for distinct components only")
    l1, l2 = orders
    # int_0^L s2^(2 l2) s2^(2 l1 + 1) / (2 l1 + 1) ds2
    return L ** (2 * l1 + 2 * l2 + 2) / ((2 * l1 + 1) * (2 * l1 + 2 * l2 + 2))


def catalog_mse_exact(id: IntegralId, interval: Interval, q: int) -> float:
    """E[(I - I_q)^2] for a Legendre double-integral tag with distinct components.

    For distinct components the products zeta_a zeta_b are orthonormal, so the
    error is ||K||^2 - 2 <C, M> + ||M||^2 with C the exact coefficients on the
    support of the truncation matrix M.  Single-integral tags are exact.
    """
    from .basis import BasisSpec
    from .coeffs import WeightSpec, coefficient_table

    orders = TAG_ORDERS[id.tag]
    if len(orders) == 1:
        return 0.0
    if id.i[0] == id.i[1]:
        raise ValueError("closed form given for distinct components only")
    M = legendre_matrix(id.tag, q, interval.length)
    n = M.shape[0] - 1
    weights = [WeightSpec.monomial(interval.t, l) for l in orders]
    C = coefficient_table(BasisSpec.legendre(interval.t, interval.T), weights, [n, n]).values
    err = exact_second_moment(id, interval) - 2 * float(np.sum(C * M)) + float(np.sum(M**2))
    if err < -1e-12:
        raise ArithmeticError(f"negative truncation error {err}")
    return max(err, 0.0)
