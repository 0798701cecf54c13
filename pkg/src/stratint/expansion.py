"""Truncated expansions of iterated Ito and Stratonovich integrals.

A :class:`GaussianPool` holds the variables zeta_j^(i) = int phi_j dw^(i).
All evaluation functions accept pools whose ``z`` carries extra leading batch
axes, in which case ``ExpansionValue.value`` is an array over the batch.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import numpy as np

from . import random as crng
from .coeffs import CoefficientTable


@dataclass(frozen=True)
class GaussianPool:
    """zeta_j^(i) for i = 1..m and j = 0..p_max, stored as ``z[..., i - 1, j]``.

    The time component i = 0 is not random: zeta_j^(0) = int_t^T phi_j(s) ds,
    which equals sqrt(T - t) for j = 0 and vanishes for j >= 1 in both the
    Legendre and the trigonometric basis.
    """

    seed: object
    m: int
    p_max: int
    z: np.ndarray = field(repr=False)

    @classmethod
    def from_array(cls, z, seed=None) -> "GaussianPool":
        z = np.asarray(z, dtype=float)
        if z.ndim < 2:
            raise ValueError("pool array needs shape (..., m, p_max + 1)")
        return cls(seed, z.shape[-2], z.shape[-1] - 1, z)

    @property
    def batch_shape(self):
        return self.z.shape[:-2]

    def row(self, i, interval, n=None):
        """zeta^(i)_0..zeta^(i)_{n-1} for component ``i`` (0 = time)."""
        n = self.p_max + 1 if n is None else n
        if n > self.p_max + 1:
            raise ValueError(f"pool holds indices up to {self.p_max}, need {n - 1}")
        if i == 0:
            r = np.zeros(n)
            r[0] = np.sqrt(interval.length)
            return np.broadcast_to(r, self.batch_shape + (n,))
        if not 1 <= i <= self.m:
            raise ValueError(f"noise index {i} outside 0..{self.m}")
        return self.z[..., i - 1, :n]


def sample_pool(seed, m, p_max, stream=crng.ZETA) -> GaussianPool:
    """Pool of independent standard normals keyed by (seed, i, j).

    ``seed`` may be an array of seeds; the pool then has a matching batch
    shape, one independent pool per seed.
    """
    if m < 1 or p_max < 0:
        raise ValueError("need m >= 1 and p_max >= 0")
    seed_arr = np.asarray(seed)
    z = crng.normal_range(seed_arr[..., None], stream, p_max + 1, b=np.arange(1, m + 1))
    return GaussianPool(seed, m, p_max, z)


@dataclass(frozen=True)
class NoiseSelector:
    """Noise components (i_1, ..., i_k); 0 denotes the time component."""

    i: tuple

    def __post_init__(self):
        if any(int(v) != v or v < 0 for v in self.i):
            raise ValueError("noise indices must be nonnegative integers")

    @property
    def k(self):
        return len(self.i)


@dataclass(frozen=True)
class ExpansionValue:
    value: object
    k: int
    i: tuple
    p: tuple
    kind: str


def _selector(sel):
    return sel if isinstance(sel, NoiseSelector) else NoiseSelector(tuple(sel))


def _rows(table, pool, sel):
    sel = _selector(sel)
    if sel.k != table.k:
        raise ValueError(f"selector multiplicity {sel.k} != table multiplicity {table.k}")
    if max(table.p) > pool.p_max:
        raise ValueError(f"table orders {table.p} exceed pool p_max {pool.p_max}")
    if max(sel.i) > pool.m:
        raise ValueError(f"noise index exceeds pool dimension m={pool.m}")
    iv = table.basis.interval
    return sel, [pool.row(i, iv, p + 1) for i, p in zip(sel.i, table.p)]


def _pair(sel, a, b):
    return sel.i[a] == sel.i[b] != 0


def _contract(C, rows):
    letters = "abcd"[: C.ndim]
    spec = letters + "," + ",".join("..." + c for c in letters) + "->..."
    return np.einsum(spec, C, *rows)


def _diag(C, axes):
    """Slice C to a common range on ``axes`` and take the generalized diagonal."""
    n = min(C.shape[a] for a in axes)
    sl = tuple(slice(0, n) if ax in axes else slice(None) for ax in range(C.ndim))
    C = C[sl]
    return np.diagonal(C, axis1=axes[0], axis2=axes[1])  # diagonal moved to the last axis


def ito_truncated(table: CoefficientTable, pool: GaussianPool, sel) -> ExpansionValue:
    """Truncated expansion of the iterated Ito integral, multiplicity 1..4.

    Products of zeta are corrected by the pairing indicators
    1{i_a = i_b != 0} 1{j_a = j_b}: one pairing for k = 2, three for k = 3,
    six single pairings plus three double pairings for k = 4.
    """
    sel, z = _rows(table, pool, sel)
    C = table.values
    k = table.k
    value = _contract(C, z)
    if k == 2 and _pair(sel, 0, 1):
        value = value - _diag(C, (0, 1)).sum()
    elif k == 3:
        for a, b in ((0, 1), (1, 2), (0, 2)):
            if _pair(sel, a, b):
                (c,) = {0, 1, 2} - {a, b}
                D = _diag(C, (a, b))  # remaining axis first, diagonal last
                value = value - np.einsum("cd,...c->...", D, z[c])
    elif k == 4:
        pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
        for a, b in pairs:
            if _pair(sel, a, b):
                c, d = sorted({0, 1, 2, 3} - {a, b})
                D = _diag(C, (a, b))  # axes (c, d, diag)
                value = value - np.einsum("cdx,...c,...d->...", D, z[c], z[d])
        for (a, b), (c, d) in (((0, 1), (2, 3)), ((0, 2), (1, 3)), ((0, 3), (1, 2))):
            if _pair(sel, a, b) and _pair(sel, c, d):
                D = _diag(C, (a, b))  # axes (c, d, x)
                value = value + _diag(D, (0, 1)).sum()
    return ExpansionValue(_scalar(value), k, sel.i, table.p, "ito")


def _scalar(v):
    v = np.asarray(v)
    return float(v) if v.ndim == 0 else v


def strat_truncated_k2(table: CoefficientTable, pool: GaussianPool, sel) -> ExpansionValue:
    """Plain double sum sum C_{j_2 j_1} zeta_{j_1}^(i_1) zeta_{j_2}^(i_2)."""
    sel = _selector(sel)
    if table.k != 2:
        raise ValueError("strat_truncated_k2 needs a k = 2 table")
    if 0 in sel.i:
        raise ValueError("the k = 2 Stratonovich expansion needs Wiener components i >= 1")
    sel, z = _rows(table, pool, sel)
    return ExpansionValue(_scalar(_contract(table.values, z)), 2, sel.i, table.p, "stratonovich")


def strat_truncated_k34(table: CoefficientTable, pool: GaussianPool, sel) -> ExpansionValue:
    """Plain k-fold sum for k = 3, 4 with unit weights and equal truncation."""
    sel = _selector(sel)
    if table.k not in (3, 4):
        raise ValueError("strat_truncated_k34 needs k = 3 or 4")
    if any(w.form != "constant" or w.value != 1.0 for w in table.weights):
        raise ValueError("only unit weights psi == 1 are supported for k = 3, 4")
    if len(set(table.p)) != 1:
        raise ValueError("truncation must be equal in all dimensions")
    sel, z = _rows(table, pool, sel)
    return ExpansionValue(_scalar(_contract(table.values, z)), table.k, sel.i, table.p, "stratonovich")


def mse_k2_exact(table: CoefficientTable, kernel_norm: float, sel) -> float:
    """E[(J* - J*_p)^2] = ||K||^2 - sum C^2, valid for distinct components."""
    sel = _selector(sel)
    if table.k != 2 or sel.k != 2:
        raise ValueError("mse_k2_exact needs k = 2")
    if sel.i[0] == sel.i[1]:
        raise ValueError("closed-form error needs i_1 != i_2; use Monte Carlo for equal indices")
    err = kernel_norm - float(np.sum(table.values**2))
    if err < -1e-12:
        raise ArithmeticError(f"negative truncation error {err}: kernel norm inconsistent with table")
    return max(err, 0.0)
