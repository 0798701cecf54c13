"""Brute-force reference values from discretized Wiener paths.

Paths are sampled on a uniform grid from the counter-based generator, keyed by
(seed, component, step), so a path is reproducible from its seed alone.
Distinct step counts N give unrelated paths: refining a path by Brownian
bridge interpolation is not supported.

A path may also carry the centered first moments int (s - mid) dW of each
step, drawn independently of the increments (they are uncorrelated Gaussians
given the Wiener measure).  Sums of increments and moments then give the
zeta_0 and zeta_1 of any coarser step exactly.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import random as crng
from .basis import BasisKind, BasisSpec, Interval, phi_matrix
from .coeffs import WeightSpec, coefficient_table, half_weight_product_integral
from .expansion import (
    GaussianPool,
    NoiseSelector,
    ito_truncated,
    strat_truncated_k2,
    strat_truncated_k34,
)


@dataclass(frozen=True)
class WienerPath:
    """Increments ``dW[..., i - 1, l]`` of components i = 1..m on a uniform grid.

    Leading axes of ``dW`` (if any) index independent paths.
    """

    interval: Interval
    N: int
    dW: np.ndarray = field(repr=False)
    seed: object = None
    dZ: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def m(self):
        return self.dW.shape[-2]

    @property
    def step(self):
        return self.interval.length / self.N

    @property
    def grid(self):
        """Left endpoints tau_0, ..., tau_{N-1}."""
        return self.interval.t + self.step * np.arange(self.N)

    def increments(self, i):
        if i == 0:
            return np.full(self.dW.shape[:-2] + (self.N,), self.step)
        return self.dW[..., i - 1, :]


@dataclass(frozen=True)
class OracleEstimate:
    value: object
    N: int
    kind: str


def simulate_path(seed, m, N, interval, moments=False) -> WienerPath:
    """Wiener increments, each Normal(0, (T - t) / N).

    ``seed`` may be an array of seeds, giving a batch of paths.  With
    ``moments`` the path also carries ``dZ``, the per-step integrals
    int (s - mid) dW with variance step**3 / 12.
    """
    if N < 1:
        raise ValueError("need N >= 1")
    if not isinstance(interval, Interval):
        interval = Interval(*interval)
    seed_arr = np.asarray(seed)
    comps = np.arange(1, m + 1)
    step = interval.length / N
    z = crng.normal_range(seed_arr[..., None], crng.WIENER, N, b=comps)
    dZ = None
    if moments:
        dZ = crng.normal_range(seed_arr[..., None], crng.WIENER, N, b=comps, c=1) * math.sqrt(step**3 / 12)
    return WienerPath(interval, N, z * math.sqrt(step), seed, dZ)


def zetas_from_path(path: WienerPath, basis: BasisSpec, p_max: int) -> np.ndarray:
    """Left-point sums sum_l phi_j(tau_l) dW_l for j <= p_max, shape (..., m, p_max + 1)."""
    Phi = phi_matrix(basis, p_max, path.grid)  # (J, N)
    return np.einsum("...in,jn->...ij", path.dW, Phi)


def zeta_from_path(path: WienerPath, basis: BasisSpec, j: int, i: int):
    """zeta_j^(i) as a left-point Riemann-Stieltjes sum (i = 0 integrates ds)."""
    Phi = phi_matrix(basis, j, path.grid)[j]
    v = np.sum(path.increments(i) * Phi, axis=-1)
    return float(v) if np.ndim(v) == 0 else v


def pool_from_path(path: WienerPath, basis: BasisSpec, p_max: int) -> GaussianPool:
    return GaussianPool.from_array(zetas_from_path(path, basis, p_max), seed=path.seed)


def _exclusive_cumsum(a):
    c = np.cumsum(a, axis=-1)
    return c - a


def ito_discrete(path: WienerPath, weights: Sequence[WeightSpec], sel) -> OracleEstimate:
    """Left-point iterated sum over strictly increasing grid indices l_1 < ... < l_k."""
    sel = sel if isinstance(sel, NoiseSelector) else NoiseSelector(tuple(sel))
    if not 1 <= sel.k <= 4 or len(weights) != sel.k:
        raise ValueError("need 1 <= k <= 4 and one weight per component")
    tau = path.grid
    acc = None
    for w, i in zip(weights, sel.i):
        term = w(tau) * path.increments(i)
        acc = term if acc is None else term * _exclusive_cumsum(acc)
    v = acc.sum(axis=-1)
    return OracleEstimate(float(v) if np.ndim(v) == 0 else v, path.N, "ito")


def strat_from_ito(ito: OracleEstimate, weights, sel, interval: Interval, quad_points=32) -> OracleEstimate:
    """Add (1/2) 1{i_1 = i_2 != 0} int psi_1 psi_2 ds to a k = 2 Ito value."""
    sel = sel if isinstance(sel, NoiseSelector) else NoiseSelector(tuple(sel))
    if sel.k != 2:
        raise ValueError("Ito-Stratonovich correction implemented for k = 2 only")
    v = ito.value
    if sel.i[0] == sel.i[1] != 0:
        v = v + half_weight_product_integral(weights, interval, quad_points)
    return OracleEstimate(v, ito.N, "stratonovich")


def strat_discrete_unit(path: WienerPath, sel) -> OracleEstimate:
    """Stratonovich integral with psi == 1 of the piecewise-linear path.

    Chen's relation: appending a linear segment with increment d updates
    the level-l coefficient S[i_1..i_l] by sum_r S[i_1..i_r] d^(l-r) / (l-r)!.
    Converges to the Stratonovich value as N grows.
    """
    sel = sel if isinstance(sel, NoiseSelector) else NoiseSelector(tuple(sel))
    k = sel.k
    batch = path.dW.shape[:-2]
    S = [np.ones(batch)] + [np.zeros(batch) for _ in range(k)]
    incs = [path.increments(i) for i in sel.i]
    for step in range(path.N):
        d = [inc[..., step] for inc in incs]
        for lvl in range(k, 0, -1):
            acc = S[lvl]
            prod = np.ones(batch)
            for r in range(lvl - 1, -1, -1):
                prod = prod * d[r]
                acc = acc + S[r] * prod / math.factorial(lvl - r)
            S[lvl] = acc
    v = S[k]
    return OracleEstimate(float(v) if np.ndim(v) == 0 else v, path.N, "stratonovich")


@dataclass
class IntegralSpec:
    """What ``mc_mean_square_diff`` compares.

    Either a catalog tag (``tag`` set, Stratonovich by definition) or a generic
    expansion built from ``weights`` over the chosen basis.
    """

    i: tuple
    tag: Optional[str] = None
    weights: Optional[tuple] = None
    kind: str = "stratonovich"
    basis: str = "legendre"

    def to_dict(self):
        d = {"i": list(self.i), "kind": self.kind, "basis": self.basis}
        if self.tag:
            d["tag"] = self.tag
        if self.weights:
            d["weights"] = [w.to_dict() for w in self.weights]
        return d


@dataclass
class MCConfig:
    seeds: Sequence[int]
    N: int
    q: object
    spec: IntegralSpec
    interval: Interval = Interval(0.0, 1.0)
    chunk: int = 100

    def to_dict(self):
        seeds = list(self.seeds)
        return {
            "seeds": [seeds[0], seeds[-1] + 1] if seeds == list(range(seeds[0], seeds[-1] + 1)) else seeds,
            "N": self.N,
            "q": list(self.q) if isinstance(self.q, (list, tuple)) else self.q,
            "spec": self.spec.to_dict(),
            "interval": [self.interval.t, self.interval.T],
        }


def _oracle_value(path, spec, weights, sel):
    if spec.kind == "ito":
        return ito_discrete(path, weights, sel).value
    if sel.k == 1:
        return ito_discrete(path, weights, sel).value
    if sel.k == 2:
        return strat_from_ito(ito_discrete(path, weights, sel), weights, sel, path.interval).value
    return strat_discrete_unit(path, sel).value


def _catalog_weights(tag, interval):
    from .catalog import TAG_ORDERS

    return tuple(WeightSpec.monomial(interval.t, l) for l in TAG_ORDERS[tag])


def mc_mean_square_diff(config: MCConfig) -> dict:
    """Pathwise mean-square distance between a truncated expansion and the oracle.

    Each path yields zeta by left-point sums, the expansion is evaluated with
    those zeta and compared to the discretized iterated integral on the same
    path.  ``config.q`` may be a sequence, in which case every order is
    evaluated on the same paths and the report carries lists.
    """
    from .catalog import catalog_eval, IntegralId, required_index

    start = time.perf_counter()
    spec = config.spec
    iv = config.interval
    qs = list(config.q) if isinstance(config.q, (list, tuple)) else [config.q]
    basis = BasisSpec(BasisKind(spec.basis), iv)
    sel = NoiseSelector(tuple(spec.i))
    m = max(max(sel.i), 1)
    if spec.tag:
        weights = _catalog_weights(spec.tag, iv)
        p_need = max(required_index(spec.tag, q) for q in qs)
        tables = None
    else:
        weights = tuple(spec.weights)
        p_need = max(qs)
        tables = {q: coefficient_table(basis, weights, [q] * len(weights)) for q in qs}
    seeds = np.asarray(list(config.seeds))
    if len(seeds) < 2:
        raise ValueError("need at least two paths for a standard error")
    sums = np.zeros(len(qs))
    sums_sq = np.zeros(len(qs))
    for lo in range(0, len(seeds), config.chunk):
        path = simulate_path(seeds[lo : lo + config.chunk], m, config.N, iv)
        pool = pool_from_path(path, basis, p_need)
        ref = _oracle_value(path, spec, weights, sel)
        for n, q in enumerate(qs):
            if spec.tag:
                approx = catalog_eval(IntegralId(spec.tag, sel.i), iv, pool, q)
            elif spec.kind == "ito":
                approx = ito_truncated(tables[q], pool, sel).value
            elif sel.k == 2:
                approx = strat_truncated_k2(tables[q], pool, sel).value
            elif sel.k == 1:
                approx = ito_truncated(tables[q], pool, sel).value
            else:
                approx = strat_truncated_k34(tables[q], pool, sel).value
            d2 = (np.asarray(approx) - ref) ** 2
            sums[n] += d2.sum()
            sums_sq[n] += (d2**2).sum()
    n_paths = len(seeds)
    mean = sums / n_paths
    var = (sums_sq - n_paths * mean**2) / (n_paths - 1)
    se = np.sqrt(np.maximum(var, 0.0) / n_paths)
    single = not isinstance(config.q, (list, tuple))
    return {
        "config": config.to_dict(),
        "n_paths": int(n_paths),
        "mean_sq_diff": float(mean[0]) if single else mean.tolist(),
        "std_err": float(se[0]) if single else se.tolist(),
        "runtime_seconds": time.perf_counter() - start,
    }
