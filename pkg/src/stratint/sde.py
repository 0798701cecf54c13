"""Strong one-step schemes for Ito SDEs dx = a(x, t) dt + B(x, t) dW.

Schemes take their stochastic integrals from the catalog: the Wiener
increment is sqrt(h) zeta_0, Milstein's mixed double integrals are the I00
series truncated at order q, and the order 1.5 scheme takes the weighted
integral I1 to form int int dW ds.

The zeta of each step come either from a fine Wiener path (left-point sums
over the sub-steps, so coarse and fine schemes see the same noise) or from a
pool keyed by (seed, path, step).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import random as crng
from .basis import BasisSpec, Interval, phi_matrix
from .catalog import legendre_matrix, legendre_vector
from .io import dumps17, write_csv
from .oracle import WienerPath, simulate_path

SCHEMES = ("euler", "milstein", "taylor15")


@dataclass
class SdeProblem:
    """Drift ``a(x, t) -> (..., n)`` and diffusion ``B(x, t) -> (..., n, m)``.

    ``x`` arrives with leading batch axes, one per simulated path.
    ``exact(x0, t, T, W)`` returns the exact endpoint given the total
    increments ``W`` of shape (..., m), when such a formula exists.
    """

    drift: Callable
    diffusion: Callable
    x0: np.ndarray
    m: int
    exact: Optional[Callable] = None
    diffusion_jacobian: Optional[Callable] = None
    scalar_derivatives: Optional[Callable] = None
    name: str = ""

    def __post_init__(self):
        self.x0 = np.atleast_1d(np.asarray(self.x0, dtype=float))

    @property
    def n(self):
        return self.x0.shape[-1]


def _fd_jacobian(f, x, t, eps=1e-6):
    n = x.shape[-1]
    cols = []
    for k in range(n):
        dx = np.zeros(n)
        dx[k] = eps * max(1.0, float(np.max(np.abs(x[..., k]))))
        cols.append((f(x + dx, t) - f(x - dx, t)) / (2 * dx[k]))
    return np.stack(cols, axis=-1)


def diffusion_jacobian(problem, x, t):
    """d B[a, j] / d x_k with shape (..., n, m, n)."""
    if problem.diffusion_jacobian is not None:
        return problem.diffusion_jacobian(x, t)
    return _fd_jacobian(problem.diffusion, x, t)


def gbm(mu=0.5, sigma=1.0, x0=1.0) -> SdeProblem:
    """Scalar geometric Brownian motion with its exact solution."""

    def drift(x, t):
        return mu * x

    def diffusion(x, t):
        return (sigma * x)[..., None]

    def jac(x, t):
        return np.full(x.shape[:-1] + (1, 1, 1), sigma)

    def exact(x0, t, T, W):
        return x0 * np.exp((mu - 0.5 * sigma**2) * (T - t) + sigma * W)

    def derivs(x, t):
        return mu, 0.0, sigma, 0.0

    return SdeProblem(drift, diffusion, [x0], 1, exact, jac, derivs, name=f"gbm(mu={mu}, sigma={sigma})")


DEFAULT_BILINEAR = (
    np.array([[0.1, 0.0], [0.0, -0.1]]),
    np.array([[0.2, 0.6], [0.0, -0.2]]),
    np.array([[-0.1, 0.0], [0.7, 0.1]]),
)


def bilinear(A0=None, A1=None, A2=None, x0=(1.0, 1.0)) -> SdeProblem:
    """dx = A0 x dt + A1 x dW1 + A2 x dW2.

    The default matrices do not commute, so the Levy area of (W1, W2) enters
    the strong error and Milstein needs the mixed double integrals.
    """
    d0, d1, d2 = DEFAULT_BILINEAR
    A0 = d0 if A0 is None else np.asarray(A0, float)
    A = np.stack([d1 if A1 is None else np.asarray(A1, float), d2 if A2 is None else np.asarray(A2, float)])

    def drift(x, t):
        return x @ A0.T

    def diffusion(x, t):
        return np.einsum("jak,...k->...aj", A, x)

    def jac(x, t):
        return np.broadcast_to(np.transpose(A, (1, 0, 2)), x.shape[:-1] + (A.shape[1], 2, A.shape[2]))

    return SdeProblem(drift, diffusion, x0, 2, None, jac, name="bilinear")


def _needed_index(scheme, m, q):
    if scheme == "euler":
        return 0
    if scheme == "milstein":
        return q if m > 1 else 0
    return 1


def _step_zetas(path, n_steps, h, J):
    """zeta_j^(i) per coarse step from the sub-steps: (..., m, n_steps, J).

    Left-point sums in general; when the path carries sub-step moments, zeta_0
    and zeta_1 are assembled exactly from increments and moments.
    """
    if path.N % n_steps:
        raise ValueError(f"path with N={path.N} cannot be split into {n_steps} steps")
    sub = path.N // n_steps
    dW = path.dW.reshape(path.dW.shape[:-1] + (n_steps, sub))
    local = BasisSpec.legendre(0.0, h)
    Phi = phi_matrix(local, J - 1, h * np.arange(sub) / sub)  # (J, sub)
    Z = np.einsum("...is,js->...ij", dW, Phi)
    if path.dZ is not None:
        dZ = path.dZ.reshape(dW.shape)
        offset = h * (np.arange(sub) + 0.5) / sub - 0.5 * h  # sub-step midpoints relative to the step midpoint
        Z[..., 0] = dW.sum(-1) / math.sqrt(h)
        if J > 1:
            Z[..., 1] = 2 * math.sqrt(3) / h**1.5 * (dZ.sum(-1) + dW @ offset)
    return Z


def _pool_zetas(seed, path_index, m, n_steps, J):
    idx = np.asarray(path_index)[..., None, None, None]
    return crng.keyed_normals(
        seed,
        crng.STEP_POOL,
        np.arange(J)[None, None, :],
        np.arange(1, m + 1)[:, None, None],
        np.arange(n_steps)[None, :, None],
        idx,
    )


def _scalar_derivs(problem, x, t, eps=1e-4):
    if problem.scalar_derivatives is not None:
        return problem.scalar_derivatives(x, t)

    def a(y):
        return problem.drift(y, t)

    def b(y):
        return problem.diffusion(y, t)[..., 0]

    e = eps * np.maximum(1.0, np.abs(x))
    da = (a(x + e) - a(x - e)) / (2 * e)
    dda = (a(x + e) - 2 * a(x) + a(x - e)) / e**2
    db = (b(x + e) - b(x - e)) / (2 * e)
    ddb = (b(x + e) - 2 * b(x) + b(x - e)) / e**2
    return da, dda, db, ddb


def integrate(problem: SdeProblem, scheme: str, h: float, path: WienerPath = None, seed=None, q=None,
              T=1.0, t0=0.0, path_index=0):
    """Endpoint of one strong trajectory (or a batch, if ``path`` is batched).

    Exactly one of ``path`` and ``seed`` selects the noise.  ``q`` is the
    truncation order of the mixed double integrals and is required only by
    Milstein with m > 1.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")
    if (path is None) == (seed is None):
        raise ValueError("give exactly one of path or seed")
    interval = path.interval if path is not None else Interval(t0, T)
    ratio = interval.length / h
    n_steps = int(round(ratio))
    if n_steps < 1 or abs(ratio - n_steps) > 1e-9 * max(1.0, ratio):
        raise ValueError(f"step {h} does not divide the interval length {interval.length}")
    m, n = problem.m, problem.n
    if path is not None and path.m != m:
        raise ValueError(f"path has {path.m} components, problem needs {m}")
    if scheme == "milstein" and m > 1 and q is None:
        raise ValueError("Milstein with several noises needs the truncation order q")
    if scheme == "taylor15" and (m != 1 or n != 1):
        raise ValueError("the order 1.5 scheme is implemented for scalar equations with one noise")
    J = _needed_index(scheme, m, q or 0) + 1
    if path is not None:
        Z = _step_zetas(path, n_steps, h, J)
        batch = path.dW.shape[:-2]
    else:
        Z = _pool_zetas(seed, path_index, m, n_steps, J)
        batch = Z.shape[:-3]
    x = np.broadcast_to(problem.x0, batch + (n,)).astype(float)
    rh = math.sqrt(h)
    M00 = legendre_matrix("I00", q, h) if scheme == "milstein" and m > 1 else None
    v1 = legendre_vector("I1", h) if scheme == "taylor15" else None
    for k in range(n_steps):
        t = interval.t + k * h
        z = Z[..., :, k, :]  # (..., m, J)
        dW = rh * z[..., 0]
        a = problem.drift(x, t)
        B = problem.diffusion(x, t)
        if scheme == "euler":
            x = x + a * h + np.einsum("...aj,...j->...a", B, dW)
        elif scheme == "milstein":
            if m > 1:
                I = np.einsum("...ia,ab,...jb->...ij", z, M00, z)
            else:
                I = np.zeros(batch + (1, 1))
            d = np.arange(m)
            I[..., d, d] = 0.5 * (dW**2 - h)
            # off-diagonal entries: Stratonovich and Ito coincide for distinct components
            jac = diffusion_jacobian(problem, x, t)  # (..., n, m, n)
            Lb = np.einsum("...ajk,...ki->...aij", jac, B)  # L^{i} b^{j}
            x = x + a * h + np.einsum("...aj,...j->...a", B, dW) + np.einsum("...aij,...ij->...a", Lb, I)
        else:
            xs = x[..., 0]
            av, bv = a[..., 0], B[..., 0, 0]
            da, dda, db, ddb = _scalar_derivs(problem, x, t)
            da, dda, db, ddb = (np.asarray(v)[..., 0] if np.ndim(v) > len(batch) else v for v in (da, dda, db, ddb))
            dw = dW[..., 0]
            dz = h * dw + z[..., 0, :2] @ v1
            xs = (
                xs
                + av * h
                + bv * dw
                + 0.5 * bv * db * (dw**2 - h)
                + da * bv * dz
                + 0.5 * (av * da + 0.5 * bv**2 * dda) * h**2
                + (av * db + 0.5 * bv**2 * ddb) * (dw * h - dz)
                + 0.5 * bv * (bv * ddb + db**2) * (dw**2 / 3 - h) * dw
            )
            x = xs[..., None]
    return x


@dataclass
class ConvergenceReport:
    steps: list
    errors: list
    std_errs: list
    slope: float
    n_paths: int
    config: dict = field(default_factory=dict)

    def to_csv(self, path_or_file=None):
        rows = [(float(h), float(e), float(s)) for h, e, s in zip(self.steps, self.errors, self.std_errs)]
        if path_or_file is None:
            import io as _io

            buf = _io.StringIO()
            write_csv(buf, ["h", "rms_error", "std_err"], rows)
            return buf.getvalue()
        return write_csv(path_or_file, ["h", "rms_error", "std_err"], rows)

    def to_json(self):
        return dumps17(
            {
                "config": self.config,
                "steps": [float(h) for h in self.steps],
                "errors": [float(e) for e in self.errors],
                "std_errs": [float(s) for s in self.std_errs],
                "slope": float(self.slope),
                "n_paths": self.n_paths,
            }
        )


def fit_slope(steps, errors):
    """Least-squares slope of log(error) against log(h)."""
    return float(np.polyfit(np.log(steps), np.log(errors), 1)[0])


def _path_seeds(seed, n_paths):
    return np.array([crng.derive_seed(seed, idx) for idx in range(n_paths)], dtype=np.uint64)


def strong_order(problem: SdeProblem, scheme: str, steps: Sequence[float], n_paths: int, seed: int, q=None,
                 refine=None, T=1.0, chunk=500, reference_scheme="milstein") -> ConvergenceReport:
    """RMS endpoint error of ``scheme`` at each step size, all on shared fine paths.

    Every path is sampled once at step ``min(steps) / refine``, with sub-step
    moments; each scheme run reads its increments (and zeta) from that path.  The reference is the
    exact solution when the problem has one, otherwise ``reference_scheme``
    (with its mixed integrals fully resolved by the fine grid, q = 0) run at
    the fine step itself.
    """
    steps = [float(h) for h in steps]
    if len(steps) < 3:
        raise ValueError("need at least three step sizes")
    if any(b >= a for a, b in zip(steps, steps[1:])):
        raise ValueError("steps must be strictly decreasing")
    for h in steps[1:]:
        r = steps[0] / h
        if abs(r - round(r)) > 1e-9 * r:
            raise ValueError("steps must be integer refinements of the coarsest step")
    if refine is None:
        refine = 1 if problem.exact is not None else 64
    n_fine = int(round(T / steps[-1])) * refine
    h_fine = T / n_fine
    seeds = _path_seeds(seed, n_paths)
    chunks = []
    for lo in range(0, n_paths, chunk):
        path = simulate_path(seeds[lo : lo + chunk], problem.m, n_fine, Interval(0.0, T), moments=True)
        if problem.exact is not None:
            ref = problem.exact(problem.x0, 0.0, T, path.dW.sum(axis=-1))
        else:
            ref = integrate(problem, reference_scheme, h_fine, path=path, q=0)
        errs = [np.sum((integrate(problem, scheme, h, path=path, q=q) - ref) ** 2, axis=-1) for h in steps]
        chunks.append(np.stack(errs))
    sq = np.concatenate(chunks, axis=1)
    mse = sq.mean(axis=1)
    rms = np.sqrt(mse)
    se_mse = sq.std(axis=1, ddof=1) / math.sqrt(n_paths)
    se = se_mse / (2 * rms)
    config = {
        "problem": problem.name,
        "scheme": scheme,
        "q": q,
        "seed": int(seed),
        "refine": int(refine),
        "T": float(T),
        "reference": "exact" if problem.exact is not None else reference_scheme,
    }
    return ConvergenceReport(steps, rms.tolist(), se.tolist(), fit_slope(steps, rms), n_paths, config)
