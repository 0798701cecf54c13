"""Counter-based Gaussian draws.

Every variate is a pure function of ``(seed, stream, counter)``: there is no
sequential generator state, so any entry of a pool or a Wiener path can be
regenerated on its own, in any order, from any thread.

The bit source is Philox4x64-10, the same generator as
:class:`numpy.random.Philox`, evaluated here in vectorized form so that each
array element carries its own counter.  Two 64-bit output words are turned
into one standard normal by the Box-Muller transform.
"""

from __future__ import annotations

import numpy as np

# stream tags, stored in the second key word
ZETA = 1
TAIL_XI = 2
TAIL_MU = 3
WIENER = 4
STEP_POOL = 5

_M0 = np.uint64(0xD2E7470EE14C6C93)
_M1 = np.uint64(0xCA5A826395121157)
_W0 = np.uint64(0x9E3779B97F4A7C15)
_W1 = np.uint64(0xBB67AE8584CAA73B)
_LO32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_MASK64 = (1 << 64) - 1


def _mulhilo(a, b):
    lo = a * b
    a_lo, a_hi = a & _LO32, a >> _S32
    b_lo, b_hi = b & _LO32, b >> _S32
    t = a_lo * b_lo
    m1 = a_hi * b_lo + (t >> _S32)
    m2 = a_lo * b_hi + (m1 & _LO32)
    hi = a_hi * b_hi + (m1 >> _S32) + (m2 >> _S32)
    return hi, lo


def philox4x64(counter, key, rounds=10):
    """Philox4x64 block function.

    Parameters
    ----------
    counter : sequence of 4 uint64 arrays (broadcastable)
    key : sequence of 2 uint64 arrays (broadcastable)

    Returns
    -------
    tuple of 4 uint64 arrays
    """
    c0, c1, c2, c3 = np.broadcast_arrays(*(np.asarray(c, dtype=np.uint64) for c in counter))
    k0 = np.asarray(key[0], dtype=np.uint64)
    k1 = np.asarray(key[1], dtype=np.uint64)
    with np.errstate(over="ignore"):
        for r in range(rounds):
            if r:
                k0 = k0 + _W0
                k1 = k1 + _W1
            hi0, lo0 = _mulhilo(_M0, c0)
            hi1, lo1 = _mulhilo(_M1, c2)
            c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
    return c0, c1, c2, c3


def _u64(x):
    if isinstance(x, (int, np.integer)):
        return np.uint64(int(x) & _MASK64)
    arr = np.asarray(x)
    if arr.dtype.kind == "i":
        return arr.astype(np.int64).view(np.uint64)
    return arr.astype(np.uint64)


def _box_muller(x0, x1):
    r = np.sqrt(-2.0 * np.log(((x0 >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53))
    theta = 2.0 * np.pi * (x1 >> np.uint64(11)).astype(np.float64) * 2.0**-53
    return r, theta


def keyed_normals(seed, stream, a, b=0, c=0, d=0):
    """Standard normals keyed by ``(seed, stream)`` and the counter ``(a, b, c, d)``.

    All arguments broadcast against each other; ``seed`` may itself be an
    array, which is how Monte Carlo loops draw many pools at once.  Counters
    ``a = 2r`` and ``a = 2r + 1`` share one Philox block (cosine and sine
    halves of the Box-Muller pair).
    """
    a = _u64(a)
    x0, x1, _, _ = philox4x64((a >> np.uint64(1), _u64(b), _u64(c), _u64(d)), (_u64(seed), _u64(stream)))
    r, theta = _box_muller(x0, x1)
    return np.where((a & np.uint64(1)) == 0, r * np.cos(theta), r * np.sin(theta))


def normal_range(seed, stream, n, b=0, c=0, d=0):
    """Equivalent to ``keyed_normals(seed, stream, arange(n), b, c, d)`` with the
    range along a new trailing axis, computing each Philox block once."""
    half = (n + 1) // 2
    seed, b, c, d = (np.asarray(_u64(v))[..., None] for v in (seed, b, c, d))
    x0, x1, _, _ = philox4x64((np.arange(half, dtype=np.uint64), b, c, d), (seed, _u64(stream)))
    r, theta = _box_muller(x0, x1)
    out = np.empty(r.shape[:-1] + (2 * half,))
    out[..., 0::2] = r * np.cos(theta)
    out[..., 1::2] = r * np.sin(theta)
    return out[..., :n]


def derive_seed(seed, *words):
    """Fold extra integers into a 64-bit seed (used for per-path sub-streams)."""
    state = np.random.SeedSequence([int(seed) & _MASK64, *(int(w) & _MASK64 for w in words)])
    return int(state.generate_state(1, np.uint64)[0])
