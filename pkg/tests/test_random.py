import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stratint import random as crng
from stratint.io import dumps17, fmt17, write_csv

u64 = st.integers(0, 2**64 - 1)


@given(u64, u64, u64, u64, u64, u64)
@settings(max_examples=50)
def test_philox_matches_numpy(c0, c1, c2, c3, k0, k1):
    # numpy treats the counter as one 256-bit integer and increments it before producing a block
    v = (c0 + (c1 << 64) + (c2 << 128) + (c3 << 192) - 1) % 2**256
    words = np.array([(v >> (64 * w)) & (2**64 - 1) for w in range(4)], dtype=np.uint64)
    bg = np.random.Philox(counter=words, key=np.array([k0, k1], dtype=np.uint64))
    ref = bg.random_raw(4)
    got = crng.philox4x64([c0, c1, c2, c3], [k0, k1])
    assert [int(v) for v in got] == [int(v) for v in ref]


def test_philox_vectorized():
    c = np.arange(6, dtype=np.uint64)
    out = crng.philox4x64((c, 1, 2, 3), (9, 8))
    for n in range(6):
        assert [int(w[n]) for w in out] == [int(v) for v in crng.philox4x64((n, 1, 2, 3), (9, 8))]


def test_keyed_normals_reproducible_and_independent_of_order():
    a = crng.keyed_normals(5, crng.ZETA, np.arange(10), 2)
    b = crng.keyed_normals(5, crng.ZETA, np.arange(10)[::-1], 2)[::-1]
    assert np.array_equal(a, b)
    assert crng.keyed_normals(5, crng.ZETA, 7, 2) == a[7]
    assert not np.array_equal(a, crng.keyed_normals(5, crng.WIENER, np.arange(10), 2))


def test_normal_range_equals_keyed():
    seeds = np.arange(3)[:, None]
    a = crng.normal_range(seeds, crng.ZETA, 11, b=np.arange(1, 4))
    k = crng.keyed_normals(seeds[..., None], crng.ZETA, np.arange(11), np.arange(1, 4)[:, None])
    assert np.array_equal(a, k)


def test_normal_moments():
    z = crng.normal_range(np.arange(100), crng.WIENER, 10000).ravel()
    assert abs(z.mean()) < 4 / np.sqrt(z.size)
    assert abs(z.var() - 1) < 5 * np.sqrt(2 / z.size)
    assert abs(np.mean(z**4) - 3) < 0.05
    assert abs(np.corrcoef(z[:-1], z[1:])[0, 1]) < 4 / np.sqrt(z.size)


def test_negative_seed_and_derive():
    assert np.isfinite(crng.keyed_normals(-3, crng.ZETA, 0))
    assert crng.derive_seed(1, 2) == crng.derive_seed(1, 2) != crng.derive_seed(1, 3)


def test_fmt17_round_trip():
    for x in (0.1, 1 / 3, 2.0**-60, 1e300, -0.0):
        assert float(fmt17(x)) == x
    with pytest.raises(ValueError):
        fmt17(float("nan"))


def test_dumps17_layout(tmp_path):
    text = dumps17({"a": [0.1, 2], "b": {"c": None, "d": True}, "e": np.array([1.5])})
    assert '"a": [0.10000000000000001, 2]' in text
    import json

    assert json.loads(text)["e"] == [1.5]
    out = tmp_path / "x.csv"
    write_csv(out, ["h", "e"], [(0.5, 1 / 3)])
    assert out.read_text() == "h,e\n0.5,0.33333333333333331\n"
