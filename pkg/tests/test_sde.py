import io
import json
import math

import numpy as np
import pytest

from stratint.basis import Interval
from stratint.catalog import IntegralId, catalog_eval
from stratint.expansion import sample_pool
from stratint.oracle import simulate_path
from stratint.sde import SdeProblem, bilinear, fit_slope, gbm, integrate, strong_order


def linear_ode(rate):
    return SdeProblem(lambda x, t: rate * x, lambda x, t: np.zeros(x.shape + (1,)), [1.0], 1)


@pytest.mark.parametrize("scheme", ["euler", "milstein", "taylor15"])
def test_zero_coefficients_keep_x0(scheme):
    p = SdeProblem(lambda x, t: 0 * x, lambda x, t: np.zeros(x.shape + (1,)), [2.5], 1)
    x = integrate(p, scheme, 0.125, seed=3, q=0)
    assert x.tolist() == [2.5]


def test_zero_diffusion_is_deterministic_euler():
    x = integrate(linear_ode(1.0), "euler", 1 / 64, seed=1)
    assert x[0] == pytest.approx((1 + 1 / 64) ** 64, rel=1e-14)
    y = integrate(linear_ode(1.0), "euler", 1 / 64, seed=2)
    assert np.array_equal(x, y)


def test_gbm_exact_against_fine_euler():
    # a single path fluctuates by the quadratic variation, sd ~ sqrt(2 / N); compare in RMS
    mu, sigma = 0.5, 1.0
    N = 10**6
    rel = []
    for seed in range(6):
        dW = simulate_path(seed, 1, N, Interval(0, 1)).dW[0]
        euler = np.prod(1 + mu / N + sigma * dW)
        rel.append(euler / gbm(mu, sigma).exact(1.0, 0.0, 1.0, dW.sum()) - 1)
    assert math.sqrt(np.mean(np.square(rel))) < 1e-3


def test_path_and_seed_inputs():
    prob = gbm()
    path = simulate_path(np.arange(4), 1, 64, Interval(0, 1))
    x = integrate(prob, "milstein", 1 / 16, path=path)
    assert x.shape == (4, 1)
    single = integrate(prob, "milstein", 1 / 16, path=simulate_path(2, 1, 64, Interval(0, 1)))
    assert np.array_equal(single, x[2])
    a = integrate(prob, "euler", 1 / 8, seed=5, path_index=np.arange(3))
    b = integrate(prob, "euler", 1 / 8, seed=5, path_index=np.arange(3))
    assert a.shape == (3, 1) and np.array_equal(a, b)


def test_errors():
    prob = gbm()
    with pytest.raises(ValueError):
        integrate(prob, "rk4", 0.1, seed=0)
    with pytest.raises(ValueError):
        integrate(prob, "euler", 0.3, seed=0)
    with pytest.raises(ValueError):
        integrate(prob, "euler", 0.25)
    with pytest.raises(ValueError):
        integrate(bilinear(), "milstein", 0.25, seed=0)
    with pytest.raises(ValueError):
        integrate(bilinear(), "taylor15", 0.25, seed=0, q=2)
    with pytest.raises(ValueError):
        integrate(prob, "euler", 0.25, path=simulate_path(0, 2, 8, Interval(0, 1)))
    with pytest.raises(ValueError):
        strong_order(prob, "euler", [0.25, 0.125], 10, 0)
    with pytest.raises(ValueError):
        strong_order(prob, "euler", [0.25, 0.1, 0.05], 10, 0)
    with pytest.raises(ValueError):
        strong_order(prob, "euler", [0.125, 0.25, 0.0625], 10, 0)


def test_milstein_single_noise_ignores_q():
    path = simulate_path(np.arange(50), 1, 256, Interval(0, 1))
    ref = integrate(gbm(), "milstein", 1 / 32, path=path)
    for q in (None, 0, 3, 20):
        assert np.array_equal(integrate(gbm(), "milstein", 1 / 32, path=path, q=q), ref)


def test_bilinear_mixed_integrals_reduce_error():
    prob = bilinear()
    reps = {q: strong_order(prob, "milstein", [1 / 4, 1 / 8, 1 / 16], 300, 11, q=q, refine=128) for q in (0, 10)}
    for e0, e10 in zip(reps[0].errors, reps[10].errors):
        assert e10 < e0


def test_commuting_noise_makes_q_irrelevant():
    # scalar x(s1 dW1 + s2 dW2): only I00 + its transpose enters, and that sum is exact for any q
    prob = SdeProblem(lambda x, t: 0 * x, lambda x, t: x[..., None] * np.array([0.4, 0.7]), [1.0], 2)
    path = simulate_path(np.arange(20), 2, 512, Interval(0, 1))
    a = integrate(prob, "milstein", 1 / 8, path=path, q=0)
    b = integrate(prob, "milstein", 1 / 8, path=path, q=12)
    np.testing.assert_allclose(a, b, rtol=1e-10)


def test_taylor_step_identity():
    # per step of size h: I01^(11) + I10^(11) = I0^(1) I1^(1), the relation the order 1.5 scheme relies on
    h = 2.0**-6
    iv = Interval(0, h)
    pool = sample_pool(np.arange(200), 1, 22)
    i01 = catalog_eval(IntegralId("I01", (1, 1)), iv, pool, 20)
    i10 = catalog_eval(IntegralId("I10", (1, 1)), iv, pool, 20)
    i0 = catalog_eval(IntegralId("I0", (1,)), iv, pool, 20)
    i1 = catalog_eval(IntegralId("I1", (1,)), iv, pool, 20)
    assert np.max(np.abs(i01 + i10 - i0 * i1)) < 1e-8


def test_taylor15_order():
    rep = strong_order(gbm(), "taylor15", [2.0**-k for k in range(3, 8)], 2000, 0)
    assert 1.25 <= rep.slope <= 1.75
    eul = strong_order(gbm(), "euler", [2.0**-k for k in range(3, 8)], 2000, 0)
    assert all(t < e for t, e in zip(rep.errors, eul.errors))


def test_report_outputs_and_determinism():
    a = strong_order(gbm(), "euler", [0.25, 0.125, 0.0625], 50, 9)
    b = strong_order(gbm(), "euler", [0.25, 0.125, 0.0625], 50, 9)
    assert a.to_csv() == b.to_csv() and a.to_json() == b.to_json()
    lines = a.to_csv().strip().splitlines()
    assert lines[0] == "h,rms_error,std_err" and len(lines) == 4
    assert float(lines[1].split(",")[0]) == 0.25
    doc = json.loads(a.to_json())
    assert doc["n_paths"] == 50 and doc["config"]["reference"] == "exact"
    buf = io.StringIO()
    a.to_csv(buf)
    assert buf.getvalue() == a.to_csv()


def test_step_zetas_exact_with_moments():
    from stratint.sde import _step_zetas

    path = simulate_path(np.arange(20000), 1, 8, Interval(0, 1), moments=True)
    Z = _step_zetas(path, 2, 0.5, 2)
    np.testing.assert_allclose(Z[..., 0], path.dW.reshape(-1, 1, 2, 4).sum(-1) / math.sqrt(0.5))
    z = Z.reshape(-1, 2)
    C = z.T @ z / len(z)
    np.testing.assert_allclose(C, np.eye(2), atol=0.03)
    # a single coarse step over the whole path matches the same construction with one sub-step
    one = simulate_path(3, 1, 1, Interval(0, 1), moments=True)
    assert _step_zetas(one, 1, 1.0, 2)[0, 0, 1] == pytest.approx(2 * math.sqrt(3) * one.dZ[0, 0])


def test_fit_slope():
    h = np.array([0.1, 0.05, 0.025])
    assert fit_slope(h, 3 * h**1.5) == pytest.approx(1.5)
