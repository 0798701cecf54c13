import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stratint.basis import BasisSpec, DomainError, Interval, phi_matrix
from stratint.coeffs import (
    CoefficientTable,
    MultiIndex,
    WeightSpec,
    coefficient_table,
    fourier_coefficient,
    half_weight_product_integral,
    kernel_eval,
    kernel_norm_sq,
    trace_sum,
)

ONE = WeightSpec.constant(1.0)
S = WeightSpec.tabulated(lambda s: s, "s")
LEG01 = BasisSpec.legendre(0, 1)


def test_weightspec_forms():
    m = WeightSpec.monomial(0.5, 2)
    assert m(np.array([0.5, 1.5])).tolist() == [0.0, 1.0]
    assert WeightSpec.monomial(1.0, 1)(3.0) == -2.0  # (t - tau)
    with pytest.raises(ValueError):
        WeightSpec.monomial(0.0, 1.5)
    assert WeightSpec.from_dict(m.to_dict()) == m


def test_kernel_examples():
    iv = Interval(0, 1)
    assert kernel_eval([ONE, ONE], [0.2, 0.7], iv) == 1.0
    assert kernel_eval([ONE, ONE], [0.7, 0.2], iv) == 0.0
    assert kernel_eval([ONE, ONE], [0.4, 0.4], iv) == 0.0
    assert kernel_eval([S, ONE], [0.5, 0.8], iv) == 0.5
    assert kernel_eval([S], [0.3], iv) == 0.3
    with pytest.raises(DomainError):
        kernel_eval([ONE, ONE], [0.2, 1.2], iv)


def test_fourier_examples():
    assert fourier_coefficient(LEG01, [ONE], MultiIndex((0,))) == pytest.approx(1.0, abs=1e-15)
    assert fourier_coefficient(LEG01, [ONE, ONE], (0, 0)) == pytest.approx(0.5, abs=1e-15)
    assert fourier_coefficient(LEG01, [ONE, ONE], (0, 1)) == pytest.approx(1 / (2 * math.sqrt(3)), abs=1e-15)
    with pytest.raises(ValueError):
        MultiIndex((0, 0, 0, 0, 0))


def test_table_examples():
    np.testing.assert_allclose(coefficient_table(LEG01, [ONE], [2]).values, [1.0, 0.0, 0.0], atol=1e-15)
    C = coefficient_table(LEG01, [ONE, ONE], [1, 1]).values
    c = 1 / (2 * math.sqrt(3))
    # values[j1, j2] = C_{j2 j1}
    np.testing.assert_allclose(C, [[0.5, c], [-c, 0.0]], atol=1e-15)
    psi = WeightSpec.tabulated(np.exp, "exp")
    T = coefficient_table(LEG01, [psi, psi], [0, 0]).values
    assert T[0, 0] == pytest.approx(0.5 * (math.e - 1) ** 2, rel=1e-13)


def test_table_size_limit():
    with pytest.raises(ValueError):
        coefficient_table(LEG01, [ONE] * 4, [60, 60, 60, 60])


@given(st.integers(1, 4), st.data())
@settings(max_examples=25, deadline=None)
def test_single_coefficient_equals_table_entry(k, data):
    basis = data.draw(st.sampled_from([LEG01, BasisSpec.trigonometric(0, 2)]))
    weights = [WeightSpec.monomial(basis.interval.t, data.draw(st.integers(0, 2))) for _ in range(k)]
    p = [data.draw(st.integers(0, 4)) for _ in range(k)]
    table = coefficient_table(basis, weights, p)
    idx = tuple(data.draw(st.integers(0, v)) for v in p)
    c = fourier_coefficient(basis, weights, idx, quad_points=max(p) + 16 if basis.kind.value == "legendre" else 32,
                            panels=None if basis.kind.value == "legendre" else math.ceil((max(p) + 1) / 8))
    assert c == table.values[idx]


def test_examples_trace_and_norm():
    t = coefficient_table(LEG01, [ONE, ONE], [20, 20])
    for p in (0, 5, 20):
        assert trace_sum(t, p) == pytest.approx(0.5, abs=1e-14)
    with pytest.raises(ValueError):
        trace_sum(t, 21)
    t = coefficient_table(LEG01, [S, S], [50, 50])
    assert abs(trace_sum(t, 50) - 1 / 6) < 1e-4
    assert kernel_norm_sq([ONE, ONE], Interval(0, 1)) == pytest.approx(0.5, abs=1e-15)
    assert kernel_norm_sq([ONE, ONE], Interval(0, 2)) == pytest.approx(2.0, abs=1e-14)
    assert kernel_norm_sq([S, ONE], Interval(0, 1)) == pytest.approx(1 / 12, abs=1e-15)
    assert half_weight_product_integral([S, ONE], Interval(0, 1)) == pytest.approx(0.25, abs=1e-15)


def test_trace_mixed_weights_rate():
    # psi_1 = s, psi_2 = 1 on [0, 1]: partial sums approach 1/4 at rate O(1/p)
    t = coefficient_table(LEG01, [S, ONE], [400, 400])
    errs = np.array([trace_sum(t, p) - 0.25 for p in (50, 100, 200, 400)])
    scaled = errs * np.array([50, 100, 200, 400])
    np.testing.assert_allclose(scaled, -1 / 16, rtol=0.05)
    assert np.all(np.diff(np.abs(errs)) < 0)


@pytest.mark.parametrize("w", [ONE, WeightSpec.monomial(0.0, 1), WeightSpec.monomial(0.0, 2),
                               WeightSpec.tabulated(np.cos, "cos")])
def test_symmetry_identity(w):
    basis = LEG01
    p = 30
    C = coefficient_table(basis, [w, w], [p, p]).values
    C1 = coefficient_table(basis, [w], [p]).values
    np.testing.assert_allclose(C + C.T, np.outer(C1, C1), atol=1e-10)


def test_symmetry_identity_trig():
    basis = BasisSpec.trigonometric(0, 1)
    w = WeightSpec.monomial(0.0, 1)
    C = coefficient_table(basis, [w, w], [20, 20]).values
    C1 = coefficient_table(basis, [w], [20]).values
    np.testing.assert_allclose(C + C.T, np.outer(C1, C1), atol=1e-10)


@given(st.integers(0, 3), st.integers(0, 3), st.integers(0, 12))
@settings(max_examples=20, deadline=None)
def test_exactness_under_doubled_points(d1, d2, p):
    weights = [WeightSpec.monomial(0.0, d1), WeightSpec.monomial(0.0, d2)]
    # the outer integrand of a k = 2 coefficient has degree 2p + d1 + d2 + 1
    base = p + (d1 + d2) // 2 + 2
    a = coefficient_table(LEG01, weights, [p, p], quad_points=base).values
    b = coefficient_table(LEG01, weights, [p, p], quad_points=2 * base).values
    assert np.max(np.abs(a - b)) <= 1e-13


def test_k1_matches_direct_quadrature():
    from stratint.basis import gauss_legendre

    iv = Interval(0.5, 2.0)
    basis = BasisSpec.legendre(iv.t, iv.T)
    w = WeightSpec.tabulated(np.sin, "sin")
    s, ws = gauss_legendre(80).mapped(iv.t, iv.T)
    ref = (phi_matrix(basis, 6, s) * np.sin(s) * ws).sum(-1)
    np.testing.assert_allclose(coefficient_table(basis, [w], [6], quad_points=40).values, ref, atol=1e-14)


def test_k3_simplex_volume():
    assert fourier_coefficient(LEG01, [ONE] * 3, (0, 0, 0)) == pytest.approx(1 / 6, abs=1e-15)
    assert fourier_coefficient(LEG01, [ONE] * 4, (0, 0, 0, 0)) == pytest.approx(1 / 24, abs=1e-15)
    assert fourier_coefficient(BasisSpec.legendre(0, 2), [ONE] * 3, (0, 0, 0)) == pytest.approx(
        2**3 / 6 / 2**1.5, abs=1e-14)


def test_parseval_monotone():
    C = coefficient_table(LEG01, [ONE, ONE], [100, 100]).values
    sums = [np.sum(C[: p + 1, : p + 1] ** 2) for p in range(0, 101, 10)]
    assert np.all(np.diff(sums) > 0)
    assert 0 < 0.5 - sums[-1] < 2e-3
    assert 0.5 - sums[-1] == pytest.approx(1 / (4 * 201), abs=1e-12)


def test_json_round_trip(tmp_path):
    t = coefficient_table(BasisSpec.trigonometric(-1, 1), [WeightSpec.monomial(-1.0, 1), ONE], [3, 2])
    text = t.to_json()
    back = CoefficientTable.from_json(text)
    assert np.array_equal(back.values, t.values)
    assert back.p == t.p and back.weights == t.weights and back.basis == t.basis
    assert back.to_json() == text
