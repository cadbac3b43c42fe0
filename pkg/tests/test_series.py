import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parmonodromy.errors import CenterMismatch
from parmonodromy.param_algebra import ParamRational
from parmonodromy.series import MatrixLaurentSeries, delta_apply, estimate_radius, invert, series_arith

t = ParamRational.var(0)


def scalar(coeffs, low=0, center=0.0, truncation=None):
    c = np.asarray(coeffs, dtype=complex).reshape(-1, 1, 1)
    return MatrixLaurentSeries(center, low, c, truncation)


def test_product_of_binomials():
    S = scalar([1, 1, 0, 0], truncation=3) @ scalar([1, -1, 0, 0], truncation=3)
    assert np.allclose(S.coeffs.ravel()[:4], [1, 0, -1, 0])


def test_geometric_inverse():
    S = invert(scalar([1, -1, 0, 0], truncation=3))
    assert np.allclose([S.coeff(k)[0, 0] for k in range(4)], [1, 1, 1, 1])


def test_gauge_series_inverse_orders():
    P = MatrixLaurentSeries.from_dict(t, {-2: [[0, -1], [0, 0]], -1: [[1, 0], [0, 0]], 1: [[0, 0], [0, 1]]}, 2,
                                      truncation=6, symbolic=True)
    assert P.low == -2
    Pi = invert(P)
    # P^-1 = [[u, u^-2], [0, u^-1]] with u = x - t, so the lowest order is -2
    assert Pi.valuation() == -2
    num = Pi.at((0.3,))
    assert np.allclose(num.coeff(1)[0, 0], 1) and np.allclose(num.coeff(-2)[0, 1], 1)
    assert np.allclose(num.coeff(-1)[1, 1], 1)
    prod = (P @ Pi).at((0.3,))
    for k in range(prod.low, int(prod.truncation) + 1):
        assert np.allclose(prod.coeff(k), np.eye(2) if k == 0 else 0, atol=1e-12)


def test_delta_of_constant_and_monomial():
    A0 = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert np.allclose(delta_apply(MatrixLaurentSeries.constant(A0, truncation=4)).coeffs, 0)
    X = MatrixLaurentSeries.monomial(np.eye(2), 1)
    D = delta_apply(X)
    assert np.allclose(D.coeff(1), np.eye(2))


def test_delta_termwise():
    rng = np.random.default_rng(4)
    coeffs = rng.normal(size=(5, 2, 2))
    S = MatrixLaurentSeries(0.0, -2, coeffs, truncation=2)
    D = delta_apply(S)
    for i in range(-2, 3):
        assert np.allclose(D.coeff(i), i * coeffs[i + 2])


def test_radius_estimates():
    assert estimate_radius(scalar([1, 2, 3], truncation=math.inf)) == math.inf
    assert 0.8 <= estimate_radius(scalar(np.ones(17), truncation=16)) <= 1.25
    assert 0.4 <= estimate_radius(scalar(2.0 ** np.arange(17), truncation=16)) <= 0.625


def test_center_mismatch():
    with pytest.raises(CenterMismatch):
        scalar([1, 1], center=0.0) @ scalar([1, 1], center=1.0)


def test_truncation_bookkeeping():
    S = scalar([1, 1, 1], low=-1, truncation=1)
    T = scalar([1, 1, 1, 1], truncation=3)
    assert (S @ T).truncation == 1
    assert (T @ T).truncation == 3


def test_json_round_trip():
    P = MatrixLaurentSeries.from_dict(t, {-1: [["t", 1], [0, 0]], 0: [[1, 0], [0, "t^2"]]}, 2, truncation=3,
                                      symbolic=True)
    Q = MatrixLaurentSeries.from_json(P.to_json(), 1)
    assert np.allclose(Q.evaluate(0.7, (0.2,)), P.evaluate(0.7, (0.2,)))


def test_series_arith_dispatch():
    S = scalar([1, 2], truncation=1)
    assert np.allclose(series_arith("add", S, S).coeffs, 2 * S.coeffs)


mats = st.integers(0, 10_000).map(lambda s: np.random.default_rng(s))


def _random_series(rng, n=2, low=0, length=6):
    c = rng.normal(size=(length, n, n)) + 1j * rng.normal(size=(length, n, n))
    return MatrixLaurentSeries(0.0, low, 0.5 * c, truncation=low + length - 1)


@settings(max_examples=30, deadline=None)
@given(mats)
def test_associativity_at_points(rng):
    S, T, U = (_random_series(rng, low=int(rng.integers(-1, 1))) for _ in range(3))
    left, right = (S @ T) @ U, S @ (T @ U)
    assert left.truncation == right.truncation
    x = 0.1 * np.exp(2j * np.pi * rng.random())
    a, b = left.evaluate(x), right.evaluate(x)
    assert np.linalg.norm(a - b) <= 1e-9 * max(1.0, np.linalg.norm(a))


@settings(max_examples=30, deadline=None)
@given(mats)
def test_inverse_is_exact(rng):
    S = _random_series(rng)
    S.coeffs[0] += 3 * np.eye(2)
    prod = invert(S) @ S
    for k in range(0, int(prod.truncation) + 1):
        assert np.allclose(prod.coeff(k), np.eye(2) if k == 0 else 0, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(mats)
def test_delta_is_a_derivation(rng):
    S, T = _random_series(rng, low=-1), _random_series(rng)
    lhs = delta_apply(S @ T)
    rhs = delta_apply(S) @ T + S @ delta_apply(T)
    for k in range(lhs.low, int(min(lhs.truncation, rhs.truncation)) + 1):
        assert np.allclose(lhs.coeff(k), rhs.coeff(k), atol=1e-12)
