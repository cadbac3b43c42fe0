import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parmonodromy.continuation import monodromy_rep
from parmonodromy.jets import Jet, exp, log, taylor_of
from parmonodromy.rationality import (
    SampledFunction,
    detect_rational_in_x,
    invariance_rationality_harness,
    wronskian,
    wronskian_ratio,
)
from parmonodromy.systems import LinearSystem


def one(x, t):
    return 1 + 0 * x


def ident(x, t):
    return x


def square(x, t):
    return x * x


def test_wronskian_examples():
    assert wronskian([one, ident], 0.4) == pytest.approx(1)
    assert wronskian([ident, ident], 0.4) == 0
    assert wronskian([one, ident, square], 0.4) == pytest.approx(2)


def test_jets_match_closed_forms():
    x = Jet.variable(0.3, 5)
    assert np.allclose(exp(x).derivatives(), np.exp(0.3))
    assert np.allclose(log(1 + x).derivatives()[:3], [np.log(1.3), 1 / 1.3, -1 / 1.3**2])
    assert np.allclose(taylor_of(lambda z: 1 / (1 - z), 0.0, 6), np.ones(6))


def test_constant_is_rational_of_degree_zero():
    v = detect_rational_in_x(one)
    assert v.rational and v.m == 0
    a, b = v.coefficients[0]
    assert np.allclose(a, [1]) and np.allclose(b, [1])


def test_moebius_coefficients():
    grid = [(0.3,), (0.7 + 0.2j,)]
    v = detect_rational_in_x(lambda x, t: (t[0] * x + 1) / (x - t[0]), grid=grid)
    assert v.rational and v.m == 1
    for (t,), (a, b) in zip(grid, v.coefficients):
        assert np.allclose(a, [1, t]) and np.allclose(b, [-t, 1])
    assert max(v.residuals) <= 1e-8


def test_truncated_exponential_is_not_rational():
    f = SampledFunction.from_series([1 / math.factorial(k) for k in range(20)])
    v = detect_rational_in_x(f, 5)
    assert not v.rational and repr(v) == "NotRationalUpTo(5)"


def test_truncated_logarithm_is_not_rational():
    f = SampledFunction.from_series([0] + [(-1) ** (k + 1) / k for k in range(1, 20)])
    assert not detect_rational_in_x(f, 5).rational


def test_spot_check_derivative():
    f = SampledFunction.from_callable(lambda x, t: exp(t[0] * x) / (x + 3))
    assert f.spot_check(0.2, (0.5,)) < 1e-6


def test_harness_ratio_is_invariant_and_constant():
    B = LinearSystem(2, [("t", [[["t-1", 0], [0, "t-1"]]])])
    md = monodromy_rep(B, grid=[(0.5,)])
    rep = invariance_rationality_harness(B, md, lambda Z: Z[0, 0] / Z[1, 1])
    assert rep["invariant"] and rep["rational"] and rep["m"] == 0
    assert np.allclose(rep["verdict"]["coefficients"][0]["a"], [[1, 0]], atol=1e-8)


def test_harness_entry_is_not_invariant():
    B = LinearSystem(2, [("t", [[["t-1", 0], [0, "t-1"]]])])
    md = monodromy_rep(B, grid=[(0.5,)])
    rep = invariance_rationality_harness(B, md, lambda Z: Z[0, 0])
    assert not rep["invariant"] and rep["rational"] is None
    assert rep["deviations"][0]["deviation"] == pytest.approx(2, abs=1e-6)


def test_harness_commuting_product(commuting_pair):
    md = monodromy_rep(commuting_pair, grid=[(0.0,)])
    rep = invariance_rationality_harness(commuting_pair, md, lambda Z: Z[0, 0] * Z[1, 1])
    assert rep["invariant"] and rep["rational"] and rep["m"] == 0
    rep = invariance_rationality_harness(commuting_pair, md, lambda Z, dZ: Z[0, 0] * Z[1, 1] + dZ[0][0, 1],
                                         t_derivatives=True)
    assert rep["invariant"] and rep["rational"]


# -- properties ---------------------------------------------------------------
def _random_rational(rng):
    dp, dq = rng.integers(0, 4, 2)
    p = rng.normal(size=(dp + 1, 2)) + 1j * rng.normal(size=(dp + 1, 2))
    q = rng.normal(size=(dq + 1, 2)) + 1j * rng.normal(size=(dq + 1, 2))

    def f(x, t):
        s = t[0]
        a = sum((c0 + c1 * s) * x**i for i, (c0, c1) in enumerate(p))
        b = sum((c0 + c1 * s) / (1 + s * s) * x**i for i, (c0, c1) in enumerate(q))
        return a / b

    return f, int(max(dp, dq))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 100_000))
def test_detection_soundness(seed):
    rng = np.random.default_rng(seed)
    f, m = _random_rational(rng)
    grid = [(0.1,), (-0.4,)]
    v = detect_rational_in_x(f, 8, grid, seed=seed)
    assert v.rational and v.m <= m
    for (t,), (a, b) in zip(grid, v.coefficients):
        for x in rng.normal(size=4) + 1j * rng.normal(size=4):
            fx = f(x, (t,))
            assert abs(np.polyval(a[::-1], x) / np.polyval(b[::-1], x) - fx) <= 1e-8 * max(1.0, abs(fx))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 100_000))
def test_wronskian_vanishes_at_true_degree(seed):
    rng = np.random.default_rng(seed)
    f, m = _random_rational(rng)
    for t in [(0.2,), (0.6,)]:
        x0 = 0.5 * np.exp(2j * np.pi * rng.random())
        assert wronskian_ratio(taylor_of(f, x0, 2 * m + 12, t), m) <= 1e-8


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 100_000))
def test_wronskian_antisymmetry(seed):
    rng = np.random.default_rng(seed)
    c = rng.normal(size=(3, 3))
    fs = [lambda x, t, k=k: exp(c[k, 0] * x) * (c[k, 1] + c[k, 2] * x) for k in range(3)]
    x = 0.3
    w = wronskian(fs, x)
    w_swapped = wronskian([fs[1], fs[0], fs[2]], x)
    assert abs(w + w_swapped) <= 1e-12 * max(1.0, abs(w))
