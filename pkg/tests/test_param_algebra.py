import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parmonodromy.errors import DivisionByZeroFunction, PoleAtParameter
from parmonodromy.param_algebra import ParamMatrix, ParamRational, Poly, parse_param, random_points

t = ParamRational.var(0)


def test_constant_and_variable():
    assert ParamRational.const(1).eval((0.7,)) == 1
    assert t.eval((0.0,)) == 0


def test_parse_and_eval_at_root():
    f = parse_param("(t^2 + 1)/(t - 2)")
    assert abs(f.eval((1j,))) < 1e-15


def test_cancellation_and_inverse_pair():
    assert (t + (1 - t)).eval((3.3,)) == pytest.approx(1)
    assert ((1 / t) * t).eval((0.4,)) == pytest.approx(1)


def test_unreduced_division_evaluates():
    f = (t * t - 1) / (t - 1)
    assert f.eval((2.0,)) == pytest.approx(3)


def test_pole_at_parameter():
    with pytest.raises(PoleAtParameter):
        (1 / (t - 2)).eval((2.0,))


def test_division_by_zero_function():
    with pytest.raises(DivisionByZeroFunction):
        t / (t - t)


def test_json_round_trip():
    f = parse_param("(3*t^2 - I)/(t + 5)")
    g = ParamRational.from_json(f.to_json(), 1)
    for p in random_points(1, 5, seed=1):
        assert g.eval(p) == pytest.approx(f.eval(p))


def test_two_parameters():
    f = parse_param("t1*t2 + t2^2", r=2)
    assert f.eval((2.0, 3.0)) == pytest.approx(15)


def test_matrix_inverse():
    M = ParamMatrix([[t, 1], [0, "t+1"]], 1)
    Mi = M.inverse()
    for p in [(0.3,), (2.0 + 1j,)]:
        assert np.allclose(Mi.eval(p) @ M.eval(p), np.eye(2))


small = st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False)


@st.composite
def rationals(draw):
    num = {(k,): draw(small) for k in range(draw(st.integers(0, 3)))}
    den = {(k,): draw(small) for k in range(draw(st.integers(1, 3)))}
    den[(0,)] = den.get((0,), 0) + 4.0  # keeps the denominator away from zero on |t| <= 1/2
    return ParamRational(Poly(num, 1), Poly(den, 1))


points = st.complex_numbers(max_magnitude=0.5, allow_nan=False, allow_infinity=False)


def _close(a, b, scale):
    return abs(a - b) <= 1e-12 * max(1.0, scale)


@settings(max_examples=60, deadline=None)
@given(rationals(), rationals(), points)
def test_arithmetic_commutes_with_evaluation(f, g, p):
    fp, gp = f.eval((p,)), g.eval((p,))
    scale = abs(fp) + abs(gp)
    assert _close((f + g).eval((p,)), fp + gp, scale)
    assert _close((f * g).eval((p,)), fp * gp, abs(fp) * abs(gp) + scale)
    if abs(gp) > 1e-3:
        assert abs((f / g).eval((p,)) - fp / gp) <= 1e-10 * max(1.0, abs(fp / gp))


@settings(max_examples=30, deadline=None)
@given(rationals(), points)
def test_evaluation_is_deterministic(f, p):
    a, b = f.eval((p,)), f.eval((p,))
    assert a == b or (math.isnan(a.real) and math.isnan(b.real))
