import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import nonresonant_A0, recurrence_defect
from parmonodromy.continuation import local_loop_monodromy, local_monodromy_from_exponent
from parmonodromy.errors import InvalidLocalSystem, ResonantEigenvalues
from parmonodromy.normal_form import (
    EPS_INT,
    FuchsLocalSystem,
    local_solution,
    max_integer_gap,
    moderate_growth_check,
    reduce_to_constant,
    shearing,
    sylvester_step,
)
from parmonodromy.systems import LinearSystem


def test_sylvester_zero_rhs():
    assert np.allclose(sylvester_step(np.diag([0.0, 0.5]), 1, np.zeros((2, 2))), 0)


def test_sylvester_diagonal_closed_form():
    assert np.allclose(sylvester_step(np.diag([0.0, 0.5]), 1, np.eye(2)), -np.eye(2))


def test_sylvester_resonance():
    with pytest.raises(ResonantEigenvalues) as exc:
        sylvester_step(np.diag([0.0, 1.0]), 1, np.array([[0.0, 0.0], [1.0, 0.0]]))
    assert exc.value.order == 1


def test_constant_system_needs_no_gauge():
    A0 = np.array([[0.1, 1.0], [0.0, 0.3]])
    P, B0 = reduce_to_constant(FuchsLocalSystem.from_coefficients([A0, 0 * A0, 0 * A0]), N=2)
    assert np.allclose(B0, A0) and all(np.allclose(p, 0) for p in P)


def test_two_recurrence_steps():
    F = FuchsLocalSystem.from_coefficients([np.diag([0.0, 0.5]), np.eye(2)], truncation=4)
    P, _ = reduce_to_constant(F, N=2)
    assert np.allclose(P[0], -np.eye(2))
    assert np.allclose(P[1], 0.5 * np.eye(2))


def test_random_3x3_identity_through_order_12():
    rng = np.random.default_rng(2024)
    A = [nonresonant_A0(rng, 3)] + [0.5 * rng.normal(size=(3, 3)) for _ in range(12)]
    P, _ = reduce_to_constant(FuchsLocalSystem.from_coefficients(A), N=12)
    assert recurrence_defect([np.eye(3)] + P, A, 12) <= 1e-12


def test_symbolic_system_reduction():
    B = LinearSystem(2, [("t", [[["t", 1], [0, "t/2 + 1/5"]]])], [[[1, 0], [0, "t"]]])
    F = FuchsLocalSystem.from_system(B, 0, N=8)
    P, A0 = reduce_to_constant(F, t=(0.3,), N=6)
    A = [F.at((0.3,)).coeff(k) for k in range(7)]
    assert recurrence_defect([np.eye(2)] + P, A, 6) <= 1e-12


def test_shearing_not_needed_for_nilpotent():
    sh = shearing(FuchsLocalSystem.from_coefficients([np.array([[0.0, 1.0], [0.0, 0.0]]), np.eye(2)]))
    assert sh.iterations == 0
    assert np.allclose(sh.C, np.eye(2)) and sh.S_exponents == [0, 0]


def test_shearing_single_gap():
    rng = np.random.default_rng(0)
    F = FuchsLocalSystem.from_coefficients([np.diag([0.0, 1.0])] + [0.3 * rng.normal(size=(2, 2)) for _ in range(8)])
    sh = shearing(F)
    assert sh.iterations == 1
    assert np.allclose(np.sort(np.linalg.eigvals(sh.system.series.coeff(0)).real), [1, 1])


def test_shearing_two_iterations():
    rng = np.random.default_rng(0)
    F = FuchsLocalSystem.from_coefficients([np.diag([0.0, 1.0, 3.0])] + [0.3 * rng.normal(size=(3, 3)) for _ in range(12)])
    sh = shearing(F)
    assert sh.iterations == 2
    assert sorted(sh.S_exponents) == [0, 2, 3]
    for lam in sh.eigenvalue_log:
        assert len(lam) == 3
    assert max_integer_gap(sh.system.series.coeff(0)) == 0


def test_local_solution_power_law():
    # delta Y = diag(t-1, t-1) Y at t = 0.5 is solved by (x - t)^(t-1)
    B = LinearSystem(2, [("t", [[["t-1", 0], [0, "t-1"]]])])
    sol = local_solution(FuchsLocalSystem.from_system(B, 0, N=6, t=(0.5,)))
    assert np.allclose(sol.Atilde, -0.5 * np.eye(2))
    x = 0.5 + 0.3j
    assert np.allclose(sol.evaluate(x), (x - 0.5) ** -0.5 * np.eye(2))


def test_zero_system_rejected():
    with pytest.raises(InvalidLocalSystem):
        FuchsLocalSystem.from_coefficients([np.zeros((2, 2)), np.zeros((2, 2))])


def test_local_solution_substitution():
    sol = local_solution(FuchsLocalSystem.from_coefficients([np.diag([0.0, 0.5]), np.eye(2)], truncation=20))
    x = 0.1
    A = (np.diag([0.0, 0.5]) + x * np.eye(2)) / x
    Y = sol.evaluate(x)
    assert np.linalg.norm(sol.derivative(x) - A @ Y) <= 1e-9 * np.linalg.norm(A @ Y)


def test_growth_constant():
    g = moderate_growth_check(lambda x, t: np.ones((2, 2)), 0, (0.0,))
    assert g.passed and g.N == 0


def test_growth_power_law():
    g = moderate_growth_check(lambda x, t: (x - t[0]) ** (t[0] - 1) * np.eye(2), lambda t: t[0], (0.0,))
    assert g.passed and g.N == 2


def test_growth_essential_singularity():
    g = moderate_growth_check(lambda x, t: np.exp(1 / x) * np.ones((1, 1)), 0, (0.0,), sector=(math.pi, 1.5 * math.pi))
    assert not g.passed


def test_growth_parameter_derivative():
    # d/dt (x - t)^(t-1) = (x-t)^(t-1) (log(x-t) - (t-1)/(x-t)) grows like |x-t|^-2
    g = moderate_growth_check(lambda x, t: (x - t[0]) ** (t[0] - 1), lambda t: t[0], (0.0,), m_orders=(1,))
    assert g.passed and g.N == 3


# -- properties ---------------------------------------------------------------
seeds = st.integers(0, 100_000)


@settings(max_examples=25, deadline=None)
@given(seeds, st.integers(1, 4), st.integers(2, 10))
def test_recurrence_identity(seed, n, N):
    rng = np.random.default_rng(seed)
    A = [nonresonant_A0(rng, n)] + [rng.normal(size=(n, n)) for _ in range(N)]
    P, _ = reduce_to_constant(FuchsLocalSystem.from_coefficients(A), N=N)
    assert recurrence_defect([np.eye(n)] + P, A, N) <= 1e-10


@settings(max_examples=25, deadline=None)
@given(seeds, st.integers(2, 4))
def test_shearing_gaps_shrink(seed, n):
    rng = np.random.default_rng(seed)
    lam = rng.uniform(-0.3, 0.3) + rng.integers(0, 4, n)
    V = rng.normal(size=(n, n))
    A0 = V @ np.diag(lam) @ np.linalg.inv(V)
    F = FuchsLocalSystem.from_coefficients([A0] + [0.2 * rng.normal(size=(n, n)) for _ in range(10)])
    sh = shearing(F)
    gaps = sh.gap_log
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    lam_end = np.linalg.eigvals(sh.system.series.coeff(0))
    d = lam_end[:, None] - lam_end[None, :]
    near_int = np.abs(d - np.round(d.real)) <= EPS_INT
    assert not np.any(near_int & (np.round(d.real) >= 1))


@settings(max_examples=10, deadline=None)
@given(seeds)
def test_local_solution_solves_equation(seed):
    rng = np.random.default_rng(seed)
    A = [nonresonant_A0(rng, 2)] + [0.5 * rng.normal(size=(2, 2)) for _ in range(20)]
    sol = local_solution(FuchsLocalSystem.from_coefficients(A), N=20)
    # coefficients of size ~1 give radius ~1; stay inside half of it
    for th in np.linspace(0, 2 * np.pi, 3, endpoint=False):
        for rho in np.linspace(0.05, 0.25, 5):
            x = rho * np.exp(1j * th)
            Ax = sum(c * x**k for k, c in enumerate(A)) / x
            Y = sol.evaluate(x)
            R = sol.derivative(x) - Ax @ Y
            assert np.linalg.norm(R) <= 1e-8 * np.linalg.norm(Ax @ Y)


@settings(max_examples=5, deadline=None)
@given(seeds)
def test_local_monodromy_matches_exponent(seed):
    rng = np.random.default_rng(seed)
    B0 = nonresonant_A0(rng, 2) * 0.5
    B1 = 0.3 * rng.normal(size=(2, 2))
    sys_ = LinearSystem.fuchsian([0, 1], [B0, B1])
    sol = local_solution(FuchsLocalSystem.from_system(sys_, 0, N=20, t=(0.0,)))
    M = local_loop_monodromy(sys_, 0, (0.0,), sol, 0.25)
    E = local_monodromy_from_exponent(sol.Atilde)
    assert np.linalg.norm(M - E) <= 1e-6 * np.linalg.norm(E)


def test_exponent_monodromy_examples():
    assert np.allclose(local_monodromy_from_exponent(np.zeros((2, 2))), np.eye(2))
    assert np.allclose(local_monodromy_from_exponent(-0.5 * np.eye(2)), -np.eye(2))
    Nn = np.array([[0.0, 1.0], [0.0, 0.0]])
    assert np.allclose(local_monodromy_from_exponent(Nn), np.eye(2) + 2j * np.pi * Nn)
    assert np.allclose(scipy.linalg.expm(2j * np.pi * Nn), np.eye(2) + 2j * np.pi * Nn)
