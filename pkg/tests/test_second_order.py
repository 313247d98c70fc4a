import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import NAMES, fixture
from helpers import random_env, random_expr
from varcond.jetspace import AddressingError, layout
from varcond.oracle import random_bumps
from varcond.second_order import (
    Definiteness as D,
    NumericError,
    ShapeError,
    Verdict,
    assemble_A,
    classify,
    decompose_J1_J2_I2,
    definiteness,
    evaluate_A,
    jacobi_eigenvalues,
    legendre_check,
    legendre_matrix,
    second_variation,
    sufficient_thmmm_falsifier,
    weakest,
)
from varcond.symexpr import Const, evaluate, numerically_equal, parse, simplify
from varcond.symexpr.sampling import PointAssignment
from varcond.variational import Problem

L11 = layout(1, 1, 1)
EX3_A = np.array(
    [
        [2, 0, 0, 0.5, 0, 0],
        [0, 2, -0.5, 0, 0, 0],
        [0, -0.5, 2, 0, 0, 0],
        [0.5, 0, 0, 2, 0, 0],
        [0, 0, 0, 0, 2, -0.5],
        [0, 0, 0, 0, -0.5, 2],
    ]
)
EX4_A = np.array(
    [
        [2, 0, 0, 0, 0, 0],
        [0, 2, -0.5, 0, 0, 0],
        [0, -0.5, 2, 0, 0, 0],
        [0, 0, 0, 2, -0.5, -0.5],
        [0, 0, 0, -0.5, 2, -0.5],
        [0, 0, 0, -0.5, -0.5, 2],
    ]
)


def brute_force_status(M, samples=10_000, seed=0, tol=1e-9):
    """Sign pattern of v^T M v over random unit vectors."""
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(samples, M.shape[0]))
    v /= np.linalg.norm(v, axis=1)[:, None]
    quad = np.einsum("ni,ij,nj->n", v, M, v)
    lo, hi = quad.min(), quad.max()
    if lo > tol and hi > tol:
        return "positive"
    if hi < -tol:
        return "negative"
    if lo < -tol and hi > tol:
        return "mixed"
    return "semidefinite"


def constant_matrix(A):
    return np.array([[float(evaluate(e, {})) for e in row] for row in A.entries])


# --- assembly ---------------------------------------------------------------


def test_example1_matrix():
    A = assemble_A(parse("sqrt(1 + u1_x1^2)", L11), L11)
    assert A.entry(1, 1) == Const(0) and A.entry(1, 2) == Const(0)
    assert numerically_equal(A.entry(2, 2), parse("1/(1 + u1_x1^2)^(3/2)", L11), count=20)
    M = evaluate_A(A, PointAssignment(L11, (0.3,), (1.0, 0.0)))
    assert np.allclose(M, np.diag([0.0, 1.0]))


def test_example2_matrix_at_point():
    A = assemble_A(parse("u1*sqrt(1 + u1_x1^2)", L11), L11)
    M = evaluate_A(A, PointAssignment(L11, (0.0,), (1.0, 1.0)))
    ref = np.array([[0, 1 / math.sqrt(2)], [1 / math.sqrt(2), 2**-1.5]])
    assert np.allclose(M, ref, atol=1e-12)
    assert definiteness(M) is D.INDEFINITE
    assert np.linalg.det(M) == pytest.approx(-0.5)


def test_example3_recomputed_matrix():
    pf = fixture("example3")
    A = assemble_A(pf.problem.lagrangian, pf.problem.layout)
    M = constant_matrix(A)
    assert np.array_equal(M, EX3_A)
    assert np.array_equal(M, M.T)
    assert A.block_entry(1, 2, 0, 0, 1, 1) == Const(Fraction(1, 2))
    assert definiteness(M) is D.POSITIVE_DEFINITE
    assert brute_force_status(M) == "positive"


def test_example4_matrix_and_blocks():
    pf = fixture("example4")
    A = assemble_A(pf.problem.lagrangian, pf.problem.layout)
    M = constant_matrix(A)
    assert np.array_equal(M, EX4_A)
    block = np.array([[float(evaluate(e, {})) for e in r] for r in A.block(1, 1, 2, 2)])
    assert np.allclose(jacobi_eigenvalues(block), [1.0, 2.5, 2.5], atol=1e-9)
    # characteristic polynomial: (2 - t)^3 - 3/4 (2 - t) - 1/4
    for t in (1.0, 2.5):
        assert (2 - t) ** 3 - 0.75 * (2 - t) - 0.25 == pytest.approx(0.0, abs=1e-12)


def test_linear_lagrangian_gives_zero_matrix():
    assert assemble_A(parse("x1*u1", L11), L11).is_zero()


def test_addressing():
    A = assemble_A(parse("u1^2", L11), L11)
    with pytest.raises(AddressingError):
        A.entry(0, 1)
    with pytest.raises(AddressingError):
        legendre_matrix(A, 2)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_assembled_matrix_symmetric(seed):
    rng = np.random.default_rng(seed)
    lay = layout(2, 1, 1)
    A = assemble_A(random_expr(rng, lay, 3), lay)
    syms = frozenset().union(*(e.free_symbols for row in A.entries for e in row))
    for _ in range(10):
        env = random_env(rng, syms)
        M = np.array([[float(evaluate(e, env)) for e in row] for row in A.entries])
        assert np.allclose(M, M.T, rtol=1e-9, atol=1e-9)


# --- eigenvalues and definiteness ------------------------------------------


def test_definiteness_examples():
    M = np.array([[2, -0.5], [-0.5, 2]])
    assert np.allclose(jacobi_eigenvalues(M), [1.5, 2.5])
    assert definiteness(M) is D.POSITIVE_DEFINITE
    assert definiteness(np.zeros((3, 3))) is D.ZERO
    assert definiteness(np.diag([0.0, 1.0])) is D.POSITIVE_SEMIDEFINITE
    assert definiteness(-np.diag([0.0, 1.0])) is D.NEGATIVE_SEMIDEFINITE
    assert definiteness(-M) is D.NEGATIVE_DEFINITE
    assert definiteness(np.diag([1.0, -1.0])) is D.INDEFINITE


def test_definiteness_errors():
    with pytest.raises(ShapeError):
        definiteness(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(ShapeError):
        definiteness(np.ones((2, 3)))
    with pytest.raises(NumericError):
        jacobi_eigenvalues(np.diag([1.0, 2.0, 3.0]) + np.eye(3)[::-1], max_sweeps=0)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 7), st.integers(0, 10**6))
def test_jacobi_against_numpy(size, seed):
    rng = np.random.default_rng(seed)
    B = rng.normal(size=(size, size))
    M = B + B.T
    assert np.allclose(jacobi_eigenvalues(M), np.linalg.eigvalsh(M), atol=1e-10)


def test_definiteness_scale_relative():
    # tolerance is relative to max(1, ||M||_F)
    M = np.diag([1e6, 1e-5])
    assert definiteness(M) is D.POSITIVE_SEMIDEFINITE
    assert definiteness(np.diag([1.0, 1e-5])) is D.POSITIVE_DEFINITE


def test_weakest():
    assert weakest([D.POSITIVE_DEFINITE, D.ZERO]) is D.POSITIVE_SEMIDEFINITE
    assert weakest([D.POSITIVE_DEFINITE] * 3) is D.POSITIVE_DEFINITE
    assert weakest([D.NEGATIVE_DEFINITE, D.POSITIVE_DEFINITE]) is D.INDEFINITE


# --- Legendre -----------------------------------------------------------------


def test_legendre_matrices_example4_and_3():
    A4 = assemble_A(fixture("example4").problem.lagrangian, fixture("example4").problem.layout)
    vals = [float(evaluate(legendre_matrix(A4, l)[0][0], {})) for l in range(3)]
    assert vals == [2.0, 3.0, 3.0]
    p3 = fixture("example3").problem
    A3 = assemble_A(p3.lagrangian, p3.layout)
    l0 = [[float(evaluate(e, {})) for e in row] for row in legendre_matrix(A3, 0)]
    assert l0 == [[2.0, 0.5], [0.5, 2.0]]


def test_legendre_check_example1():
    pf = fixture("example1")
    A = assemble_A(pf.problem.lagrangian, pf.problem.layout)
    rep = legendre_check(A, pf.problem, pf.candidate)
    assert rep.condensed == {0: D.ZERO, 1: D.POSITIVE_DEFINITE}
    assert rep.holds_for_min()


def test_legendre_check_zero_lagrangian():
    p = Problem(L11, Const(0), ((0.0, 1.0),), (5,))
    pf = fixture("example1")
    A = assemble_A(Const(0), L11)
    rep = legendre_check(A, p, pf.candidate)
    assert set(rep.condensed.values()) == {D.ZERO}
    assert set(rep.diagonal_blocks.values()) == {D.ZERO}


def test_legendre_matrix_symmetric_random():
    rng = np.random.default_rng(3)
    lay = layout(2, 2, 1)
    A = assemble_A(random_expr(rng, lay, 3), lay)
    for l in range(2):
        Lm = legendre_matrix(A, l)
        assert numerically_equal(Lm[0][1], Lm[1][0])


# --- decomposition and falsifier ---------------------------------------------


@pytest.mark.parametrize("name", NAMES)
def test_decomposition_identity(name):
    pf = fixture(name)
    for b in random_bumps(pf.problem, 3, seed=11):
        J1, J2, I2 = decompose_J1_J2_I2(pf.problem, pf.candidate, b)
        total = second_variation(pf.problem, pf.candidate, b)
        assert abs(J1 + 2 * (J2 + I2) - total) <= 1e-6 * (1 + abs(total))


def test_decomposition_example4_has_no_cross_terms():
    pf = fixture("example4")
    b = random_bumps(pf.problem, 1, seed=2)[0]
    J1, J2, I2 = decompose_J1_J2_I2(pf.problem, pf.candidate, b)
    assert J2 == 0.0 and I2 == 0.0 and J1 > 0


def test_decomposition_zero_direction():
    pf = fixture("example3")
    assert decompose_J1_J2_I2(pf.problem, pf.candidate, [Const(0), Const(0)]) == (0.0, 0.0, 0.0)


def test_falsifier():
    pf4, pf2 = fixture("example4"), fixture("example2")
    assert sufficient_thmmm_falsifier(pf4.problem, pf4.candidate, 5).outcome == "no_counterexample"
    res = sufficient_thmmm_falsifier(pf2.problem, pf2.candidate, 10)
    assert res.counterexample and res.value < 0
    with pytest.raises(ValueError):
        sufficient_thmmm_falsifier(pf4.problem, pf4.candidate, 0)


# --- classification ------------------------------------------------------------

EXPECTED = {
    "example1": Verdict.WEAK_MIN,
    "example2": Verdict.SADDLE,
    "example3": Verdict.STRICT_WEAK_MIN,
    "example4": Verdict.STRICT_WEAK_MIN,
}


@pytest.mark.parametrize("name", NAMES)
def test_classify_fixtures(name):
    pf = fixture(name)
    rep = classify(pf.problem, pf.candidate)
    assert rep.verdict is EXPECTED[name]
    assert any("sampled grid nodes" in n for n in rep.notes)


@pytest.mark.parametrize("name", NAMES)
def test_classify_duality(name):
    pf = fixture(name)
    p = pf.problem
    neg = Problem(p.layout, simplify(-p.lagrangian), p.domain, p.grid)
    rep = classify(neg, pf.candidate)
    assert rep.verdict is EXPECTED[name].mirrored()
    if rep.verdict in (Verdict.WEAK_MAX, Verdict.STRICT_WEAK_MAX):
        assert any("-A" in n for n in rep.notes)


def test_classify_residual_gate():
    pf = fixture("example2")
    from varcond.symexpr import parse_x
    from varcond.variational import Candidate

    rep = classify(pf.problem, Candidate((parse_x("1 + x1^2", 1),)))
    assert rep.verdict is Verdict.INCONCLUSIVE
    assert "fails Euler-Lagrange residual" in rep.notes[0]


def test_classify_zero_matrix_inconclusive():
    p = Problem(L11, parse("x1*u1_x1 + u1", L11), ((0.0, 1.0),), (5,))
    rep = classify(p, fixture("example1").candidate)
    assert rep.verdict is Verdict.INCONCLUSIVE
    assert rep.tally["ZERO"] == 5


def test_classify_grid_scale():
    pf = fixture("example1")
    rep = classify(pf.problem, pf.candidate, scale=0.5)
    assert rep.grid == (21,)
