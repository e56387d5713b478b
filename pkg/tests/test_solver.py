"""Conic layer against hand-computable programs and certificates."""

from __future__ import annotations

import math

import numpy as np
import pytest

from projrob.errors import SolverError
from projrob.solver import (
    ConicProblem,
    SolveOptions,
    Status,
    Var,
    bisect_threshold,
    complementary_slackness,
    const_expr,
    eq0,
    feasibility_margin,
    ge0,
    hermitian_basis,
    inner,
    lift,
    psd,
    solve,
)

from conftest import rand_state


def test_hermitian_basis_orthonormal():
    B = hermitian_basis(3)
    assert len(B) == 9
    G = np.array([[np.vdot(a, b).real for b in B] for a in B])
    np.testing.assert_allclose(G, np.eye(9), atol=1e-12)


def test_largest_eigenvalue_program(rng):
    # min t with t*I - rho psd: the answer is the top eigenvalue
    rho = rand_state(rng, 3)
    t = Var("t", 1)
    prob = ConicProblem(t.expr(), "min",
                        [psd(lift(t, np.eye(3)) - const_expr(rho))])
    out = solve(prob)
    assert out.status is Status.Optimal
    assert out.value == pytest.approx(np.linalg.eigvalsh(rho)[-1], abs=1e-8)


def test_positive_part_program(rng):
    # max <D, X> over 0 <= X <= I picks out the positive eigenvalues of D
    D = rand_state(rng, 4) - np.eye(4) / 4
    X = Var("X", 4)
    prob = ConicProblem(inner(D, X.expr()), "max", [
        psd(X.expr()),
        psd(const_expr(np.eye(4)) - X.expr()),
    ])
    out = solve(prob)
    assert out.status is Status.Optimal
    expect = float(np.clip(np.linalg.eigvalsh(D), 0, None).sum())
    assert out.value == pytest.approx(expect, abs=1e-7)


def test_equality_row_and_duals(rng):
    # max <D, X> with tr X = 1, X psd: lambda_max, with the optimizer the
    # top eigenprojector and the equality multiplier the optimum itself
    D = rand_state(rng, 3)
    X = Var("X", 3)
    prob = ConicProblem(inner(D, X.expr()), "max", [
        psd(X.expr()),
        eq0(inner(np.eye(3), X.expr()) - const_expr(np.ones((1, 1)))),
    ])
    out = solve(prob)
    assert out.status is Status.Optimal
    top = np.linalg.eigvalsh(D)[-1]
    assert out.value == pytest.approx(top, abs=1e-8)
    Xm = np.asarray(out.primal["X"])
    assert np.trace(Xm).real == pytest.approx(1.0, abs=1e-7)
    assert abs(out.gap) < 1e-6
    assert complementary_slackness(prob, out) < 1e-6


def test_scalar_variable_box():
    x = Var("x", 1)
    prob = ConicProblem(x.expr(), "max",
                        [ge0(const_expr(3.0 * np.ones((1, 1))) - x.expr())])
    out = solve(prob)
    assert out.value == pytest.approx(3.0, abs=1e-8)


def test_infeasible_with_verified_witness():
    # X >= I and -X >= 0 cannot both hold
    X = Var("X", 2)
    prob = ConicProblem(inner(np.eye(2), X.expr()), "min", [
        psd(X.expr() - const_expr(np.eye(2))),
        psd(-X.expr()),
    ])
    out = solve(prob)
    assert out.status is Status.PrimalInfeasible
    assert out.certificate is not None
    assert out.certificate.get("verified") is True


def test_infeasible_through_equality_rows():
    # tr X = 1 and <E00, X> = 2 contradict X psd; the witness reconstruction
    # must handle the equality multipliers
    E00 = np.diag([1.0, 0.0])
    X = Var("X", 2)
    prob = ConicProblem(inner(np.eye(2), X.expr()), "min", [
        psd(X.expr()),
        eq0(inner(np.eye(2), X.expr()) - const_expr(np.ones((1, 1)))),
        eq0(inner(E00, X.expr()) - const_expr(2.0 * np.ones((1, 1)))),
    ])
    out = solve(prob)
    assert out.status is Status.PrimalInfeasible
    assert out.certificate is not None and out.certificate.get("verified") is True


def test_unbounded_detected():
    X = Var("X", 2)
    prob = ConicProblem(inner(np.eye(2), X.expr()), "max", [psd(X.expr())])
    out = solve(prob)
    assert out.status is Status.DualInfeasible


def test_partial_transpose_in_expression():
    # min tr X with X psd and X^Gamma >= phi2; X = (2/3) P_sym achieves 2
    # (P_sym^Gamma = I/2 + phi2), and the solver certifies optimality
    phi = np.zeros((4, 4))
    for i in range(2):
        for j in range(2):
            phi[2 * i + i, 2 * j + j] = 0.5
    X = Var("X", 4, (2, 2))
    prob = ConicProblem(inner(np.eye(4), X.expr()), "min", [
        psd(X.expr()),
        psd(X.expr().pt((2, 2), 1) - const_expr(phi)),
    ])
    out = solve(prob)
    assert out.status is Status.Optimal
    assert out.value == pytest.approx(2.0, abs=1e-6)


def test_bad_problem_rejected():
    X = Var("X", 2)
    with pytest.raises(SolverError):
        ConicProblem(X.expr(), "max", [])  # matrix objective
    with pytest.raises(SolverError):
        ConicProblem(inner(np.eye(2), X.expr()), "best", [])


def test_options_pass_through(rng):
    rho = rand_state(rng, 3)
    t = Var("t", 1)
    prob = ConicProblem(t.expr(), "min",
                        [psd(lift(t, np.eye(3)) - const_expr(rho))])
    out = solve(prob, SolveOptions(tol_gap=1e-10, tol_feas=1e-10))
    assert out.status is Status.Optimal
    assert out.iterations > 0


# ---- independent feasibility probes ---------------------------------------


def test_feasibility_margin_box():
    X = Var("X", 3)
    cons = [psd(X.expr()), psd(const_expr(np.eye(3)) - X.expr())]
    m, assignment = feasibility_margin(cons)
    assert m == pytest.approx(0.5, abs=1e-7)
    np.testing.assert_allclose(np.asarray(assignment["X"]),
                               np.eye(3) / 2, atol=1e-5)


def test_feasibility_margin_infeasible():
    X = Var("X", 2)
    cons = [psd(X.expr() - const_expr(np.eye(2))), psd(-X.expr())]
    m, _ = feasibility_margin(cons)
    assert m < -1e-6 or math.isinf(m)


def test_bisect_threshold_scalar():
    got = bisect_threshold(lambda t: t >= math.pi, 0.0, 10.0, rel_tol=1e-12)
    assert got == pytest.approx(math.pi, abs=1e-9)
    with pytest.raises(SolverError):
        bisect_threshold(lambda t: False, 0.0, 1.0)
