"""Resource measures against closed forms, duality, and the bound chain.

Closed-form anchors used as oracles (derived by hand, independent of the
conic path):

* isotropic(gamma) under PPT, gamma in (0, 2/3):
  projective measure (4-3g)/(3g), robustness 2-3g/2, weight 3g/2;
* q|+><+| + (1-q) I/2 under Incoherent:
  projective measure (1+q)/(1-q), robustness 1+q, weight 1-q,
  standard robustness and free-projective measure infinite.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from projrob.free_sets import FreeSetSpec
from projrob.monotones import (
    free_projective_robustness,
    generalized_robustness,
    projective_robustness,
    pure_overlap,
    rmax,
    rmax_free,
    rmax_sdp,
    sandwich_bounds,
    standard_robustness,
    support_overlap,
    weight,
)
from projrob.operators import isotropic_state, maximally_coherent, maximally_entangled
from projrob.solver import (
    Status,
    bisect_threshold,
    const_expr,
    feasibility_margin,
    psd,
)

from conftest import THEORIES, rand_pure, rand_state

PPT = THEORIES["ppt"]
INC2 = FreeSetSpec.incoherent(2)


def plus_mix(q: float) -> np.ndarray:
    return q * maximally_coherent(2).mat + (1 - q) * np.eye(2) / 2


# ---- max-relative divergence ----------------------------------------------


def test_rmax_reflexive(rng):
    rho = rand_state(rng, 3)
    assert rmax(rho, rho) == pytest.approx(1.0, abs=1e-9)


def test_rmax_bell_vs_identity():
    assert rmax(maximally_entangled(2).mat, np.eye(4) / 4) == pytest.approx(4.0)


def test_rmax_support_mismatch(rng):
    rho = rand_state(rng, 3)
    sigma = rand_state(rng, 3, rank=2)
    assert math.isinf(rmax(rho, sigma))


def test_rmax_agrees_with_conic_path(rng):
    for _ in range(5):
        rho, sigma = rand_state(rng, 3), rand_state(rng, 3)
        assert rmax(rho, sigma) == pytest.approx(rmax_sdp(rho, sigma), rel=1e-6)


def test_rmax_eigen_identity(rng):
    # sup over pure omega of rmax(omega, rho) is 1/lambda_min, attained at
    # the bottom eigenvector
    rho = rand_state(rng, 3)
    vals, vecs = np.linalg.eigh(rho)
    best = max(rmax(rand_pure(rng, 3), rho) for _ in range(200))
    cap = 1.0 / vals[0]
    assert best <= cap * (1 + 1e-9)
    bottom = np.outer(vecs[:, 0], vecs[:, 0].conj())
    assert rmax(bottom, rho) == pytest.approx(cap, rel=1e-9)


def test_rmax_free_examples(rng):
    sigma = PPT.random_free_state(rng)
    assert rmax_free(sigma, sigma, PPT) == pytest.approx(1.0, abs=1e-6)
    phi = maximally_entangled(2).mat
    star = (np.eye(4) + 2 * phi) / 6
    assert rmax_free(phi, star, PPT) == pytest.approx(2.0, rel=1e-6)
    # off-diagonals can never cancel inside the diagonal cone
    assert math.isinf(rmax_free(maximally_coherent(2).mat, np.eye(2) / 2, INC2))


# ---- the four robustness-type measures ------------------------------------


def test_free_states_score_one(theory, rng):
    sigma = theory.random_free_state(rng)
    for fn in (generalized_robustness, projective_robustness,
               free_projective_robustness):
        mv = fn(sigma, theory)
        assert mv.status is Status.Optimal
        assert 1.0 - 1e-8 <= mv.value <= 1.0 + 1e-6
    assert weight(sigma, theory).value == pytest.approx(1.0, abs=1e-6)
    assert standard_robustness(sigma, theory).value == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("gamma, omega", [(0.2, 17 / 3), (0.4, 7 / 3), (0.6, 11 / 9)])
def test_isotropic_closed_forms(gamma, omega):
    rho = isotropic_state(gamma).mat
    assert projective_robustness(rho, PPT).value == pytest.approx(omega, rel=1e-6)
    assert generalized_robustness(rho, PPT).value == pytest.approx(
        2 - 1.5 * gamma, rel=1e-6)
    assert weight(rho, PPT).value == pytest.approx(1.5 * gamma, rel=1e-6)


@pytest.mark.parametrize("q, omega", [(0.5, 3.0), (0.7, 17 / 3), (0.8, 9.0)])
def test_plus_mixture_closed_forms(q, omega):
    rho = plus_mix(q)
    assert projective_robustness(rho, INC2).value == pytest.approx(omega, rel=1e-6)
    assert generalized_robustness(rho, INC2).value == pytest.approx(1 + q, rel=1e-6)
    assert weight(rho, INC2).value == pytest.approx(1 - q, rel=1e-6)
    assert math.isinf(standard_robustness(rho, INC2).value)
    assert math.isinf(free_projective_robustness(rho, INC2).value)


def test_golden_robustness_values():
    assert generalized_robustness(maximally_entangled(2).mat, PPT).value == \
        pytest.approx(2.0, rel=1e-7)
    assert standard_robustness(maximally_entangled(2).mat, PPT).value == \
        pytest.approx(2.0, rel=1e-7)
    F3 = FreeSetSpec.incoherent(3)
    assert generalized_robustness(maximally_coherent(3).mat, F3).value == \
        pytest.approx(3.0, rel=1e-7)


def test_weight_vanishes_on_pure_entangled():
    assert weight(maximally_entangled(2).mat, PPT).value == pytest.approx(0.0, abs=1e-7)


def test_scaling_behaviour(rng):
    rho = isotropic_state(0.35).mat
    assert generalized_robustness(2 * rho, PPT).value == pytest.approx(
        2 * generalized_robustness(rho, PPT).value, rel=1e-7)
    # the projective measure ignores scale entirely
    base = projective_robustness(rho, PPT).value
    for lam in (0.5, 3.0):
        assert projective_robustness(lam * rho, PPT).value == pytest.approx(
            base, rel=1e-8)


def test_projective_infinite_with_certificate():
    mv = projective_robustness(maximally_entangled(2).mat, PPT)
    assert mv.status is Status.PrimalInfeasible
    assert math.isinf(mv.value)
    assert mv.certificate is not None
    assert mv.certificate.get("verified") is True


def test_projective_duality_and_resubstitution(rng):
    for _ in range(10):
        rho = rand_state(rng, 4)
        mv = projective_robustness(rho, PPT)
        assert mv.status is Status.Optimal
        # dual functional value matches the primal optimum
        assert float(np.vdot(mv.dual_A, rho).real) == pytest.approx(
            mv.value, abs=1e-7 * max(1.0, mv.value))
        assert float(np.vdot(mv.dual_B, rho).real) == pytest.approx(1.0, abs=1e-7)
        # optimizer re-substitution: rho <= sigma_tilde <= value*rho
        st = np.asarray(mv.optimizer_sigma)
        assert np.linalg.eigvalsh(st - rho)[0] >= -1e-7
        assert np.linalg.eigvalsh(mv.value * rho - st)[0] >= -1e-7
        assert PPT.cone_violation(st) <= 1e-7


def test_free_projective_dominates(rng):
    for _ in range(10):
        rho = rand_state(rng, 4)
        om = projective_robustness(rho, PPT).value
        omf = free_projective_robustness(rho, PPT).value
        assert omf >= om * (1 - 1e-7)


def test_free_projective_infinite_off_diagonal(rng):
    rho = rand_state(rng, 3)
    if abs(rho[0, 1]) < 1e-3:  # make sure there is genuine coherence
        rho = 0.7 * maximally_coherent(3).mat + 0.3 * rho
        rho /= np.trace(rho).real
    mv = free_projective_robustness(rho, FreeSetSpec.incoherent(3))
    assert math.isinf(mv.value)


# ---- overlaps --------------------------------------------------------------


def test_pure_overlap_values():
    assert pure_overlap(maximally_entangled(2).mat, PPT) == pytest.approx(
        0.5, abs=1e-7)
    assert pure_overlap(maximally_coherent(3).mat, FreeSetSpec.incoherent(3)) == \
        pytest.approx(1 / 3, abs=1e-7)


def test_support_overlap_values(rng):
    assert support_overlap(rand_state(rng, 4), PPT) == pytest.approx(1.0, abs=1e-7)
    assert support_overlap(maximally_entangled(2).mat, PPT) == pytest.approx(
        0.5, abs=1e-7)


# ---- bound chain -----------------------------------------------------------


def test_sandwich_on_free_state(rng):
    rep = sandwich_bounds(PPT.random_free_state(rng), PPT)
    assert rep["ok"]
    assert rep["omega"] == pytest.approx(1.0, abs=1e-6)


def test_sandwich_on_isotropic():
    rep = sandwich_bounds(isotropic_state(0.3).mat, PPT)
    assert rep["ok"]
    assert rep["omega"] == pytest.approx((4 - 0.9) / 0.9, rel=1e-6)
    assert rep["lower"] <= rep["omega"] * (1 + 1e-6)
    assert math.isfinite(rep["upper_eig"])


def test_sandwich_on_pure_entangled():
    rep = sandwich_bounds(maximally_entangled(2).mat, PPT)
    assert rep["ok"]
    assert math.isinf(rep["omega"]) and math.isinf(rep["lower"])


# ---- independent bisection cross-check ------------------------------------


@pytest.mark.parametrize("gamma", [0.3, 0.5])
def test_omega_by_bisection(gamma):
    # feasibility probe: does some free-cone sigma sit between rho and w*rho?
    rho = isotropic_state(gamma).mat
    direct = projective_robustness(rho, PPT).value

    def feasible(w: float) -> bool:
        from projrob.solver import Var

        s = Var("sbis", 4, (2, 2))
        cons = [psd(s.expr() - const_expr(rho)),
                psd(const_expr(w * rho) - s.expr())]
        cons += PPT.primal_cone_constraints(s.expr())
        margin, _ = feasibility_margin(cons)
        return margin > 1e-9

    got = bisect_threshold(feasible, 1.0, 2.0 * direct, rel_tol=1e-7)
    assert got == pytest.approx(direct, rel=1e-3)
