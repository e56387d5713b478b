"""Acceptance gate: one test per headline claim, at the pinned tolerances.

Each test here is self-contained and prints as a single pass/fail line
under ``pytest -v``.  Tolerances and instance counts are deliberate; do
not loosen them to make a failure go away.
"""

from __future__ import annotations

import math
import time

import numpy as np
import pytest

from projrob.discrimination import verify_advantage_theorem
from projrob.distill import (
    distillation_report,
    eigenvalue_bound,
    error_lower_bound,
    probability_sandwich,
    solve_Theta_p,
)
from projrob.figures import figure_sweep
from projrob.free_sets import FreeSetSpec
from projrob.monotones import (
    generalized_robustness,
    projective_robustness,
    rmax,
    rmax_sdp,
    sandwich_bounds,
)
from projrob.operators import (
    isotropic_state,
    ket,
    maximally_coherent,
    maximally_entangled,
    permute_subsystems,
    state_factory,
)

from conftest import THEORIES, rand_pure, rand_state

PPT22 = THEORIES["ppt"]
PPT33 = FreeSetSpec.ppt(3, 3)
INC2 = FreeSetSpec.incoherent(2)
PHI2 = maximally_entangled(2).mat
PHI3 = maximally_entangled(3).mat


def plus_mix(q: float) -> np.ndarray:
    return q * maximally_coherent(2).mat + (1 - q) * np.eye(2) / 2


def schmidt_pure(a: float) -> np.ndarray:
    v = math.sqrt(a) * np.kron(ket(0, 2), ket(0, 2)) + \
        math.sqrt(1 - a) * np.kron(ket(1, 2), ket(1, 2))
    return np.outer(v, v.conj())


# a clearly resourceful pure anchor for every bundled theory
_RESOURCE_ANCHOR = {
    "ppt": PHI2,
    "incoherent": maximally_coherent(3).mat,
    "real": None,  # built below: complex-phase pure state
    "single": None,
    "polytope": None,
}


def _anchor(name: str, F: FreeSetSpec) -> np.ndarray:
    fixed = _RESOURCE_ANCHOR.get(name)
    if fixed is not None:
        return fixed
    if name == "real":
        v = (ket(0, F.dim) + 1j * ket(1, F.dim)) / math.sqrt(2)
        return np.outer(v, v.conj())
    return rand_pure(np.random.default_rng(99), F.dim)


def _product_spec(name: str, F: FreeSetSpec) -> FreeSetSpec:
    if name == "ppt":
        return FreeSetSpec.ppt(4, 4)
    if name == "incoherent":
        return FreeSetSpec.incoherent(F.dim ** 2)
    if name == "real":
        return FreeSetSpec.real(F.dim ** 2)
    if name == "single":
        return FreeSetSpec.single_state(np.kron(F.sigma0, F.sigma0))
    return FreeSetSpec.polytope([np.kron(a, b) for a in F.vertices
                                 for b in F.vertices])


def _product_state(name: str, r1: np.ndarray, r2: np.ndarray) -> np.ndarray:
    out = np.kron(r1, r2)
    if name == "ppt":
        # regroup A1 B1 A2 B2 -> (A1 A2 | B1 B2)
        out = permute_subsystems(out, [2, 2, 2, 2], [0, 2, 1, 3])
    return out


def omega_of(rho, F) -> float:
    mv = projective_robustness(rho, F)
    assert not mv.trouble, f"projective solve troubled: {mv.status}"
    return mv.value


# ---------------------------------------------------------------------------


def test_criterion_01_isotropic_projective_closed_form():
    for g in (0.1, 0.2, 0.3, 0.4, 0.5, 0.6):
        tic = time.perf_counter()
        value = omega_of(isotropic_state(g).mat, PPT22)
        wall = time.perf_counter() - tic
        assert value == pytest.approx((4 - 3 * g) / (3 * g), rel=1e-5)
        assert wall < 1.0, f"4-dim solve took {wall:.2f}s at gamma={g}"


def test_criterion_02_one_copy_error_flat_in_probability():
    res = figure_sweep("2a", jobs=2)
    assert all(row[6] == "optimal" for row in res.rows)
    for gamma, _eig, omega_bound, e1, e075, e05, _s in res.rows:
        floor = 0.75 * gamma
        assert abs(e1 - e075) <= 1e-4 and abs(e075 - e05) <= 1e-4
        assert abs(e1 - e05) <= 1e-4
        for e in (e1, e075, e05):
            assert e == pytest.approx(floor, abs=1e-4)
        assert omega_bound == pytest.approx(floor, abs=1e-4)


def test_criterion_03_two_copy_probabilistic_improvement():
    tic = time.perf_counter()
    res = figure_sweep("2b", jobs=2)
    assert all(row[6] == "optimal" for row in res.rows)
    improved = 0
    for _g, _eig, omega_bound, e1, _e075, e05, _s in res.rows:
        assert e05 == pytest.approx(omega_bound, abs=1e-3)
        if e05 < e1 - 1e-4:
            improved += 1
    assert improved >= len(res.rows) / 2, (
        f"half-probability protocol only improved {improved}/{len(res.rows)} points")
    assert time.perf_counter() - tic < 300.0


def test_criterion_04_perfect_low_probability_distillation():
    rho = state_factory("figure3a").mat
    res = solve_Theta_p(rho, PHI3, PPT33, p=0.3)
    assert 1.0 - res.value <= 1e-6


def test_criterion_05_infinite_measure_vanishing_probability():
    rho = state_factory("figure3b").mat
    mv = projective_robustness(rho, PPT33)
    assert not mv.trouble and not mv.finite
    assert mv.certificate is not None and mv.certificate.get("verified") is True

    def err(p: float) -> float:
        return 1.0 - solve_Theta_p(rho, PHI3, PPT33, p=p).value

    for p in np.round(np.arange(0.05, 1.0001, 0.05), 4):
        assert err(float(p)) > 1e-4, f"error collapsed at p={p}"
    seq = [err(p) for p in (0.2, 0.1, 0.05, 0.02)]
    assert seq[0] > seq[1] > seq[2] > seq[3]


def test_criterion_06_monotone_property_suite():
    t0 = time.perf_counter()
    for name, F in sorted(THEORIES.items()):
        rng = np.random.default_rng(600 + len(name))
        d = F.dim
        anchor = _anchor(name, F)
        eye = np.eye(d) / d

        # faithfulness: free states sit at one, resourceful states above it
        for _ in range(20):
            sig = F.random_free_state(rng)
            assert omega_of(sig, F) == pytest.approx(1.0, abs=1e-6)
        for _ in range(20):
            rho = 0.6 * anchor + 0.4 * rand_state(rng, d)
            assert F.cone_violation(rho) > 1e-6, "draw was not resourceful"
            value = projective_robustness(rho, F).value
            assert value > 1 + 1e-6

        # scaling invariance
        for _ in range(20):
            rho = 0.7 * rand_state(rng, d) + 0.3 * eye
            base = omega_of(rho, F)
            for lam in (0.5, 3.0):
                assert omega_of(lam * rho, F) == pytest.approx(base, rel=1e-8)

        # submultiplicativity across the tensor product
        Fp = _product_spec(name, F)
        for _ in range(20):
            r1 = 0.8 * rand_state(rng, d) + 0.2 * eye
            r2 = 0.8 * rand_state(rng, d) + 0.2 * eye
            prod = omega_of(_product_state(name, r1, r2), Fp)
            assert prod <= omega_of(r1, F) * omega_of(r2, F) * (1 + 1e-6)

        # quasiconvexity on three-point mixtures
        for _ in range(20):
            r1 = 0.85 * rand_state(rng, d) + 0.15 * eye
            r2 = 0.85 * rand_state(rng, d) + 0.15 * eye
            cap = max(omega_of(r1, F), omega_of(r2, F))
            for t in (0.25, 0.5, 0.75):
                mix = omega_of(t * r1 + (1 - t) * r2, F)
                assert mix <= cap * (1 + 1e-6) + 1e-7

        # two-sided bound chain (raises internally on any ordering break)
        for k in range(20):
            if k % 4 == 0:
                rho = F.random_free_state(rng)
            elif k % 4 == 1:
                rho = rand_pure(rng, d)
            else:
                rho = rand_state(rng, d)
            assert sandwich_bounds(rho, F)["ok"]

        # closed-form max-relative entropy matches its conic formulation
        for _ in range(20):
            sig = F.random_free_state(rng)
            rho = rand_state(rng, d)
            assert rmax(rho, sig) == pytest.approx(rmax_sdp(rho, sig), rel=1e-6)

        # projective error floor dominates the eigenvalue floor
        target = _anchor(name, F)
        for _ in range(20):
            rho = 0.8 * rand_state(rng, d) + 0.2 * eye
            floors = eigenvalue_bound(rho, target, F)
            assert floors.projective >= floors.eigenvalue - 1e-9
    assert time.perf_counter() - t0 < 600.0


def test_criterion_07_duality_and_infinity_witnesses():
    for name, F in sorted(THEORIES.items()):
        rng = np.random.default_rng(700 + len(name))
        d = F.dim
        infinite_seen = 0
        for k in range(50):
            if k % 10 < 7:
                rho = 0.7 * rand_state(rng, d) + 0.3 * np.eye(d) / d
            else:
                rho = rand_pure(rng, d)
            mv = projective_robustness(rho, F)
            assert not mv.trouble, f"{name} instance {k}: {mv.status}"
            if mv.finite:
                assert mv.dual_A is not None and mv.dual_B is not None
                dual_val = float(np.vdot(mv.dual_A, rho).real)
                norm = float(np.vdot(mv.dual_B, rho).real)
                assert norm == pytest.approx(1.0, abs=1e-7)
                assert abs(dual_val - mv.value) <= 1e-7 * max(1.0, mv.value)
            else:
                infinite_seen += 1
                assert mv.certificate is not None
                assert mv.certificate.get("verified") is True
        assert infinite_seen > 0, f"{name}: no infinite instances exercised"


def test_criterion_08_constructive_map_round_trip():
    from projrob.protocols import apply_map, build_distillation_map, verify_free

    triples = (
        [(isotropic_state(g).mat, PHI2, PPT22, p)
         for g in (0.1, 0.2, 0.3, 0.4, 0.5) for p in (0.5, 1.0)]
        + [(state_factory("figure3a").mat, PHI3, PPT33, p)
           for p in (0.1, 0.2, 0.3)]
        + [(state_factory("figure3b").mat, PHI3, PPT33, p)
           for p in (0.05, 0.1)]
        + [(plus_mix(q), maximally_coherent(2).mat, INC2, 1.0)
           for q in (0.3, 0.5, 0.7)]
        + [(plus_mix(q), maximally_coherent(2).mat, INC2, 0.5)
           for q in (0.3, 0.5)]
    )
    assert len(triples) == 20
    for rho, phi, F, p in triples:
        res = solve_Theta_p(rho, phi, F, p=p)
        mp = build_distillation_map(res.W.mat, res.Z.mat, phi, F, res.t)
        cert = verify_free(mp, F)
        assert cert.passed and cert.max_violation <= 1e-7
        assert mp.choi_min_eigenvalue >= -1e-8
        prob, out = apply_map(mp, rho)
        assert prob == pytest.approx(p, abs=1e-6)
        fidelity = float(np.vdot(phi, out.mat).real)
        assert fidelity == pytest.approx(res.value, abs=1e-6)


def test_criterion_09_sandwich_tightness_golden_targets():
    golden = (
        (isotropic_state(0.3).mat, PHI2, PPT22, False),
        (isotropic_state(0.5).mat, PHI2, PPT22, False),
        (isotropic_state(0.3, d=3).mat, PHI3, PPT33, False),
        (plus_mix(0.6), maximally_coherent(2).mat, INC2, True),
    )
    for rho, phi, F, affine in golden:
        upper, lower = probability_sandwich(rho, phi, F, affine=affine)
        assert upper.value - lower.value <= 1e-6
        rep = distillation_report(rho, phi, F, "affine" if affine else "general")
        assert rep.exact
        assert rep.achievable == pytest.approx(rep.lower_error, abs=1e-6)

    # non-golden target: the two bounds may split but must stay ordered
    rho = isotropic_state(0.3).mat
    target = schmidt_pure(0.8)
    upper, lower = probability_sandwich(rho, target, PPT22)
    assert upper.value >= lower.value - 1e-9
    rep = distillation_report(rho, target, PPT22)
    assert not rep.exact
    assert rep.achievable >= rep.lower_error - 1e-9


def test_criterion_10_discrimination_advantage_identity():
    states = (
        [(isotropic_state(g).mat, PPT22) for g in (0.1, 0.25, 0.4, 0.55, 0.62)]
        + [(plus_mix(q), INC2) for q in (0.2, 0.4, 0.6, 0.8)]
        + [(0.5 * maximally_coherent(3).mat + 0.5 * np.eye(3) / 3,
            FreeSetSpec.incoherent(3))]
    )
    assert len(states) == 10
    for rho, F in states:
        report = verify_advantage_theorem(rho, F, n_random=50, seed=10)
        assert report.random_trials == 50
        assert report.constructed_ratio == pytest.approx(report.omega, rel=1e-3)
        assert report.max_random_ratio <= report.omega * (1 + 1e-6)
