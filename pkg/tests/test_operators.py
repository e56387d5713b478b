"""Operator core: wrappers, tensor tools, and named state families."""

from __future__ import annotations

import numpy as np
import pytest

from projrob.errors import ConfigError, DomainError
from projrob.operators import (
    HermitianOperator,
    QuantumState,
    choi_matrix,
    hermitian,
    isotropic_state,
    ket,
    ketbra,
    maximally_coherent,
    maximally_entangled,
    min_eigenvalue,
    n_copies,
    partial_transpose,
    permute_subsystems,
    pure_target_fidelity,
    state,
    state_factory,
    support_projector,
    tensor_product,
)

from conftest import rand_pure, rand_state


def test_hermitian_symmetrizes_and_checks():
    H = hermitian([[1.0, 1j], [-1j, 2.0]])
    assert H.dim == 2
    np.testing.assert_allclose(H.mat, H.mat.conj().T)
    with pytest.warns(UserWarning, match="symmetrising"):
        S = hermitian([[0.0, 1.0], [0.0, 0.0]])
    np.testing.assert_allclose(S.mat, [[0.0, 0.5], [0.5, 0.0]])


def test_state_validation():
    s = state(np.eye(2) / 2)
    assert s.dim == 2
    with pytest.raises(DomainError):
        state(np.eye(2))  # trace 2
    with pytest.raises(DomainError):
        state(np.diag([1.5, -0.5]))  # negative eigenvalue


def test_hermitian_arithmetic():
    a = hermitian(np.diag([1.0, 2.0]))
    b = hermitian(np.diag([0.5, 0.5]))
    np.testing.assert_allclose((a + b).mat, np.diag([1.5, 2.5]))
    np.testing.assert_allclose((a - b).mat, np.diag([0.5, 1.5]))
    np.testing.assert_allclose((2.0 * (a / 2.0)).mat, a.mat)
    np.testing.assert_allclose((-a).mat, -a.mat)
    assert a.trace() == pytest.approx(3.0)
    assert a.inner(b) == pytest.approx(1.5)


def test_kets():
    np.testing.assert_allclose(ket(1, 3), [0, 1, 0])
    np.testing.assert_allclose(ketbra(0, 2, 3)[0, 2], 1.0)


def test_partial_transpose_is_involutive(rng):
    rho = rand_state(rng, 4)
    op = hermitian(rho, bipartition=(2, 2))
    twice = partial_transpose(partial_transpose(op))
    np.testing.assert_allclose(twice.mat, rho, atol=1e-12)


def test_partial_transpose_detects_entanglement():
    phi = maximally_entangled(2)
    pt = partial_transpose(hermitian(phi.mat, (2, 2)))
    assert min_eigenvalue(pt) == pytest.approx(-0.5, abs=1e-12)


def test_permute_subsystems_swap():
    A = np.kron(np.diag([1.0, 0.0]), np.diag([0.25, 0.75]))
    B = permute_subsystems(A, [2, 2], [1, 0])
    np.testing.assert_allclose(B, np.kron(np.diag([0.25, 0.75]), np.diag([1.0, 0.0])))


def test_tensor_product_dims():
    a = hermitian(np.eye(2) / 2)
    b = hermitian(np.diag([1.0, 0.0, 0.0]))
    assert tensor_product(a, b).dim == 6


def test_support_projector_rank(rng):
    rho = rand_state(rng, 4, rank=2)
    P = support_projector(hermitian(rho))
    np.testing.assert_allclose(P.mat @ P.mat, P.mat, atol=1e-9)
    assert np.trace(P.mat).real == pytest.approx(2.0, abs=1e-9)
    # the support reproduces the state
    np.testing.assert_allclose(P.mat @ rho @ P.mat, rho, atol=1e-9)


def test_pure_target_fidelity(rng):
    phi = maximally_entangled(2)
    assert pure_target_fidelity(phi, phi) == pytest.approx(1.0)
    rho = isotropic_state(0.4)
    assert pure_target_fidelity(rho, phi) == pytest.approx(0.7, abs=1e-12)


def test_choi_of_identity():
    C = choi_matrix(lambda X: X, in_dim=2)
    np.testing.assert_allclose(C.mat, 2 * maximally_entangled(2).mat, atol=1e-12)


# ---- named families -------------------------------------------------------


def test_maximally_entangled_is_pure():
    phi = maximally_entangled(3)
    np.testing.assert_allclose(phi.mat @ phi.mat, phi.mat, atol=1e-12)
    assert phi.op.bipartition == (3, 3)


def test_maximally_coherent_entries():
    psi = maximally_coherent(4)
    np.testing.assert_allclose(psi.mat, np.full((4, 4), 0.25), atol=1e-12)


@pytest.mark.parametrize("gamma", [0.0, 0.3, 1.0])
def test_isotropic_endpoints(gamma):
    rho = isotropic_state(gamma)
    expect = (1 - gamma) * maximally_entangled(2).mat + gamma * np.eye(4) / 4
    np.testing.assert_allclose(rho.mat, expect, atol=1e-12)


def test_two_copies_regroups_cuts(rng):
    # ρ^⊗2 must come back grouped as (A1 A2 | B1 B2), not (A1 B1 A2 B2)
    rho = state(rand_state(rng, 4), bipartition=(2, 2))
    doubled = n_copies(rho, 2)
    assert doubled.op.bipartition == (4, 4)
    assert doubled.dim == 16
    pt_single = partial_transpose(rho.op).mat
    pt_double = partial_transpose(doubled.op).mat
    perm = [0, 2, 1, 3]
    expect = permute_subsystems(np.kron(pt_single, pt_single), [2, 2, 2, 2], perm)
    np.testing.assert_allclose(pt_double, expect, atol=1e-12)


def test_factory_dispatch():
    assert state_factory("isotropic", gamma=0.2).dim == 4
    assert state_factory("maximally_entangled", m=3).dim == 9
    assert state_factory("figure3a").dim == 9
    assert state_factory("figure3b").dim == 9
    two = state_factory("n_copies", state=state_factory("isotropic", gamma=0.2), n=2)
    assert two.dim == 16
    with pytest.raises(ConfigError):
        state_factory("unobtainium")
    with pytest.raises(ConfigError):
        state_factory("isotropic", gamma=1.5)


def test_figure_states_composition():
    phi3 = maximally_entangled(3).mat
    a = state_factory("figure3a").mat
    np.testing.assert_allclose(a, 0.75 * phi3 + 0.25 * np.kron(
        np.diag([1.0, 0, 0]), np.diag([0, 1.0, 0])), atol=1e-12)
    b = state_factory("figure3b").mat
    assert np.trace(b).real == pytest.approx(1.0, abs=1e-12)
    assert pure_target_fidelity(state(b, (3, 3)), state(phi3, (3, 3))) == pytest.approx(
        0.75, abs=1e-12)
