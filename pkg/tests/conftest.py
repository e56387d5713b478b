"""Shared fixtures: the theory zoo and seeded random-state helpers."""

from __future__ import annotations

import numpy as np
import pytest

from projrob.free_sets import FreeSetSpec


def rand_state(rng: np.random.Generator, d: int, rank: int | None = None,
               bipartition=None) -> np.ndarray:
    """Random density matrix via a Ginibre factor (full rank by default)."""
    k = rank or d
    G = rng.normal(size=(d, k)) + 1j * rng.normal(size=(d, k))
    M = G @ G.conj().T
    return M / np.trace(M).real


def rand_pure(rng: np.random.Generator, d: int) -> np.ndarray:
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    v /= np.linalg.norm(v)
    return np.outer(v, v.conj())


def _polytope_theory(seed: int = 7, d: int = 3, n: int = 8) -> FreeSetSpec:
    rng = np.random.default_rng(seed)
    verts = [rand_state(rng, d, rank=d) for _ in range(n)]
    return FreeSetSpec.polytope(verts)


def _single_theory(seed: int = 11, d: int = 3) -> FreeSetSpec:
    rng = np.random.default_rng(seed)
    return FreeSetSpec.single_state(rand_state(rng, d))


THEORIES = {
    "incoherent": FreeSetSpec.incoherent(3),
    "ppt": FreeSetSpec.ppt(2, 2),
    "real": FreeSetSpec.real(3),
    "single": _single_theory(),
    "polytope": _polytope_theory(),
}


@pytest.fixture(params=sorted(THEORIES), ids=sorted(THEORIES))
def theory(request) -> FreeSetSpec:
    return THEORIES[request.param]


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(2024)
