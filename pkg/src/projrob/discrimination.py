"""Simultaneous channel discrimination and exclusion advantages.

The projective measure equals the best possible ratio between the
discrimination and exclusion success probabilities of a state, relative to
the best free state, over all finite channel ensembles and POVM pairs.  This
module evaluates those probabilities, realises the optimal binary instance
from the measure's dual optimizers, and audits the upper bound on random
instances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import solver
from .errors import DimensionError, DomainError, SolverError, TheoremViolationError
from .free_sets import FreeSetSpec
from .monotones import projective_robustness
from .protocols import MeasurePrepareMap
from .solver import ConicProblem, SolveOptions, Status, Var, const_expr, eq0, inner

POVM_TOL = 1e-9
DELTA = 1e-9  # identity floor keeping all the ratios well defined

IDENTITY = "identity"


def _herm(M: np.ndarray) -> np.ndarray:
    return (M + M.conj().T) / 2


def _ip(X: np.ndarray, Y: np.ndarray) -> float:
    return float(np.real(np.trace(X.conj().T @ Y)))


def _as_povm(ops, d: int | None):
    out = []
    for M in ops:
        M = _herm(np.atleast_2d(np.asarray(M, dtype=complex)))
        if d is None:
            d = M.shape[0]
        if M.shape != (d, d):
            raise DimensionError(f"POVM element shape {M.shape} != ({d}, {d})")
        out.append(M)
    return tuple(out), d


@dataclass(frozen=True)
class DiscriminationInstance:
    """A channel ensemble with one POVM for guessing and one for excluding.

    Channels are measure-and-prepare instruments or the literal string
    "identity".  Probabilities sum to one and both operator lists resolve
    the identity.
    """

    ensemble: tuple
    povm_discriminate: tuple
    povm_exclude: tuple

    def __post_init__(self):
        ens = tuple((float(p), ch) for p, ch in self.ensemble)
        if not ens:
            raise DomainError("ensemble must contain at least one channel")
        if abs(sum(p for p, _ in ens) - 1.0) > POVM_TOL:
            raise DomainError("ensemble probabilities must sum to one")
        for p, ch in ens:
            if p < -POVM_TOL:
                raise DomainError(f"negative ensemble probability {p}")
            if ch != IDENTITY and not isinstance(ch, MeasurePrepareMap):
                raise DomainError("channels must be instruments or the identity tag")
        A, d = _as_povm(self.povm_discriminate, None)
        B, _ = _as_povm(self.povm_exclude, d)
        for name, ops in (("discrimination", A), ("exclusion", B)):
            for i, M in enumerate(ops):
                if float(np.linalg.eigvalsh(M)[0]) < -POVM_TOL:
                    raise DomainError(f"{name} POVM element {i} is not positive")
            gap = np.max(np.abs(sum(ops) - np.eye(d)))
            if gap > POVM_TOL:
                raise DomainError(f"{name} POVM does not resolve the identity ({gap:.2e})")
        for _, ch in ens:
            if isinstance(ch, MeasurePrepareMap) and ch.out_dim != d:
                raise DimensionError("channel output does not match the POVM space")
        object.__setattr__(self, "ensemble", ens)
        object.__setattr__(self, "povm_discriminate", A)
        object.__setattr__(self, "povm_exclude", B)

    @property
    def out_dim(self) -> int:
        return self.povm_discriminate[0].shape[0]

    @property
    def in_dim(self) -> int:
        for _, ch in self.ensemble:
            if isinstance(ch, MeasurePrepareMap):
                return ch.in_dim
        return self.out_dim


def _channel_apply(ch, X: np.ndarray) -> np.ndarray:
    return X if ch == IDENTITY else ch.evaluate(X)


def _channel_adjoint(ch, Y: np.ndarray, in_dim: int) -> np.ndarray:
    if ch == IDENTITY:
        return Y
    out = np.zeros((in_dim, in_dim), dtype=complex)
    for m, p in ch.effects:
        out += _ip(p.mat, Y) * m.mat
    return out


def success_probability(instance: DiscriminationInstance, rho,
                        which: str = "discriminate") -> float:
    """Average probability sum_i p_i <channel_i(rho), M_i>."""
    if which not in ("discriminate", "exclude"):
        raise DomainError(f"unknown task {which!r}")
    povm = (instance.povm_discriminate if which == "discriminate"
            else instance.povm_exclude)
    R = np.atleast_2d(np.asarray(rho.mat if hasattr(rho, "mat") else rho, dtype=complex))
    if R.shape != (instance.in_dim,) * 2:
        raise DimensionError(f"state shape {R.shape} != ({instance.in_dim},) * 2")
    total = 0.0
    for (p, ch), M in zip(instance.ensemble, povm):
        if p > 0.0:
            total += p * _ip(_channel_apply(ch, R), M)
    return total


def _effective_pair(instance: DiscriminationInstance):
    """Pull both POVMs back through the ensemble onto the input space."""
    d = instance.in_dim
    Ahat = np.zeros((d, d), dtype=complex)
    Bhat = np.zeros((d, d), dtype=complex)
    for (p, ch), MA, MB in zip(instance.ensemble, instance.povm_discriminate,
                               instance.povm_exclude):
        if p > 0.0:
            Ahat += p * _channel_adjoint(ch, MA, d)
            Bhat += p * _channel_adjoint(ch, MB, d)
    return _herm(Ahat), _herm(Bhat)


def best_free_ratio(A, B, F: FreeSetSpec, opts: SolveOptions | None = None) -> float:
    """max over free states of <A, σ> / <B, σ>.

    Solved exactly by normalising the denominator over the free cone; needs
    <B, σ> > 0 on all of F, which holds for the identity-floored operators
    used here.
    """
    Am = _herm(np.asarray(A, dtype=complex))
    Bm = _herm(np.asarray(B, dtype=complex))
    s = Var("ccs", F.dim, F.bipartition)
    cons = F.primal_cone_constraints(s.expr())
    cons.append(eq0(inner(Bm, s) - const_expr(np.ones((1, 1))), name="cc_norm"))
    out = solver.solve(ConicProblem(inner(Am, s), "max", cons), opts)
    if out.status is not Status.Optimal:
        raise SolverError(f"free-ratio program failed: {out.status} {out.message}")
    return float(out.value)


def advantage_ratio(instance: DiscriminationInstance, rho, F: FreeSetSpec,
                    opts: SolveOptions | None = None) -> float:
    """The instance's discrimination/exclusion ratio relative to free states."""
    R = np.atleast_2d(np.asarray(rho.mat if hasattr(rho, "mat") else rho, dtype=complex))
    Ahat, Bhat = _effective_pair(instance)
    pb = _ip(Bhat, R)
    if pb <= 0:
        raise DomainError("exclusion probability vanishes on the input; "
                          "the ratio is not well defined")
    numerator = _ip(Ahat, R) / pb
    denominator = best_free_ratio(Ahat, Bhat, F, opts)
    if denominator <= 0:
        raise DomainError("free-state ratio vanishes; the advantage is not well defined")
    return numerator / denominator


def advantage_instance_from_duals(rho, F: FreeSetSpec,
                                  opts: SolveOptions | None = None,
                                  delta: float = DELTA) -> DiscriminationInstance:
    """Binary instance realising the projective measure as an advantage.

    Uses the measure's dual witnesses: the first channel is the identity
    applied with probability one, the second is a throwaway depolarisation,
    and the POVMs are the sup-normalised witnesses (floored by delta times
    the identity so all the ratios stay finite).
    """
    R = np.atleast_2d(np.asarray(rho.mat if hasattr(rho, "mat") else rho, dtype=complex))
    mv = projective_robustness(R, F, opts)
    if mv.trouble:
        raise SolverError(f"projective measure unresolved: {mv.status}")
    if not mv.finite:
        raise DomainError("the advantage is unbounded (projective measure "
                          "certified infinite); no finite instance realises it")
    if mv.dual_A is None or mv.dual_B is None:
        raise SolverError("projective-measure duals unavailable")
    A = _herm(np.asarray(mv.dual_A)) + delta * np.eye(F.dim)
    B = _herm(np.asarray(mv.dual_B)) + delta * np.eye(F.dim)
    A1 = A / float(np.linalg.eigvalsh(A)[-1])
    B1 = B / float(np.linalg.eigvalsh(B)[-1])
    eye = np.eye(F.dim, dtype=complex)
    depol = MeasurePrepareMap(((eye, eye / F.dim),), F.dim, F.dim)
    return DiscriminationInstance(
        ((1.0, IDENTITY), (0.0, depol)),
        (A1, eye - A1),
        (B1, eye - B1),
    )


def _random_instance(d: int, rng: np.random.Generator) -> DiscriminationInstance:
    """A random binary ensemble with random identity-floored POVMs."""
    def rand_psd(scale=1.0):
        H = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        M = H @ H.conj().T
        return scale * M / np.trace(M).real

    def rand_channel():
        G = rand_psd()
        lam = float(np.linalg.eigvalsh(G)[-1])
        G1 = G / (lam * (1 + rng.uniform(0.0, 1.0)))
        effects = ((G1, rand_psd()), (np.eye(d) - G1, rand_psd()))
        return MeasurePrepareMap(effects, d, d)

    def rand_povm():
        M = rand_psd() + DELTA * np.eye(d)
        M1 = M / (float(np.linalg.eigvalsh(M)[-1]) * (1 + rng.uniform(0.0, 1.0)))
        # keep the complement floored away from singular as well
        M1 = (1 - DELTA) * M1 + DELTA * np.eye(d) / 2
        return (M1, np.eye(d) - M1)

    q = float(rng.uniform(0.2, 0.8))
    first = IDENTITY if rng.uniform() < 0.5 else rand_channel()
    ens = ((q, first), (1 - q, rand_channel()))
    return DiscriminationInstance(ens, rand_povm(), rand_povm())


@dataclass(frozen=True)
class AdvantageReport:
    """Constructed-advantage value against the measure, plus the audit."""

    omega: float
    constructed_ratio: float
    random_trials: int
    max_random_ratio: float


def verify_advantage_theorem(rho, F: FreeSetSpec, n_random: int = 20,
                             seed: int = 0,
                             opts: SolveOptions | None = None) -> AdvantageReport:
    """Check both directions of the advantage identity on one state.

    The instance built from the dual witnesses must achieve the projective
    measure within relative 1e-3, and no random instance may exceed it
    (beyond solver slack).  Failures raise TheoremViolationError, pointing
    at a dual-extraction or solver bug rather than bad input.
    """
    R = np.atleast_2d(np.asarray(rho.mat if hasattr(rho, "mat") else rho, dtype=complex))
    mv = projective_robustness(R, F, opts)
    if mv.trouble:
        raise SolverError(f"projective measure unresolved: {mv.status}")
    if not mv.finite:
        raise DomainError("advantage audit needs a finite projective measure")
    omega = mv.value
    instance = advantage_instance_from_duals(R, F, opts)
    constructed = advantage_ratio(instance, R, F, opts)
    if not (omega * (1 - 1e-3) <= constructed <= omega * (1 + 1e-6)):
        raise TheoremViolationError(
            f"constructed instance realises {constructed:.8g}, expected the "
            f"projective measure {omega:.8g} within relative 1e-3"
        )
    rng = np.random.default_rng(seed)
    worst = 0.0
    for k in range(n_random):
        inst = _random_instance(F.dim, rng)
        ratio = advantage_ratio(inst, R, F, opts)
        worst = max(worst, ratio)
        if ratio > omega * (1 + 1e-6):
            raise TheoremViolationError(
                f"random instance {k} reaches {ratio:.8g}, above the "
                f"projective measure {omega:.8g}"
            )
    return AdvantageReport(omega, constructed, n_random, worst)
