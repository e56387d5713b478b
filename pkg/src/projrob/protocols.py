"""Measure-and-prepare instruments assembled from program optimizers.

Maps of the form X -> sum_i <M_i, X> P_i are built out of witness pairs and
free covers returned by the monotone and trade-off solvers, certified to be
resource-non-generating by structural cone checks (never by sampling), and
applied to states.  The convertibility decision procedure lives here too.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import solver
from .distill import _free_kernel
from .errors import (
    CertificateError,
    ConfigError,
    DimensionError,
    DomainError,
    NoGoError,
    SolverError,
)
from .free_sets import FreeSetSpec, _mat_from_json, _mat_json
from .monotones import (
    free_projective_robustness,
    generalized_robustness,
    projective_robustness,
    standard_robustness,
    support_overlap,
)
from .operators import HermitianOperator, QuantumState, state, support_projector
from .solver import ConicProblem, SolveOptions, Status, Var, const_expr, eq0, inner, psd

FREENESS_TOL = 1e-7     # passing certificates sit at or below this
EFFECT_TOL = 1e-8       # PSD / trace-non-increase slack on instrument effects
DIVERGENT_NORM = 1e6    # witness norms past this mean asymptotic-only protocols

DUAL_CONE_WITNESS = "DualConeWitness"
GENERATOR_CHECK = "GeneratorCheck"

YES_WITH_MAP = "Yes-with-map"
YES_ASYMPTOTIC = "Yes-asymptotic"
NO = "No"
UNDECIDED = "Undecided"


def _as_mat(x, d: int | None = None) -> np.ndarray:
    if isinstance(x, (QuantumState, HermitianOperator)):
        M = np.asarray(x.mat, dtype=complex)
    else:
        M = np.atleast_2d(np.asarray(x, dtype=complex))
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"expected a square operator, got shape {M.shape}")
    if d is not None and M.shape[0] != d:
        raise DimensionError(f"operator dim {M.shape[0]} != expected {d}")
    return M


def _herm(M: np.ndarray) -> np.ndarray:
    return (M + M.conj().T) / 2


def _min_eig(M: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(_herm(M))[0])


def _max_eig(M: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(_herm(M))[-1])


def _sup_norm(M: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvalsh(_herm(M))))) if M.size else 0.0


# ---------------------------------------------------------------------------
# the instrument type


@dataclass(frozen=True)
class MeasurePrepareMap:
    """Two-outcome-style instrument X -> sum_i <M_i, X> P_i.

    The measurement operators form a sub-POVM and the prepared operators are
    positive, so the Choi matrix sum_i conj(M_i) (x) P_i is positive by
    construction and the map is trace-non-increasing.  ``meta`` records how
    the effects were assembled so the freeness checker knows which structural
    argument applies; it carries scalars only and never enters equality or
    hashing.
    """

    effects: tuple
    in_dim: int
    out_dim: int
    meta: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.in_dim < 1 or self.out_dim < 1:
            raise DimensionError("instrument dimensions must be positive")
        wrapped = []
        for m, p in self.effects:
            wrapped.append((HermitianOperator(_herm(_as_mat(m, self.in_dim))),
                            HermitianOperator(_herm(_as_mat(p, self.out_dim)))))
        object.__setattr__(self, "effects", tuple(wrapped))
        for i, (m, p) in enumerate(self.effects):
            if _min_eig(m.mat) < -EFFECT_TOL:
                raise CertificateError(f"measurement operator {i} is not positive")
            if _min_eig(p.mat) < -EFFECT_TOL:
                raise CertificateError(f"prepared operator {i} is not positive")
        if self.effects:
            povm = sum(m.mat for m, _ in self.effects)
            drain = sum(float(np.real(np.trace(p.mat))) * m.mat for m, p in self.effects)
            if _max_eig(povm) > 1.0 + EFFECT_TOL:
                raise CertificateError("measurement operators exceed a sub-POVM")
            if _max_eig(drain) > 1.0 + EFFECT_TOL:
                raise CertificateError("instrument is not trace-non-increasing")

    # -- action ----------------------------------------------------------

    def evaluate(self, X) -> np.ndarray:
        """Raw (unnormalised) output operator on an input matrix."""
        M = _as_mat(X, self.in_dim)
        out = np.zeros((self.out_dim, self.out_dim), dtype=complex)
        for m, p in self.effects:
            out += float(np.real(np.trace(m.mat.conj().T @ M))) * p.mat
        return out

    @property
    def choi(self) -> HermitianOperator:
        blocks = np.zeros((self.in_dim * self.out_dim,) * 2, dtype=complex)
        for m, p in self.effects:
            blocks += np.kron(m.mat.conj(), p.mat)
        return HermitianOperator(blocks, (self.in_dim, self.out_dim))

    @property
    def choi_min_eigenvalue(self) -> float:
        return _min_eig(self.choi.mat)

    # -- serialization ---------------------------------------------------

    def to_json(self) -> dict:
        return {
            "in_dim": self.in_dim,
            "out_dim": self.out_dim,
            "effects": [[_mat_json(m.mat), _mat_json(p.mat)] for m, p in self.effects],
            "meta": {k: v for k, v in self.meta.items()
                     if isinstance(v, (str, int, float, bool))},
        }

    @staticmethod
    def from_json(doc: dict) -> MeasurePrepareMap:
        try:
            effects = [(_mat_from_json(m), _mat_from_json(p)) for m, p in doc["effects"]]
            return MeasurePrepareMap(
                tuple(effects), int(doc["in_dim"]), int(doc["out_dim"]),
                dict(doc.get("meta", {})),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad instrument JSON: {exc}") from exc


def _instrument(raw_effects, in_dim, out_dim, meta) -> MeasurePrepareMap:
    """Normalise prepared operators to unit trace and wrap up the map."""
    effects = []
    for m, p in raw_effects:
        m = _herm(np.asarray(m, dtype=complex))
        p = _herm(np.asarray(p, dtype=complex))
        tp = float(np.real(np.trace(p)))
        if tp <= 1e-13:
            if np.max(np.abs(p)) > 1e-11:
                raise SolverError("prepared operator has vanishing trace but is not zero")
            continue  # null branch, contributes nothing
        effects.append((tp * m, p / tp))
    return MeasurePrepareMap(tuple(effects), in_dim, out_dim, dict(meta))


# ---------------------------------------------------------------------------
# freeness certificates


class FreenessCheck(NamedTuple):
    label: str
    violation: float
    direction: np.ndarray | None = None


@dataclass(frozen=True)
class FreenessCertificate:
    """Outcome of the structural resource-non-generation checks."""

    method: str  # DualConeWitness | GeneratorCheck
    checks: tuple
    max_violation: float

    @property
    def passed(self) -> bool:
        return self.max_violation <= FREENESS_TOL

    @property
    def worst(self) -> FreenessCheck | None:
        if not self.checks:
            return None
        return max(self.checks, key=lambda c: c.violation)


@dataclass(frozen=True)
class AsymptoticFlag:
    """Conversion exists, but only with vanishing probability of success."""

    message: str
    dual_norm: float = math.inf


class ConversionVerdict(NamedTuple):
    verdict: str
    evidence: dict


# ---------------------------------------------------------------------------
# membership helpers


def _extreme_overlap(F: FreeSetSpec, X, sense: str = "min",
                     opts: SolveOptions | None = None):
    """Extremal <X, σ> over free states σ together with an attaining σ."""
    M = _herm(_as_mat(X, F.dim))
    th = F.theory
    if th == "single":
        return float(np.real(np.trace(F.sigma0.conj().T @ M))), F.sigma0.copy()
    if th == "polytope":
        vals = [float(np.real(np.trace(v.conj().T @ M))) for v in F.vertices]
        i = int(np.argmin(vals)) if sense == "min" else int(np.argmax(vals))
        return vals[i], F.vertices[i].copy()
    if th == "incoherent":
        dvals = np.real(np.diag(M))
        i = int(np.argmin(dvals)) if sense == "min" else int(np.argmax(dvals))
        E = np.zeros((F.dim, F.dim), dtype=complex)
        E[i, i] = 1.0
        return float(dvals[i]), E
    if th == "real":
        R = (M.real + M.real.T) / 2
        vals, vecs = np.linalg.eigh(R)
        j = 0 if sense == "min" else -1
        v = vecs[:, j]
        return float(vals[j]), np.outer(v, v).astype(complex)
    # ppt: small conic program with the optimizer extracted
    s = Var("ovdir", F.dim, F.bipartition)
    cons = F.primal_cone_constraints(s.expr())
    cons.append(eq0(s.expr().trace() - const_expr(np.ones((1, 1))), name="ov_trace"))
    prob = ConicProblem(inner(M, s), "min" if sense == "min" else "max", cons)
    out = solver.solve(prob, opts)
    if out.status is not Status.Optimal:
        raise SolverError(f"overlap probe failed: {out.status} {out.message}")
    return float(out.value), np.asarray(out.primal[s.name])


def _cone_offender(F: FreeSetSpec, X) -> np.ndarray:
    """A direction exhibiting why X misses the primal cone."""
    M = _herm(_as_mat(X, F.dim))
    th = F.theory
    if th == "ppt":
        g = M.reshape(*F.bipartition, *F.bipartition).transpose(0, 3, 2, 1).reshape(M.shape)
        wm, Vm = np.linalg.eigh(M)
        wg, Vg = np.linalg.eigh(_herm(g))
        if wm[0] <= wg[0]:
            v = Vm[:, 0]
            return np.outer(v, v.conj())
        u = Vg[:, 0]
        P = np.outer(u, u.conj())
        return P.reshape(*F.bipartition, *F.bipartition).transpose(0, 3, 2, 1).reshape(M.shape)
    if th == "incoherent":
        dvals = np.real(np.diag(M))
        off = M - np.diag(np.diag(M))
        if -np.min(dvals) >= np.max(np.abs(off)):
            i = int(np.argmin(dvals))
            E = np.zeros_like(M)
            E[i, i] = 1.0
            return E
        i, j = np.unravel_index(int(np.argmax(np.abs(off))), off.shape)
        E = np.zeros_like(M)
        E[i, j] = 1.0
        E[j, i] = 1.0
        return E
    if th == "real":
        if np.max(np.abs(M.imag)) >= -_min_eig(M):
            i, j = np.unravel_index(int(np.argmax(np.abs(M.imag))), M.shape)
            E = np.zeros_like(M)
            E[i, j] = 1j
            E[j, i] = -1j
            return E
        vals, vecs = np.linalg.eigh((M.real + M.real.T) / 2)
        v = vecs[:, 0]
        return np.outer(v, v).astype(complex)
    if th == "single":
        ray = float(np.real(np.trace(F.sigma0.conj().T @ M)))
        ray /= float(np.real(np.trace(F.sigma0.conj().T @ F.sigma0)))
        resid = M - max(ray, 0.0) * F.sigma0
        n = np.max(np.abs(resid))
        return resid / n if n > 0 else resid
    # polytope: the best nonnegative reconstruction misses by this residual
    from scipy.optimize import nnls

    cols = [np.concatenate([v.real.ravel(), v.imag.ravel()]) for v in F.vertices]
    A = np.stack(cols, axis=1)
    b = np.concatenate([M.real.ravel(), M.imag.ravel()])
    c, _ = nnls(A, b)
    resid = M - sum(ci * v for ci, v in zip(c, F.vertices))
    n = np.max(np.abs(resid))
    return resid / n if n > 0 else resid


def _family_component(F: FreeSetSpec, D: np.ndarray) -> np.ndarray:
    """Operator C with <C, σ> = <D, σ> on every free σ (affine theories)."""
    if F.theory == "incoherent":
        return np.diag(np.real(np.diag(D))).astype(complex)
    if F.theory == "real":
        return (D + D.conj()) / 2
    if F.theory == "single":
        c = float(np.real(np.trace(F.sigma0.conj().T @ D)))
        return c * np.eye(F.dim, dtype=complex)
    raise ConfigError(f"theory {F.theory!r} has no affine equality family")


def _generators(F: FreeSetSpec):
    """Finite generator list of the free set, when one exists."""
    if F.theory == "single":
        return [("the free state", F.sigma0)]
    if F.theory == "polytope":
        return [(f"vertex {i}", v) for i, v in enumerate(F.vertices)]
    return None


# ---------------------------------------------------------------------------
# verification


def _dual_check(label, F, D, two_sided, opts):
    v = F.dual_cone_violation(D, opts)
    if two_sided:
        v = max(v, F.dual_cone_violation(-D, opts))
    direction = None
    if v > FREENESS_TOL:
        direction = _extreme_overlap(F, D, "min", opts)[1]
    return FreenessCheck(label, float(max(v, 0.0)), direction)


def _cone_check(label, F, X):
    v = F.cone_violation(X)
    direction = _cone_offender(F, X) if v > FREENESS_TOL else None
    return FreenessCheck(label, float(max(v, 0.0)), direction)


def _state_check(label, F, X):
    v = max(F.cone_violation(X), abs(float(np.real(np.trace(X))) - 1.0))
    direction = _cone_offender(F, X) if v > FREENESS_TOL else None
    return FreenessCheck(label, float(max(v, 0.0)), direction)


def _distill_checks(inst, F_in, F_out, opts):
    eff = inst.effects
    if len(eff) == 1:
        # unbounded-cover branch: the measurement must annihilate free inputs
        return [_dual_check("measurement annihilates free inputs", F_in,
                            -eff[0][0].mat, False, opts)]
    t = float(inst.meta["t"])
    affine = inst.meta.get("mode") == "affine"
    (M1, P1), (M2, P2) = eff[0], eff[1]
    D = (M1.mat + M2.mat) / t - M1.mat
    checks = [_dual_check("measurement-side witness family", F_in, D, affine, opts)]
    cover = (P1.mat + (t - 1.0) * P2.mat) / t
    checks.append(_state_check("reconstructed free cover", F_out, cover))
    if affine:
        checks.append(FreenessCheck("tail preparation positive",
                                    max(0.0, -_min_eig(P2.mat))))
    else:
        checks.append(_cone_check("tail preparation in the free cone", F_out, P2.mat))
    return checks


def _convert_checks(inst, F_in, F_out, opts):
    eff = inst.effects
    meta = inst.meta
    affine = meta.get("mode") == "affine"
    if len(eff) == 1:
        # degenerate branch: the single prepared operator must itself be free
        return [_state_check("degenerate branch prepares a free state",
                             F_out, eff[0][1].mat)]
    if meta["case"] == "i":
        tr1 = float(meta["lam"]) - float(meta["k"])
        tr2 = float(meta["k"]) - 1.0 / float(meta["mu"])
    else:
        tr1 = float(meta["lamp"]) - 1.0
        tr2 = 1.0
    (M1, P1), (M2, P2) = eff[0], eff[1]
    D = M1.mat / tr1 - M2.mat / tr2
    checks = [_dual_check("witness-pair ordering on free states", F_in, D, affine, opts)]
    cover = (tr1 * P1.mat + tr2 * P2.mat) / (tr1 + tr2)
    checks.append(_state_check("reconstructed free cover", F_out, cover))
    if affine:
        checks.append(FreenessCheck("slack preparation positive",
                                    max(0.0, -_min_eig(P1.mat))))
    else:
        checks.append(_cone_check("slack preparation in the free cone", F_out, P1.mat))
    return checks


def verify_free(instrument: MeasurePrepareMap, F_in: FreeSetSpec,
                F_out: FreeSetSpec | None = None,
                opts: SolveOptions | None = None) -> FreenessCertificate:
    """Certify that the instrument maps the free cone into the free cone.

    Structural arguments are used throughout: dual-cone membership of the
    measurement-side witness combination plus primal-cone membership of the
    prepared side, following how the map was assembled (recorded in its
    ``meta``).  On finitely generated input theories the images of all
    generators are additionally checked directly, which by itself is a
    complete criterion there.  A failing certificate reports the worst
    violation and an offending direction; it means the structure could not
    be certified, not that non-freeness was proven.
    """
    F_out = F_out if F_out is not None else F_in
    if instrument.in_dim != F_in.dim or instrument.out_dim != F_out.dim:
        raise DimensionError("instrument dimensions do not match the theories")
    pattern = instrument.meta.get("pattern")
    checks: list[FreenessCheck] = []
    if instrument.effects:
        if pattern == "distill":
            checks += _distill_checks(instrument, F_in, F_out, opts)
        elif pattern == "convert":
            checks += _convert_checks(instrument, F_in, F_out, opts)
        elif pattern == "kernel":
            checks.append(_dual_check("measurement annihilates free inputs", F_in,
                                      -instrument.effects[0][0].mat, False, opts))
        else:  # "prepare" or unannotated: certify every prepared operator
            for i, (_, p) in enumerate(instrument.effects):
                checks.append(_cone_check(f"prepared operator {i} in the free cone",
                                          F_out, p.mat))
    gens = _generators(F_in)
    if gens is not None:
        for label, sig in gens:
            out_op = instrument.evaluate(sig)
            v = F_out.cone_violation(out_op)
            checks.append(FreenessCheck(
                f"image of {label}", float(max(v, 0.0)),
                sig if v > FREENESS_TOL else None))
    method = GENERATOR_CHECK if gens is not None else DUAL_CONE_WITNESS
    worst = max((c.violation for c in checks), default=0.0)
    return FreenessCertificate(method, tuple(checks), worst)


def sampled_freeness_violation(instrument: MeasurePrepareMap, F_in: FreeSetSpec,
                               F_out: FreeSetSpec | None = None,
                               trials: int = 1000, seed: int = 0) -> float:
    """Smoke test only: worst cone violation over random free inputs.

    Sampling can refute freeness but never certify it; certification goes
    through verify_free.
    """
    F_out = F_out if F_out is not None else F_in
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        sig = F_in.random_free_state(rng)
        worst = max(worst, F_out.cone_violation(instrument.evaluate(sig)))
    return worst


# ---------------------------------------------------------------------------
# application


def apply_map(instrument: MeasurePrepareMap, rho):
    """Run the instrument on a state: (success probability, conditional output).

    The output is None when the success probability is numerically zero.
    Round-off from solved effects is scrubbed by clipping eigenvalues at
    zero; anything beyond round-off raises.
    """
    R = _as_mat(rho, instrument.in_dim)
    out = instrument.evaluate(R)
    p = float(np.real(np.trace(out)))
    if p <= 1e-12:
        return max(p, 0.0), None
    cond = _herm(out / p)
    vals, vecs = np.linalg.eigh(cond)
    if vals[0] < -1e-7 * max(1.0, vals[-1]):
        raise DomainError(
            f"conditional output has eigenvalue {vals[0]:.3e}; the instrument "
            "is not a valid operation on this input"
        )
    clipped = vecs @ np.diag(np.clip(vals, 0.0, None)) @ vecs.conj().T
    clipped /= float(np.real(np.trace(clipped)))
    return p, state(clipped)


# ---------------------------------------------------------------------------
# builders


def build_distillation_map(W, Z, phi, F: FreeSetSpec, t: float,
                           F_out: FreeSetSpec | None = None,
                           opts: SolveOptions | None = None) -> MeasurePrepareMap:
    """Instrument realising a trade-off-program optimizer pair.

    Given (W, Z) feasible for the probability/error programs at cover scale
    t, prepares the target on the W-weighted branch and a free-cover tail on
    the rest: applying the result to rho succeeds with probability <Z, rho>
    and hits the target with conditional fidelity <W, rho>/<Z, rho>.  The
    t = inf branch prepares the target alone.
    """
    F_out = F_out if F_out is not None else F
    Wm = _herm(_as_mat(W, F.dim))
    Zm = _herm(_as_mat(Z, F.dim))
    ph = _as_mat(phi, F_out.dim)
    QuantumState(HermitianOperator(ph))  # validates the target
    t = float(t)
    if not math.isinf(t) and t <= 1.0 + 1e-12:
        raise DomainError("the prepared-tail construction needs a cover scale above one")
    chain = (("W", Wm), ("Z-W", Zm - Wm), ("I-Z", np.eye(F.dim) - Zm))
    for name, M in chain:
        lo = _min_eig(M)
        if lo < -FREENESS_TOL:
            raise CertificateError(f"measurement chain broken at {name}: min eig {lo:.3e}")
    if math.isinf(t):
        mp = _instrument([(Wm, ph)], F.dim, F_out.dim, {"pattern": "distill", "t": t})
    else:
        cov = standard_robustness(ph, F_out, opts)
        if cov.trouble:
            raise SolverError(f"free-cover program unresolved: {cov.status}")
        if cov.finite and t >= cov.value * (1 - 1e-9) and cov.sigma is not None:
            mode, cover = "cone", cov.sigma
        elif F_out.is_affine:
            gen = generalized_robustness(ph, F_out, opts)
            if gen.trouble:
                raise SolverError(f"free-cover program unresolved: {gen.status}")
            if not gen.finite or t < gen.value * (1 - 1e-9) or gen.sigma is None:
                raise DomainError(
                    f"no free state covers the target at scale {t:g} "
                    f"(smallest feasible scale {gen.value:g})"
                )
            mode, cover = "affine", gen.sigma
        else:
            need = f"{cov.value:g}" if cov.finite else "inf"
            raise DomainError(
                f"no free-cone cover of the target at scale {t:g} "
                f"(needs at least {need})"
            )
        tail = (t * cover - ph) / (t - 1.0)
        mp = _instrument([(Wm, ph), (Zm - Wm, tail)], F.dim, F_out.dim,
                         {"pattern": "distill", "t": t, "mode": mode})
    cert = verify_free(mp, F, F_out, opts)
    if not cert.passed:
        w = cert.worst
        raise CertificateError(
            f"optimizer pair fails freeness: {w.label} violated by {w.violation:.3e}"
        )
    return mp


def _reciprocal_witnesses(Rm: np.ndarray, F: FreeSetSpec, family: str,
                          opts: SolveOptions | None):
    """Witness pair (A, B) with <A, rho> -> 0, <B, rho> = 1, ordered on F.

    Solves the reciprocal form of the projective measure directly; diverging
    optimizer norms mean the infimum is not attained and only asymptotic
    protocols exist.
    """
    a = Var("recA", F.dim, F.bipartition)
    b = Var("recB", F.dim, F.bipartition)
    cons = [
        psd(a.expr(), name="rec_a"),
        psd(b.expr(), name="rec_b"),
        eq0(inner(Rm, b) - const_expr(np.ones((1, 1))), name="rec_unit"),
    ]
    D = a.expr() - b.expr()
    if family == "affine":
        cons += F.affine_hull_constraints(D, D, math.inf)
    else:
        cons += F.dual_cone_constraints(D)
    out = solver.solve(ConicProblem(inner(Rm, a), "min", cons), opts)
    if out.status is not Status.Optimal:
        return AsymptoticFlag(
            f"witness program ended {out.status.name}; treating the conversion "
            "as asymptotic-only"
        )
    if out.value > 1e-6:
        raise SolverError(
            f"reciprocal witness value {out.value:.3e} should vanish for an "
            "input of certified infinite projective robustness"
        )
    A = _herm(np.asarray(out.primal[a.name]))
    B = _herm(np.asarray(out.primal[b.name]))
    norm = max(_sup_norm(A), _sup_norm(B))
    if norm > DIVERGENT_NORM:
        return AsymptoticFlag("witness norms diverge; only vanishing-probability "
                              "protocols exist", norm)
    scale = float(np.real(np.trace(B.conj().T @ Rm)))
    if scale <= 0:
        raise SolverError("witness normalisation collapsed")
    return A / scale, B / scale


def _case_one(Rm, Pm, F, mode, mv_in, mv_out, opts):
    """Explicit conversion when the input's projective measure dominates."""
    A, B = mv_in.dual_A, mv_in.dual_B
    if A is None or B is None:
        raise SolverError("projective-robustness duals unavailable")
    A, B = _herm(np.asarray(A)), _herm(np.asarray(B))
    nb = float(np.real(np.trace(B.conj().T @ Rm)))
    if nb <= 0:
        raise SolverError("witness normalisation collapsed")
    A, B = A / nb, B / nb
    norm = max(_sup_norm(A), _sup_norm(B))
    if norm > DIVERGENT_NORM:
        return AsymptoticFlag("witness norms diverge; only vanishing-probability "
                              "protocols exist", norm)
    if mode == "affine":
        # tighten the ordering into the exact equality family
        A = A + _family_component(F, B - A)
    lam, mu = mv_in.lam, mv_in.mu
    lamp, mup = mv_out.lam, mv_out.mu
    sigp = mv_out.sigma
    if None in (lam, mu, lamp, mup) or sigp is None:
        raise SolverError("projective-measure optimizers unavailable")
    # align the target's two-sided cover with the input scalars
    if lam >= lamp * (1 - 1e-12) and mu >= mup * (1 - 1e-12):
        k = 1.0
    elif mu < mup:
        k = lam / lamp
    else:
        k = mup / mu
    T1 = lam * sigp - k * Pm
    T2 = k * Pm - sigp / mu
    drain = (lam - k) * B + (k - 1.0 / mu) * A
    scale = max(_max_eig(drain), 1.0)
    meta = {"pattern": "convert", "case": "i", "lam": lam, "mu": mu, "k": k,
            "mode": "affine" if mode == "affine" else "cone"}
    return _instrument([(B / scale, T1), (A / scale, T2)], F.dim, F.dim, meta)


def build_conversion_map(rho, rho_prime, F: FreeSetSpec, mode: str | None = None,
                         opts: SolveOptions | None = None):
    """Free instrument turning rho into rho_prime with nonzero probability.

    Follows the witness-pair constructions: when the input's projective
    robustness is finite and dominates the target's, the attained duals give
    an explicit map; for a certified-infinite input the reciprocal witnesses
    (or their closed form, when no free state fits inside the input support)
    are used; an input whose support sticks out of every free state is
    handled by a kernel projector.  Returns an AsymptoticFlag instead of a
    map when the witnesses provably diverge, and raises NoGoError when the
    projective measure certifies impossibility.
    """
    if mode is None:
        mode = "affine" if F.is_affine else "general"
    if mode not in ("affine", "general"):
        raise ConfigError(f"unknown conversion mode {mode!r}")
    if mode == "affine" and not F.is_affine:
        raise ConfigError(
            f"the equality-family argument needs an affine theory, not {F.theory!r}"
        )
    Rm = _as_mat(rho, F.dim)
    Pm = _as_mat(rho_prime, F.dim)
    QuantumState(HermitianOperator(Rm))
    QuantumState(HermitianOperator(Pm))

    if F.cone_violation(Pm) <= 1e-9:
        # free target: prepare it deterministically
        return _instrument([(np.eye(F.dim), Pm)], F.dim, F.dim, {"pattern": "prepare"})

    omega_in = projective_robustness(Rm, F, opts)
    if omega_in.trouble:
        raise SolverError(f"projective robustness of the input unresolved: {omega_in.status}")

    if omega_in.finite:
        if omega_in.value <= 1.0 + 1e-9:
            omega_out = projective_robustness(Pm, F, opts)
            raise NoGoError(
                "a free input cannot reach a resourceful target",
                witness={"omega_in": omega_in.value, "omega_out": omega_out.value},
            )
        mv_out = (projective_robustness(Pm, F, opts) if mode == "affine"
                  else free_projective_robustness(Pm, F, opts))
        if mv_out.trouble:
            raise SolverError(f"projective measure of the target unresolved: {mv_out.status}")
        if mv_out.finite and omega_in.value >= mv_out.value * (1 - 1e-9):
            built = _case_one(Rm, Pm, F, mode, omega_in, mv_out, opts)
        else:
            if mode == "affine":
                plain = mv_out
            else:
                plain = projective_robustness(Pm, F, opts)
            if not plain.finite or omega_in.value < plain.value * (1 - 1e-9):
                out_str = f"{plain.value:.6g}" if plain.finite else "inf"
                raise NoGoError(
                    f"projective robustness would increase: {omega_in.value:.6g} "
                    f"< {out_str}",
                    witness={"omega_in": omega_in.value,
                             "omega_out": plain.value if plain.finite else math.inf},
                )
            raise DomainError(
                "conversion unresolved: the input's projective robustness sits "
                "between the target's plain and free-cone variants, where no "
                "certificate is available either way"
            )
    else:
        gen_in = generalized_robustness(Rm, F, opts)
        if gen_in.trouble:
            raise SolverError(f"robustness of the input unresolved: {gen_in.status}")
        if not gen_in.finite:
            # input support sticks out of every free state
            K = _free_kernel(F)
            if K.shape[1] == 0:
                raise SolverError(
                    "certified infinite robustness but the theory has no joint "
                    "free kernel; cannot assemble the projector branch"
                )
            Pi = K @ K.conj().T
            if float(np.real(np.trace(Pi @ Rm))) <= 1e-12:
                raise SolverError("kernel projector misses the input support")
            built = _instrument([(Pi, Pm)], F.dim, F.dim, {"pattern": "kernel"})
        else:
            if mode == "general":
                cov = standard_robustness(Pm, F, opts)
                family = "cone"
            else:
                cov = generalized_robustness(Pm, F, opts)
                family = "affine"
            if cov.trouble:
                raise SolverError(f"target cover program unresolved: {cov.status}")
            if not cov.finite or cov.sigma is None:
                raise DomainError(
                    "the target admits no finite free cover; no constructive "
                    "branch applies"
                )
            lamp = max(cov.value, 1.0)
            sigp = cov.sigma
            pair = None
            if mode == "general":
                zeta = support_overlap(Rm, F, opts=opts)
                if zeta < 1.0 - 1e-9:
                    # closed form: nothing free fits inside the input support
                    Pi = support_projector(HermitianOperator(Rm)).mat
                    pair = (zeta / (1.0 - zeta) * (np.eye(F.dim) - Pi), Pi)
            if pair is None:
                pair = _reciprocal_witnesses(Rm, F, family, opts)
                if isinstance(pair, AsymptoticFlag):
                    return pair
            A, B = pair
            if family == "affine":
                A = A - _family_component(F, A - B)
            T1 = lamp * sigp - Pm
            drain = (lamp - 1.0) * A + B
            scale = max(_max_eig(drain), 1.0)
            meta = {"pattern": "convert", "case": "ii", "lamp": lamp, "mode": family}
            built = _instrument([(A / scale, T1), (B / scale, Pm)], F.dim, F.dim, meta)

    if isinstance(built, AsymptoticFlag):
        return built
    cert = verify_free(built, F, F, opts)
    if not cert.passed:
        w = cert.worst
        raise CertificateError(
            f"assembled conversion fails freeness: {w.label} violated by "
            f"{w.violation:.3e}"
        )
    return built


# ---------------------------------------------------------------------------
# the decision procedure


def _strictly_less(a: float, b: float, rel: float = 1e-9) -> bool:
    if math.isinf(a):
        return False
    if math.isinf(b):
        return True
    return a < b * (1 - rel) - 1e-12


def _attainment_flavor(Rm, F, theory_class, omega_in, opts) -> str:
    """Whether the guaranteed conversion comes with an explicit instrument."""
    if omega_in.finite:
        if _min_eig(Rm) > 1e-9:
            return YES_WITH_MAP  # full-rank input keeps the witnesses bounded
        if omega_in.dual_A is not None and omega_in.dual_B is not None:
            norm = max(_sup_norm(np.asarray(omega_in.dual_A)),
                       _sup_norm(np.asarray(omega_in.dual_B)))
            if norm <= DIVERGENT_NORM:
                return YES_WITH_MAP
        return YES_ASYMPTOTIC
    gen = generalized_robustness(Rm, F, opts)
    if not gen.finite and _free_kernel(F).shape[1] > 0:
        return YES_WITH_MAP
    if support_overlap(Rm, F, opts=opts) < 1.0 - 1e-9:
        return YES_WITH_MAP
    family = "affine" if theory_class == "affine" else "cone"
    pair = _reciprocal_witnesses(Rm, F, family, opts)
    return YES_ASYMPTOTIC if isinstance(pair, AsymptoticFlag) else YES_WITH_MAP


def convertibility_decision(rho, rho_prime, F: FreeSetSpec,
                            theory_class: str | None = None,
                            opts: SolveOptions | None = None) -> ConversionVerdict:
    """Classify the convertibility of rho into rho_prime under free instruments.

    No whenever either projective measure strictly increases; Yes when the
    input's plain projective robustness dominates the target's (its free-cone
    variant, for non-affine theories), with the flavor recording whether an
    explicit instrument is available or only an asymptotic protocol;
    Undecided in the non-affine gap between the target's two variants, where
    no certificate exists either way.
    """
    if theory_class is None:
        theory_class = "affine" if F.is_affine else "general"
    if theory_class not in ("affine", "general"):
        raise ConfigError(f"unknown theory class {theory_class!r}")
    if theory_class == "affine" and not F.is_affine:
        raise ConfigError(f"theory {F.theory!r} is not affine")
    Rm = _as_mat(rho, F.dim)
    Pm = _as_mat(rho_prime, F.dim)

    omega_in = projective_robustness(Rm, F, opts)
    omega_out = projective_robustness(Pm, F, opts)
    fomega_in = free_projective_robustness(Rm, F, opts)
    fomega_out = free_projective_robustness(Pm, F, opts)
    for tag, mv in (("omega_in", omega_in), ("omega_out", omega_out),
                    ("free_omega_in", fomega_in), ("free_omega_out", fomega_out)):
        if mv.trouble:
            raise SolverError(f"{tag} unresolved: {mv.status}")
    evidence = {
        "omega_in": omega_in.value,
        "omega_out": omega_out.value,
        "free_omega_in": fomega_in.value,
        "free_omega_out": fomega_out.value,
    }

    if omega_out.value <= 1.0 + 1e-9:
        # free target: deterministic preparation
        return ConversionVerdict(YES_WITH_MAP, evidence)
    if _strictly_less(omega_in.value, omega_out.value):
        return ConversionVerdict(NO, evidence)
    if _strictly_less(fomega_in.value, fomega_out.value):
        return ConversionVerdict(NO, evidence)

    if not omega_in.finite and not omega_out.finite:
        flavor = _attainment_flavor(Rm, F, theory_class, omega_in, opts)
        return ConversionVerdict(flavor, evidence)

    if theory_class == "affine":
        # the plain measure is decisive: not-No means dominance here
        flavor = _attainment_flavor(Rm, F, theory_class, omega_in, opts)
        return ConversionVerdict(flavor, evidence)

    if omega_in.finite:
        if fomega_out.finite and omega_in.value >= fomega_out.value * (1 - 1e-9):
            flavor = _attainment_flavor(Rm, F, theory_class, omega_in, opts)
            return ConversionVerdict(flavor, evidence)
        return ConversionVerdict(UNDECIDED, evidence)
    cover = standard_robustness(Pm, F, opts)
    evidence["target_cover"] = cover.value
    if cover.finite:
        flavor = _attainment_flavor(Rm, F, theory_class, omega_in, opts)
        return ConversionVerdict(flavor, evidence)
    gen_in = generalized_robustness(Rm, F, opts)
    evidence["input_robustness"] = gen_in.value
    if not gen_in.finite:
        return ConversionVerdict(YES_WITH_MAP, evidence)
    return ConversionVerdict(UNDECIDED, evidence)
