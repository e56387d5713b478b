"""One-shot distillation: closed-form error floors, achievability constructions,
and the probability/error trade-off programs with their affine variants."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import solver
from .errors import (
    DimensionError,
    DomainError,
    NotGoldenError,
    SolverError,
    TheoremViolationError,
)
from .free_sets import FreeSetSpec
from .monotones import (
    MonotoneValue,
    generalized_robustness,
    projective_robustness,
    pure_overlap,
    standard_robustness,
    support_overlap,
)
from .operators import HermitianOperator, QuantumState, hermitian, state
from .solver import (
    ConicProblem,
    Expr,
    SolveOptions,
    Status,
    Var,
    const_expr,
    eq0,
    inner,
    psd,
)

CHAIN_TOL = 1e-8   # eigenvalue slack tolerated on 0 ≤ W ≤ Z ≤ I
EQ_TOL = 1e-8      # slack on the program's scalar equality
GOLDEN_TOL = 1e-6  # numeric verification of maximal-resource identities
_RANK_TOL = 1e-9


def _mat(x) -> np.ndarray:
    if isinstance(x, QuantumState):
        return x.mat
    if isinstance(x, HermitianOperator):
        return x.mat
    return np.asarray(x, dtype=complex)


def _state_mat(rho, F: FreeSetSpec) -> np.ndarray:
    q = rho if isinstance(rho, QuantumState) else state(_mat(rho), F.bipartition)
    if q.dim != F.dim:
        raise DimensionError(f"state dimension {q.dim} does not match theory dimension {F.dim}")
    return q.mat


def _value_of(mv: MonotoneValue, what: str) -> float:
    if mv.trouble:
        raise SolverError(f"{what} did not solve cleanly")
    return mv.value


def _check_mode(mode: str, allowed: tuple[str, ...]) -> None:
    if mode not in allowed:
        raise DomainError(f"mode {mode!r} not in {allowed}")


def _clamp01(x: float) -> float:
    return min(max(float(x), 0.0), 1.0)


# ---------------------------------------------------------------------------
# closed-form floors


def _error_floor(overlap: float, omega: float) -> float:
    # (f/(1-f)·omega + 1)^(-1); a vanishing overlap against an unbounded
    # omega is read as an unbounded product, i.e. a floor of zero
    if math.isinf(omega):
        return 0.0
    f = _clamp01(overlap)
    return 1.0 / (f / (1.0 - f) * omega + 1.0)


def error_lower_bound(rho, phi, F: FreeSetSpec, opts: SolveOptions | None = None) -> float:
    """Floor on the distillation error towards a pure target, any free protocol.

    Valid for every operation that cannot create the resource; an unbounded
    projective robustness of the input collapses the floor to zero.
    """
    f = pure_overlap(phi, F, opts)
    if f >= 1.0 - 1e-7:
        raise DomainError("target overlaps the free set completely; the floor is vacuous")
    omega = _value_of(projective_robustness(rho, F, opts), "projective robustness")
    return _error_floor(f, omega)


def achievable_error(rho, phi, F: FreeSetSpec, mode: str = "general",
                     opts: SolveOptions | None = None) -> float:
    """Error guaranteed reachable by the measure-and-prepare construction.

    ``general`` rates the target by its free-cone robustness; ``affine``
    uses the global robustness, which suffices whenever the free set is
    affine-closed.  Returns 0 for inputs with unbounded projective
    robustness (an exact protocol exists).
    """
    _check_mode(mode, ("general", "affine"))
    omega = _value_of(projective_robustness(rho, F, opts), "projective robustness")
    if math.isinf(omega):
        return 0.0
    lam = _target_scale(phi, F, mode, opts)
    return 1.0 / (omega / (lam - 1.0) + 1.0)


def _target_scale(phi, F: FreeSetSpec, mode: str, opts) -> float:
    if mode == "affine":
        lam = _value_of(generalized_robustness(phi, F, opts), "target robustness")
    else:
        lam = _value_of(standard_robustness(phi, F, opts), "free-cone target robustness")
        if math.isinf(lam):
            if not F.is_affine:
                raise DomainError(
                    "free-cone robustness of the target is infinite; the general "
                    "construction does not apply here"
                )
            warnings.warn(
                "free-cone robustness of the target is infinite; falling back to "
                "the affine construction",
                stacklevel=3,
            )
            lam = _value_of(generalized_robustness(phi, F, opts), "target robustness")
    if math.isinf(lam):
        raise DomainError("target robustness is infinite; no finite construction exists")
    if lam <= 1.0 + 1e-9:
        raise DomainError("target is free up to tolerance; nothing to distill")
    return lam


def _golden_overlap_identity(phim, F: FreeSetSpec, opts) -> tuple[float, float]:
    f = _clamp01(pure_overlap(phim, F, opts))
    r_glob = _value_of(generalized_robustness(phim, F, opts), "target robustness")
    if not math.isfinite(r_glob) or abs(r_glob * f - 1.0) > GOLDEN_TOL:
        raise NotGoldenError(
            "robustness times best free overlap deviates from 1 for this target",
            values=(r_glob, f),
        )
    return f, r_glob


def _golden_identities(phim, F: FreeSetSpec, opts) -> tuple[float, float, float]:
    f, r_glob = _golden_overlap_identity(phim, F, opts)
    r_free = r_glob
    if not F.is_affine:
        r_free = _value_of(standard_robustness(phim, F, opts), "free-cone target robustness")
        if not math.isfinite(r_free) or abs(r_free - r_glob) > GOLDEN_TOL * max(1.0, r_glob):
            raise NotGoldenError(
                "free-cone and global robustness of the target disagree",
                values=(r_glob, r_free),
            )
    return f, r_glob, r_free


def exact_error_golden(rho, phim, F: FreeSetSpec, opts: SolveOptions | None = None) -> float:
    """Exact least distillation error for a maximally resourceful pure target.

    The maximality identities are re-verified numerically (within 1e-6)
    before the closed form is trusted; NotGoldenError carries the two
    offending values otherwise.
    """
    f, _, _ = _golden_identities(phim, F, opts)
    omega = _value_of(projective_robustness(rho, F, opts), "projective robustness")
    return _error_floor(f, omega)


def overhead_bound(rho, phi, F: FreeSetSpec, eps: float,
                   opts: SolveOptions | None = None) -> float:
    """Real-valued floor on the copy count needed to reach error eps.

    Free inputs give +inf; inputs with unbounded projective robustness
    give 0.  Callers round up as needed.
    """
    if not 0.0 < eps < 1.0:
        raise DomainError(f"error parameter eps={eps} outside (0, 1)")
    f = _clamp01(pure_overlap(phi, F, opts))
    if f >= 1.0 - 1e-7:
        raise DomainError("target overlaps the free set completely; no overhead to bound")
    omega = _value_of(projective_robustness(rho, F, opts), "projective robustness")
    if math.isinf(omega):
        return 0.0
    if omega <= 1.0 + 1e-9 or f <= 0.0:
        return math.inf
    return math.log((1.0 - eps) * (1.0 - f) / (eps * f)) / math.log(omega)


class ErrorFloorPair(NamedTuple):
    """Two spectral-flavoured floors on the error, the sharper one first."""

    projective: float
    eigenvalue: float


def eigenvalue_bound(rho, phi, F: FreeSetSpec,
                     opts: SolveOptions | None = None) -> ErrorFloorPair:
    """Floor pair from the projective route and the smallest-eigenvalue route.

    The projective floor (1 - overlap)/omega dominates the plain
    eigenvalue floor lmin·(1 - overlap)/robustness; the dominance is
    asserted on every call.
    """
    f = _clamp01(pure_overlap(phi, F, opts))
    omega = _value_of(projective_robustness(rho, F, opts), "projective robustness")
    rob = _value_of(generalized_robustness(rho, F, opts), "robustness")
    R = _mat(rho)
    lmin = float(np.linalg.eigvalsh((R + R.conj().T) / 2)[0])
    via_proj = 0.0 if math.isinf(omega) else (1.0 - f) / omega
    via_eig = 0.0 if math.isinf(rob) else max(lmin, 0.0) * (1.0 - f) / rob
    if via_proj < via_eig - 1e-9:
        raise TheoremViolationError(
            f"projective floor {via_proj} fell below the eigenvalue floor {via_eig}"
        )
    return ErrorFloorPair(projective=via_proj, eigenvalue=via_eig)


# ---------------------------------------------------------------------------
# smoothed targets and the error-improvement no-go


@dataclass(frozen=True)
class SmoothedTarget:
    """Pure target mixed with its weighted free complement."""

    state: QuantumState
    free_branch: bool
    lam: float
    sigma: np.ndarray


def tau_eps(phi, F: FreeSetSpec, eps: float, mode: str = "general",
            opts: SolveOptions | None = None) -> SmoothedTarget:
    """The target smoothed to error eps along its optimal free cover.

    The output keeps fidelity 1 - eps with the pure target.  Beyond
    eps = (lam - 1)/lam the mixture lands in the free set itself and the
    transformation trivialises; the flag records that branch.
    """
    _check_mode(mode, ("general", "affine"))
    if not 0.0 <= eps <= 1.0:
        raise DomainError(f"error parameter eps={eps} outside [0, 1]")
    P = _mat(phi)
    mv = standard_robustness(phi, F, opts) if mode == "general" else \
        generalized_robustness(phi, F, opts)
    if not mv.finite:
        raise DomainError(
            "free-cone robustness of the target is infinite; select affine mode"
        )
    _value_of(mv, "target robustness")
    lam = mv.lam
    if lam is None or lam <= 1.0 + 1e-9:
        raise DomainError("target is free up to tolerance; nothing to smooth")
    cover = mv.optimizer_sigma  # = lam·sigma, dominating the target in the free cone
    tail = (cover - P) / (lam - 1.0)
    tau = (1.0 - eps) * P + eps * tail
    bp = phi.bipartition if isinstance(phi, QuantumState) else F.bipartition
    return SmoothedTarget(
        state=state(tau, bp),
        free_branch=bool(eps > (lam - 1.0) / lam + 1e-12),
        lam=float(lam),
        sigma=cover / lam,
    )


@dataclass(frozen=True)
class NogoVerdict:
    """Outcome of the error-improvement impossibility test."""

    available: float  # certified cap on the smoothed state's projective robustness
    required: float   # projective robustness needed to reach the smaller error
    solved: float     # solver value for the smoothed state (sanity: ≤ available)
    verdict: str


def isotropic_nogo_check(phi, F: FreeSetSpec, eps: float, eps_prime: float,
                         mode: str = "general",
                         opts: SolveOptions | None = None) -> NogoVerdict:
    """Certify that error eps cannot be pushed down to eps_prime for free.

    Works for maximally resourceful targets (re-verified numerically).  The
    smoothed state's projective robustness is capped in closed form below
    what the smaller error would require, so no free operation closes the gap.
    """
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps={eps} outside (0, 1)")
    if not 0.0 < eps_prime <= eps:
        raise DomainError(f"need 0 < eps_prime <= eps, got {eps_prime}")
    if mode == "general":
        _golden_identities(phi, F, opts)
    else:
        _golden_overlap_identity(phi, F, opts)
    smp = tau_eps(phi, F, eps, mode, opts)
    cap = (1.0 - eps) / eps * (smp.lam - 1.0)
    need = (1.0 - eps_prime) / eps_prime * (smp.lam - 1.0)
    omega_tau = _value_of(projective_robustness(smp.state, F, opts),
                          "projective robustness of the smoothed state")
    if omega_tau > cap * (1.0 + 1e-6) + 1e-8:
        raise TheoremViolationError(
            f"solved projective robustness {omega_tau} exceeds its certified cap {cap}"
        )
    if abs(eps - eps_prime) <= 1e-12:
        verdict = "boundary: achievable by identity"
    else:
        verdict = "impossible"
    return NogoVerdict(available=cap, required=need, solved=omega_tau, verdict=verdict)


# ---------------------------------------------------------------------------
# trade-off programs


_PROGRAMS = frozenset({"HP", "HP_aff", "HP_eps", "HP_eps_aff", "Theta_p", "Theta_p_aff"})


@dataclass(frozen=True)
class TradeoffSolveResult:
    """Solved probability/error trade-off point with its optimizing pair."""

    program: str
    t: float
    value: float
    W: HermitianOperator
    Z: HermitianOperator
    p: float | None = None
    eps: float | None = None
    gap: float = math.nan

    def __post_init__(self):
        if self.program not in _PROGRAMS:
            raise DomainError(f"unknown trade-off program {self.program!r}")
        if not 0.0 <= self.value <= 1.0:
            raise SolverError(f"trade-off value {self.value} outside [0, 1]")
        d = self.W.dim
        chain = (
            ("W", self.W.mat),
            ("Z-W", self.Z.mat - self.W.mat),
            ("I-Z", np.eye(d) - self.Z.mat),
        )
        for name, M in chain:
            lo = float(np.linalg.eigvalsh((M + M.conj().T) / 2)[0])
            if lo < -CHAIN_TOL:
                raise SolverError(f"optimizer chain broken at {name}: min eig {lo:.3e}")


def _support_split(R: np.ndarray, tol: float = _RANK_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Support projector of a state and an isometry onto its kernel."""
    vals, vecs = np.linalg.eigh((R + R.conj().T) / 2)
    cut = tol * max(float(vals[-1]), 0.0)
    keep = vals > cut
    P = vecs[:, keep] @ vecs[:, keep].conj().T
    return P, vecs[:, ~keep]


def _free_kernel(F: FreeSetSpec) -> np.ndarray:
    """Isometry onto the joint kernel of every free state (often empty)."""
    if F.theory in ("ppt", "incoherent", "real"):
        return np.zeros((F.dim, 0))  # the maximally mixed state is free
    if F.theory == "single":
        M = F.sigma0
    else:
        M = sum(F.vertices) / len(F.vertices)
    vals, vecs = np.linalg.eigh((M + M.conj().T) / 2)
    cut = _RANK_TOL * max(float(vals[-1]), 0.0)
    return vecs[:, vals <= cut]


def _conjugated(var: Var, V: np.ndarray) -> Expr:
    """Expression V x V† embedding a small block into the full space."""
    Vc = V.conj().T
    return Expr(V.shape[0], terms=[(var, lambda M, V=V, Vc=Vc: V @ M @ Vc)])


def _blk(x) -> np.ndarray:
    # solved 1x1 blocks come back as bare floats
    return np.atleast_2d(np.asarray(x, dtype=complex))


def _sigma_family(F: FreeSetSpec, Wx: Expr, Zx: Expr, t: float, mode: str):
    """Rows enforcing <W,σ> ≤ (1/t)<Z,σ> — or the equality — on all free σ."""
    if mode == "aff":
        return F.affine_hull_constraints(Wx, Zx, t)
    if math.isinf(t):
        return F.dual_cone_constraints(-Wx)
    return F.dual_cone_constraints(Zx * (1.0 / t) - Wx)


def _validate_t(t) -> float:
    if t is None:
        raise DomainError("trade-off parameter t is required here")
    t = float(t)
    if not t > 0.0:
        raise DomainError(f"trade-off parameter t={t} must be positive")
    return t


def _resolve_t(t, phi, F: FreeSetSpec, mode: str, opts) -> float:
    if t is not None:
        return _validate_t(t)
    if phi is None:
        raise DomainError("need either an explicit t or a target state")
    mv = standard_robustness(phi, F, opts) if mode == "ineq" else \
        generalized_robustness(phi, F, opts)
    return _value_of(mv, "target robustness")


def _direct(program: str, F: FreeSetSpec, t: float, value: float,
            Wm: np.ndarray, Zm: np.ndarray, p: float | None = None,
            eps: float | None = None) -> TradeoffSolveResult:
    return TradeoffSolveResult(
        program=program, t=t, value=_clamp01(value),
        W=hermitian(Wm, F.bipartition), Z=hermitian(Zm, F.bipartition),
        p=p, eps=eps, gap=0.0,
    )


def _finish(program: str, out, R: np.ndarray, F: FreeSetSpec, t: float,
            Wm: np.ndarray, Zm: np.ndarray, p: float | None = None,
            eps: float | None = None) -> TradeoffSolveResult:
    if out.status is not Status.Optimal:
        raise SolverError(f"{program} solve ended {out.status.name}: {out.message or 'no detail'}")
    Wm = (Wm + Wm.conj().T) / 2
    Zm = (Zm + Zm.conj().T) / 2
    wr = float(np.real(np.vdot(Wm, R)))
    zr = float(np.real(np.vdot(Zm, R)))
    if program.startswith("Theta"):
        raw = wr / p
        resid = abs(zr - p)
    elif program.startswith("HP_eps"):
        raw = zr
        resid = abs(wr - (1.0 - eps) * zr)
    else:
        raw = wr
        resid = abs(wr - zr)
    if resid > EQ_TOL:
        raise SolverError(f"{program} equality residual {resid:.3e} exceeds {EQ_TOL}")
    if raw < -CHAIN_TOL or raw > 1.0 + CHAIN_TOL:
        raise SolverError(f"{program} value {raw} strays outside [0, 1]")
    return TradeoffSolveResult(
        program=program, t=t, value=_clamp01(raw),
        W=hermitian(Wm, F.bipartition), Z=hermitian(Zm, F.bipartition),
        p=p, eps=eps, gap=out.gap,
    )


def _solve_hp(rho, F: FreeSetSpec, t, mode: str, program: str,
              eps_field: float | None, opts) -> TradeoffSolveResult:
    R = _state_mat(rho, F)
    t = _validate_t(t) if not (t is not None and math.isinf(t)) else float(t)
    d = F.dim
    if math.isinf(t):
        # with the weight forced off every free state, the best staying
        # measurement is the projector onto the joint free kernel
        VK = _free_kernel(F)
        PK = VK @ VK.conj().T
        val = float(np.real(np.vdot(PK, R)))
        return _direct(program, F, t, val, PK, PK, eps=eps_field)
    Pi, Vp = _support_split(R)
    k = Vp.shape[1]
    if k == 0:
        # full-rank input pins Z to W exactly, collapsing the family
        if (mode == "ineq" and t > 1.0 + 1e-12) or (mode == "aff" and abs(t - 1.0) > 1e-12):
            VK = _free_kernel(F)
            PK = VK @ VK.conj().T
            return _direct(program, F, t, float(np.real(np.vdot(PK, R))), PK, PK, eps=eps_field)
        return _direct(program, F, t, 1.0, np.eye(d), np.eye(d), eps=eps_field)
    w = Var("W", d, F.bipartition)
    dk = Var("Dc", k)
    Wx = w.expr()
    Zx = Wx + _conjugated(dk, Vp)
    cons = [
        psd(Wx, name="w_psd"),
        psd(dk.expr(), name="zw_psd"),
        psd(const_expr(np.eye(d)) - Zx, name="iz_psd"),
    ]
    cons += _sigma_family(F, Wx, Zx, t, mode)
    out = solver.solve(ConicProblem(inner(R, Wx), "max", cons), opts)
    if out.status is not Status.Optimal:
        raise SolverError(f"{program} solve ended {out.status.name}: {out.message or 'no detail'}")
    Wm = np.asarray(out.primal["W"])
    Zm = Wm + Vp @ _blk(out.primal["Dc"]) @ Vp.conj().T
    return _finish(program, out, R, F, t, Wm, Zm, eps=eps_field)


def solve_HP(rho, F: FreeSetSpec, t, opts: SolveOptions | None = None) -> TradeoffSolveResult:
    """Best exact-transformation probability proxy at trade-off parameter t.

    max <W,ρ> over 0 ≤ W ≤ Z ≤ I with <W,ρ> = <Z,ρ> and
    <W,σ> ≤ (1/t)<Z,σ> on every free σ; t = inf degenerates the family
    to <W,σ> ≤ 0.
    """
    return _solve_hp(rho, F, t, "ineq", "HP", None, opts)


def solve_HP_aff(rho, F: FreeSetSpec, t, opts: SolveOptions | None = None) -> TradeoffSolveResult:
    """Affine-variant of solve_HP: the family rows hold with equality."""
    return _solve_hp(rho, F, t, "aff", "HP_aff", None, opts)


def solve_HP_eps(rho, phi, F: FreeSetSpec, eps: float, t=None, mode: str = "ineq",
                 opts: SolveOptions | None = None) -> TradeoffSolveResult:
    """Best probability of landing within error eps of the target.

    max <Z,ρ> over 0 ≤ W ≤ Z ≤ I with <W,ρ> = (1-eps)<Z,ρ> and the free-set
    family at parameter t.  When t is omitted it is taken from the target's
    robustness (free-cone for ``ineq``, global for ``aff``) — the certified
    converse evaluation.
    """
    _check_mode(mode, ("ineq", "aff"))
    if not 0.0 <= eps <= 1.0:
        raise DomainError(f"error parameter eps={eps} outside [0, 1]")
    program = "HP_eps" if mode == "ineq" else "HP_eps_aff"
    R = _state_mat(rho, F)
    t = _resolve_t(t, phi, F, mode, opts)
    d = F.dim
    if eps <= 1e-12:
        res = _solve_hp(rho, F, t, mode, program, 0.0, opts)
        return res
    if eps >= 1.0 - 1e-12:
        # no fidelity demand: the caught weight may escape the support
        Pi, Vp = _support_split(R)
        k = Vp.shape[1]
        if k == 0:
            if mode == "ineq":
                return _direct(program, F, t, 1.0, np.zeros((d, d)), np.eye(d), eps=1.0)
            # equality family with a vanishing weight pushes Z off every free state
            VK = _free_kernel(F)
            PK = VK @ VK.conj().T
            return _direct(program, F, t, float(np.real(np.vdot(PK, R))),
                           np.zeros((d, d)), PK, eps=1.0)
        w = Var("Wc", k)
        z = Var("Z", d, F.bipartition)
        Wx = _conjugated(w, Vp)
        Zx = z.expr()
        cons = [
            psd(w.expr(), name="w_psd"),
            psd(Zx - Wx, name="zw_psd"),
            psd(const_expr(np.eye(d)) - Zx, name="iz_psd"),
        ]
        cons += _sigma_family(F, Wx, Zx, t, mode)
        out = solver.solve(ConicProblem(inner(R, Zx), "max", cons), opts)
        if out.status is not Status.Optimal:
            raise SolverError(f"{program} solve ended {out.status.name}: {out.message or ''}")
        Wm = Vp @ _blk(out.primal["Wc"]) @ Vp.conj().T
        return _finish(program, out, R, F, t, Wm, np.asarray(out.primal["Z"]), eps=1.0)
    if math.isinf(t):
        VK = _free_kernel(F)
        if VK.shape[1] == 0:
            # the weight is pinned to zero, and with it the whole probability
            return _direct(program, F, t, 0.0, np.zeros((d, d)), np.zeros((d, d)), eps=eps)
        w = Var("Wk", VK.shape[1])
        Wx = _conjugated(w, VK)
        wpsd = psd(w.expr(), name="w_psd")
        family = []
        extract_w = lambda primal: VK @ _blk(primal["Wk"]) @ VK.conj().T
    else:
        w = Var("W", d, F.bipartition)
        Wx = w.expr()
        wpsd = psd(Wx, name="w_psd")
        family = None
        extract_w = lambda primal: np.asarray(primal["W"])
    z = Var("Z", d, F.bipartition)
    Zx = z.expr()
    cons = [
        wpsd,
        psd(Zx - Wx, name="zw_psd"),
        psd(const_expr(np.eye(d)) - Zx, name="iz_psd"),
        eq0(inner(R, Wx) - inner(R, Zx) * (1.0 - eps), name="fid_mass"),
    ]
    cons += _sigma_family(F, Wx, Zx, t, mode) if family is None else family
    out = solver.solve(ConicProblem(inner(R, Zx), "max", cons), opts)
    if out.status is not Status.Optimal:
        raise SolverError(f"{program} solve ended {out.status.name}: {out.message or ''}")
    return _finish(program, out, R, F, t, extract_w(out.primal),
                   np.asarray(out.primal["Z"]), eps=eps)


def solve_Theta_p(rho, phi, F: FreeSetSpec, p: float, t=None, mode: str = "ineq",
                  opts: SolveOptions | None = None) -> TradeoffSolveResult:
    """Best target fidelity reachable at success probability exactly p.

    max <W,ρ>/p over 0 ≤ W ≤ Z ≤ I with <Z,ρ> = p and the free-set family
    at parameter t.  With t omitted, the target's robustness is used as in
    solve_HP_eps.  Always feasible: (W, Z) = (0, p·I) satisfies everything.
    """
    _check_mode(mode, ("ineq", "aff"))
    if not 0.0 < p <= 1.0 + 1e-12:
        raise DomainError(f"success probability p={p} outside (0, 1]")
    p = min(float(p), 1.0)
    program = "Theta_p" if mode == "ineq" else "Theta_p_aff"
    R = _state_mat(rho, F)
    t = _resolve_t(t, phi, F, mode, opts)
    d = F.dim
    at_top = p >= 1.0 - 1e-12

    if math.isinf(t):
        VK = _free_kernel(F)
        if VK.shape[1] == 0:
            Zm = _support_split(R)[0] if at_top else p * np.eye(d)
            return _direct(program, F, t, 0.0, np.zeros((d, d)), Zm, p=p)
        w = Var("Wk", VK.shape[1])
        Wx = _conjugated(w, VK)
        wpsd = psd(w.expr(), name="w_psd")
        family = []
        extract_w = lambda primal: VK @ _blk(primal["Wk"]) @ VK.conj().T
    else:
        w = Var("W", d, F.bipartition)
        Wx = w.expr()
        wpsd = psd(Wx, name="w_psd")
        family = None
        extract_w = lambda primal: np.asarray(primal["W"])

    cons = [wpsd]
    if at_top:
        # <Z,ρ> = 1 pins Z to the support projector plus a free block on
        # the complement; solving in those coordinates keeps an interior
        Pi, Vp = _support_split(R)
        k = Vp.shape[1]
        if k:
            zt = Var("Zc", k)
            Zx = const_expr(Pi) + _conjugated(zt, Vp)
            cons.append(psd(const_expr(np.eye(k)) - zt.expr(), name="iz_psd"))
            extract_z = lambda primal: Pi + Vp @ _blk(primal["Zc"]) @ Vp.conj().T
        else:
            Zx = const_expr(np.eye(d))
            extract_z = lambda primal: np.eye(d)
        cons.append(psd(Zx - Wx, name="zw_psd"))
    else:
        z = Var("Z", d, F.bipartition)
        Zx = z.expr()
        cons += [
            psd(Zx - Wx, name="zw_psd"),
            psd(const_expr(np.eye(d)) - Zx, name="iz_psd"),
            eq0(inner(R, Zx) - const_expr(np.array([[p]])), name="prob_mass"),
        ]
        extract_z = lambda primal: np.asarray(primal["Z"])
    cons += _sigma_family(F, Wx, Zx, t, mode) if family is None else family
    out = solver.solve(ConicProblem(inner(R, Wx), "max", cons), opts)
    if out.status is not Status.Optimal:
        raise SolverError(f"{program} solve ended {out.status.name}: {out.message or ''}")
    return _finish(program, out, R, F, t, extract_w(out.primal), extract_z(out.primal), p=p)


def probability_sandwich(rho, rho_prime, F: FreeSetSpec, affine: bool = False,
                         opts: SolveOptions | None = None,
                         ) -> tuple[TradeoffSolveResult, TradeoffSolveResult]:
    """Bracket the exact-transformation probability between two solves.

    The upper solve runs at the reciprocal of the target's best support
    overlap, the lower at the target's robustness; the affine flag switches
    both to the equality-family variants.
    """
    if affine:
        from .operators import support_projector

        P = support_projector(hermitian(_mat(rho_prime), F.bipartition)).mat
        v = F.affine_overlap_constant(P)
        if math.isinf(v):
            raise DomainError(
                "support overlap is not constant on the free set; no affine upper bound"
            )
        t_up = math.inf if v <= 1e-12 else 1.0 / min(v, 1.0)
        t_lo = _value_of(generalized_robustness(rho_prime, F, opts), "target robustness")
        upper = solve_HP_aff(rho, F, t_up, opts)
        lower = solve_HP_aff(rho, F, t_lo, opts)
    else:
        v = support_overlap(rho_prime, F, opts=opts)
        t_up = math.inf if v <= 1e-12 else 1.0 / min(v, 1.0)
        t_lo = _value_of(standard_robustness(rho_prime, F, opts), "free-cone target robustness")
        upper = solve_HP(rho, F, t_up, opts)
        lower = solve_HP(rho, F, t_lo, opts)
    if upper.value < lower.value - 1e-7:
        raise TheoremViolationError(
            f"probability bracket inverted: upper {upper.value} < lower {lower.value}"
        )
    return upper, lower


# ---------------------------------------------------------------------------
# assembled report


@dataclass(frozen=True)
class DistillationBoundReport:
    """Closed-form distillation picture for one input/target pair."""

    target: QuantumState
    overlap: float
    omega: float
    lower_error: float
    achievable: float | None
    exact: bool
    floors: ErrorFloorPair
    verdict: str


def distillation_report(rho, phi, F: FreeSetSpec, mode: str = "general",
                        opts: SolveOptions | None = None) -> DistillationBoundReport:
    """Bundle the error floors, achievability, and exactness verdict."""
    phi_state = phi if isinstance(phi, QuantumState) else state(_mat(phi), F.bipartition)
    f = _clamp01(pure_overlap(phi_state, F, opts))
    if f >= 1.0 - 1e-7:
        raise DomainError("target overlaps the free set completely")
    omega = _value_of(projective_robustness(rho, F, opts), "projective robustness")
    lower = _error_floor(f, omega)
    floors = eigenvalue_bound(rho, phi_state, F, opts)
    if lower < floors.projective - 1e-9:
        raise TheoremViolationError(
            f"error floor {lower} fell below its spectral relaxation {floors.projective}"
        )
    try:
        achievable: float | None = achievable_error(rho, phi_state, F, mode, opts)
    except DomainError:
        achievable = None
    try:
        _golden_identities(phi_state, F, opts)
        exact = True
    except NotGoldenError:
        exact = False
    verdict = "exact (maximally resourceful target)" if exact else "bounds only"
    return DistillationBoundReport(
        target=phi_state, overlap=f, omega=omega, lower_error=lower,
        achievable=achievable, exact=exact, floors=floors, verdict=verdict,
    )
