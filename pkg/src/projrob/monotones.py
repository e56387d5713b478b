"""Resource monotones as solved conic programs.

All quantities follow the multiplicative (non-logarithmic) convention, take
values in [0, ∞], and report ∞ through a solver infeasibility certificate
rather than a bare float sentinel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import solver
from .errors import SolverError, TheoremViolationError
from .free_sets import FreeSetSpec
from .operators import HermitianOperator, QuantumState
from .solver import (
    ConicProblem,
    Expr,
    SolveOptions,
    Status,
    Var,
    const_expr,
    eq0,
    ge0,
    inner,
    lift,
    psd,
)


def _mat(x) -> np.ndarray:
    if isinstance(x, (QuantumState, HermitianOperator)):
        return np.asarray(x.mat, dtype=complex)
    return np.asarray(x, dtype=complex)


@dataclass
class MonotoneValue:
    """Extended-real monotone value with optimizers and provenance."""

    value: float
    status: Status
    optimizer_sigma: np.ndarray | None = None
    dual_A: np.ndarray | None = None
    dual_B: np.ndarray | None = None
    certificate: dict | None = None
    resubstitution: float | None = None
    gap: float = math.nan

    @property
    def finite(self) -> bool:
        return math.isfinite(self.value)

    @property
    def trouble(self) -> bool:
        return self.status is Status.NumericalTrouble

    # decomposition σ̃ = λσ of the optimizer, and the upper ratio μ

    @property
    def lam(self) -> float | None:
        if self.optimizer_sigma is None:
            return None
        return float(np.real(np.trace(self.optimizer_sigma)))

    @property
    def sigma(self) -> np.ndarray | None:
        lam = self.lam
        if lam is None or lam <= 0:
            return None
        return self.optimizer_sigma / lam

    @property
    def mu(self) -> float | None:
        lam = self.lam
        if lam is None or lam <= 0 or not self.finite:
            return None
        return self.value / lam


# ---------------------------------------------------------------------------
# max-relative divergence (multiplicative), spectral path


def rmax(rho, sigma, rank_tol: float = 1e-9) -> float:
    """Least λ with ρ ≤ λσ, via eigendecomposition; ∞ on support mismatch."""
    R = _mat(rho)
    S = _mat(sigma)
    rscale = float(np.max(np.abs(R))) if R.size else 0.0
    if rscale <= rank_tol:
        return 0.0
    vals, vecs = np.linalg.eigh((S + S.conj().T) / 2)
    top = float(vals[-1]) if vals.size else 0.0
    if top <= rank_tol:
        return math.inf
    keep = vals > rank_tol * top
    if not np.all(keep):
        perp = vecs[:, ~keep]
        leak = float(np.max(np.abs(perp.conj().T @ R @ perp)))
        if leak > rank_tol * max(1.0, rscale):
            return math.inf
    V = vecs[:, keep]
    d = vals[keep]
    M = (V / np.sqrt(d)).conj().T @ R @ (V / np.sqrt(d))
    lam = float(np.linalg.eigvalsh((M + M.conj().T) / 2)[-1])
    return max(lam, 0.0)


def rmax_sdp(rho, sigma, opts: SolveOptions | None = None) -> float:
    """SDP cross-check of rmax (kept off the hot path)."""
    R, S = _mat(rho), _mat(sigma)
    lam = Var("lam", 1)
    prob = ConicProblem(lam.expr(), "min", [psd(lift(lam, S) - const_expr(R)), ge0(lam.expr())])
    out = solver.solve(prob, opts)
    if out.status is Status.PrimalInfeasible:
        return math.inf
    if out.status is not Status.Optimal:
        return math.nan
    return out.value


def rmax_free(rho, sigma, F: FreeSetSpec, opts: SolveOptions | None = None) -> float:
    """Least λ with λσ − ρ in the free cone; ∞ when no λ works."""
    R, S = _mat(rho), _mat(sigma)
    lam = Var("lam", 1)
    cons = F.primal_cone_constraints(lift(lam, S) - const_expr(R))
    cons.append(ge0(lam.expr()))
    out = solver.solve(ConicProblem(lam.expr(), "min", cons), opts)
    if out.status is Status.PrimalInfeasible:
        return math.inf
    if out.status is not Status.Optimal:
        return math.nan
    return out.value


# ---------------------------------------------------------------------------
# robustness / weight family


def _sigma_var(F: FreeSetSpec, name: str = "sigt") -> Var:
    return Var(name, F.dim, F.bipartition)


def _trace_objective(v: Var):
    return v.expr().trace()


def _run(prob, opts, extract=None):
    """Solve and package a MonotoneValue; infeasible min-programs map to ∞."""
    out = solver.solve(prob, opts)
    mv = MonotoneValue(value=math.nan, status=out.status, gap=out.gap)
    if out.status is Status.Optimal:
        mv.value = out.value
        if extract is not None:
            sig = out.primal.get(extract)
            mv.optimizer_sigma = None if sig is None else np.asarray(sig)
    elif out.status is Status.PrimalInfeasible:
        mv.value = math.inf if prob.sense == "min" else -math.inf
        mv.certificate = out.certificate
    elif out.status is Status.DualInfeasible:
        mv.value = -math.inf if prob.sense == "min" else math.inf
        mv.certificate = out.certificate
    return mv


def _clamp_state_floor(mv: MonotoneValue, R: np.ndarray) -> None:
    # on unit-trace input these programs provably sit at or above 1, so an
    # optimizer undershoot within the gap tolerance is safe to round up
    if mv.status is Status.Optimal and abs(float(np.real(np.trace(R))) - 1.0) <= 1e-9:
        mv.value = max(mv.value, 1.0)


def generalized_robustness(rho, F: FreeSetSpec, opts: SolveOptions | None = None) -> MonotoneValue:
    """min Tr σ̃ over free-cone σ̃ ⪰ ρ."""
    R = _mat(rho)
    s = _sigma_var(F)
    cons = [psd(s.expr() - const_expr(R), name="covers")]
    cons += F.primal_cone_constraints(s.expr())
    prob = ConicProblem(_trace_objective(s), "min", cons)
    mv = _run(prob, opts, extract=s.name)
    if mv.status is Status.Optimal and mv.optimizer_sigma is not None:
        mv.resubstitution = max(
            -_min_eig(mv.optimizer_sigma - R), F.cone_violation(mv.optimizer_sigma), 0.0
        )
    _clamp_state_floor(mv, R)
    return mv


def weight(rho, F: FreeSetSpec, opts: SolveOptions | None = None) -> MonotoneValue:
    """max Tr σ̃ over free-cone σ̃ ⪯ ρ; 0 when nothing free fits underneath.

    The zero case has no interior point, which stalls the interior-point
    kernel; it is resolved by the support-overlap criterion instead (a
    positive weight forces a free state inside the support of rho, i.e. a
    support overlap of exactly 1).
    """
    R = _mat(rho)
    s = _sigma_var(F)
    cons = [psd(const_expr(R) - s.expr(), name="under")]
    cons += F.primal_cone_constraints(s.expr())
    prob = ConicProblem(_trace_objective(s), "max", cons)
    mv = _run(prob, opts, extract=s.name)
    if mv.status is Status.Optimal:
        mv.value = max(mv.value, 0.0)
        if mv.optimizer_sigma is not None:
            mv.resubstitution = max(
                -_min_eig(R - mv.optimizer_sigma), F.cone_violation(mv.optimizer_sigma), 0.0
            )
        return mv
    try:
        vf = support_overlap(R, F, opts=opts)
    except Exception:
        return mv
    if vf <= 1.0 - 1e-7:
        return MonotoneValue(
            value=0.0,
            status=Status.Optimal,
            optimizer_sigma=np.zeros_like(R),
            resubstitution=0.0,
            certificate={"kind": "support_overlap", "overlap": vf},
        )
    return mv


def standard_robustness(rho, F: FreeSetSpec, opts: SolveOptions | None = None) -> MonotoneValue:
    """min Tr σ̃ with both σ̃ − ρ and σ̃ in the free cone; often ∞."""
    R = _mat(rho)
    s = _sigma_var(F)
    cons = F.primal_cone_constraints(s.expr() - const_expr(R))
    cons += F.primal_cone_constraints(s.expr())
    prob = ConicProblem(_trace_objective(s), "min", cons)
    mv = _run(prob, opts, extract=s.name)
    if mv.status is Status.Optimal and mv.optimizer_sigma is not None:
        mv.resubstitution = max(
            F.cone_violation(mv.optimizer_sigma - R), F.cone_violation(mv.optimizer_sigma), 0.0
        )
    _clamp_state_floor(mv, R)
    return mv


def _cone_membership_with_pullbacks(F: FreeSetSpec, expr):
    """Primal-cone constraints on expr plus multiplier pullbacks to operator space.

    The pullbacks reassemble the effective dual witness of the membership
    constraint: summing pull(multiplier) over the emitted blocks yields one
    operator A with <A, y> = Σ_blocks <mult, block(y)> for every y.
    """
    cons = F.primal_cone_constraints(expr)
    th = F.theory
    pulls = []
    if th == "ppt":
        bp = F.bipartition
        pulls = [(0, lambda Z: Z), (1, lambda Z: _pt(Z, bp))]
    elif th == "incoherent":
        # blocks: psd(e), eq0(e - diag e); adjoint of (id - diag) is itself
        pulls = [(0, lambda Z: Z), ("eq", 1, lambda Y: Y - np.diag(np.diag(Y)))]
    elif th == "real":
        pulls = [(0, lambda Z: Z), ("eq", 1, lambda Y: Y - Y.conj())]
    elif th == "single":
        # blocks: eq0(e - lam*sigma0), ge0(lam); e appears only in the equality
        pulls = [("eq", 0, lambda Y: Y)]
    else:  # polytope: e only in the combo equality
        pulls = [("eq", 0, lambda Y: Y)]
    return cons, pulls


def _apply_pullbacks(out, base_idx, pulls):
    # cone multipliers add; equality multipliers subtract (the kernel's
    # stationarity convention puts them on opposite sides)
    acc = None
    for p in pulls:
        if len(p) == 2:
            off, fn = p
            mult = out.dual[base_idx + off]
            sign = 1.0
        else:
            _, off, fn = p
            mult = out.eq_dual[base_idx + off]
            sign = -1.0
        if mult is None or np.isscalar(mult):
            continue
        term = sign * fn(np.asarray(mult))
        acc = term if acc is None else acc + term
    return acc


def _support_isometry(R: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    vals, vecs = np.linalg.eigh((R + R.conj().T) / 2)
    cut = tol * max(float(vals[-1]), 0.0)
    return vecs[:, vals > cut]


_SUPPORT_CUT = 1e-6


def _support_feasibility_constraints(F: FreeSetSpec, V: np.ndarray, floor,
                                     name: str):
    """Constraint list for: σ̃ ∈ cone(F), σ̃ ⪯ VV†, V†σ̃V ⪰ floor."""
    r = V.shape[1]
    Vc = V.conj().T
    s = _sigma_var(F, name)
    compressed = Expr(r, terms=[(s, lambda M, V=V, Vc=Vc: Vc @ M @ V)])
    cons = [
        psd(const_expr(V @ Vc) - s.expr(), name="inside"),
        psd(compressed - floor, name="fills"),
    ]
    cons += F.primal_cone_constraints(s.expr())
    return cons


def _certify_support_deficiency(F: FreeSetSpec, V: np.ndarray,
                                opts) -> dict | None:
    """Decide finiteness by the support route when the sandwich solve stalls.

    The sandwiched programs are finite exactly when some free-cone element
    fills the support of the input.  When nothing does, the sandwich is
    infeasible only asymptotically (the violation vanishes as γ grows), so
    the kernel can never produce a plain Farkas certificate; the bounded
    support program below stays well behaved and decides the question.
    Returns a verified certificate, or None when the route is inconclusive.
    """
    r = V.shape[1]
    t = Var("tsup", 1)
    cons = _support_feasibility_constraints(F, V, lift(t, np.eye(r)), "sup")
    out = solver.solve(ConicProblem(t.expr(), "max", cons), opts)
    if out.status is not Status.Optimal:
        return None
    gap = out.gap if math.isfinite(out.gap) else 0.0
    bound = out.value + max(gap, 0.0)
    if bound >= _SUPPORT_CUT:
        return None  # support is fillable; the stall was ordinary trouble
    # independent confirmation on a second formulation: requiring a support
    # floor well above the bound must be infeasible by a clear margin
    tau = 1e-6
    cons2 = _support_feasibility_constraints(
        F, V, const_expr(tau * np.eye(r)), "sup2")
    try:
        margin, _ = solver.feasibility_margin(cons2, opts)
    except SolverError:
        return None
    if not margin < -tau / 2:
        return None
    return {
        "type": "support-deficiency",
        "support_bound": float(bound),
        "cross_check_floor": tau,
        "cross_check_margin": float(margin),
        "verified": True,
    }


def _embedded(var: Var, V: np.ndarray) -> Expr:
    """Expression V x V† lifting a support-block variable to full dimension."""
    Vc = V.conj().T
    return Expr(V.shape[0], terms=[(var, lambda M, V=V, Vc=Vc: V @ M @ Vc)])


def _expand(block, V: np.ndarray) -> np.ndarray:
    return V @ np.atleast_2d(np.asarray(block, dtype=complex)) @ V.conj().T


def projective_robustness(rho, F: FreeSetSpec, opts: SolveOptions | None = None) -> MonotoneValue:
    """min γ with ρ ⪯ σ̃ ⪯ γρ over free-cone σ̃; ∞ certified when impossible.

    Any feasible σ̃ is pinched between ρ and a multiple of ρ, so its support
    equals the support of ρ.  On rank-deficient input the sandwich is posed
    on that block only — smaller, and it keeps the kernel's infeasibility
    detection working where the full-space formulation stalls.
    """
    R = _mat(rho)
    d = R.shape[0]
    V = _support_isometry(R)
    reduced = V.shape[1] < d
    g = Var("gam", 1)
    if reduced:
        Rv = V.conj().T @ R @ V
        s = Var("sigt", V.shape[1])
        sig_full = _embedded(s, V)
        cons = [
            psd(s.expr() - const_expr(Rv), name="lower"),
            psd(lift(g, Rv) - s.expr(), name="upper"),
        ]
    else:
        s = _sigma_var(F)
        sig_full = s.expr()
        cons = [
            psd(s.expr() - const_expr(R), name="lower"),
            psd(lift(g, R) - s.expr(), name="upper"),
        ]
    cons += F.primal_cone_constraints(sig_full)
    prob = ConicProblem(g.expr(), "min", cons)
    out = solver.solve(prob, opts)
    mv = MonotoneValue(value=math.nan, status=out.status, gap=out.gap)
    if out.status is Status.Optimal:
        mv.value = out.value
        if reduced:
            mv.optimizer_sigma = _expand(out.primal[s.name], V)
            mv.dual_A = _expand(out.dual[0], V)
            mv.dual_B = _expand(out.dual[1], V)
        else:
            mv.optimizer_sigma = np.asarray(out.primal[s.name])
            mv.dual_A = np.asarray(out.dual[0])
            mv.dual_B = np.asarray(out.dual[1])
        mv.resubstitution = max(
            -_min_eig(mv.optimizer_sigma - R),
            -_min_eig(out.value * R - mv.optimizer_sigma),
            F.cone_violation(mv.optimizer_sigma),
            0.0,
        )
        _clamp_state_floor(mv, R)
    elif out.status is Status.PrimalInfeasible:
        mv.value = math.inf
        mv.certificate = out.certificate
    elif out.status is Status.DualInfeasible:
        mv.value = -math.inf
        mv.certificate = out.certificate
    elif out.status is Status.NumericalTrouble:
        cert = _certify_support_deficiency(F, V, opts)
        if cert is not None:
            mv.status = Status.PrimalInfeasible
            mv.value = math.inf
            mv.certificate = cert
    return mv


def free_projective_robustness(rho, F: FreeSetSpec, opts: SolveOptions | None = None) -> MonotoneValue:
    """Variant of the projective measure with the lower ordering in the free cone.

    The same support pinch as the plain measure applies (the free cone sits
    inside the positive operators), so rank-deficient input gets the same
    block reduction of the sandwich.
    """
    R = _mat(rho)
    d = R.shape[0]
    V = _support_isometry(R)
    reduced = V.shape[1] < d
    g = Var("gam", 1)
    if reduced:
        Rv = V.conj().T @ R @ V
        s = Var("sigt", V.shape[1])
        sig_full = _embedded(s, V)
        upper = psd(lift(g, Rv) - s.expr(), name="upper")
    else:
        s = _sigma_var(F)
        sig_full = s.expr()
        upper = psd(lift(g, R) - s.expr(), name="upper")
    lower_cons, pulls = _cone_membership_with_pullbacks(F, sig_full - const_expr(R))
    cons = list(lower_cons)
    upper_idx = len(cons)
    cons.append(upper)
    cons += F.primal_cone_constraints(sig_full)
    prob = ConicProblem(g.expr(), "min", cons)
    out = solver.solve(prob, opts)
    mv = MonotoneValue(value=math.nan, status=out.status, gap=out.gap)
    if out.status is Status.Optimal:
        mv.value = out.value
        raw = out.primal[s.name]
        mv.optimizer_sigma = _expand(raw, V) if reduced else np.asarray(raw)
        mv.dual_A = _apply_pullbacks(out, 0, pulls)
        mult = out.dual[upper_idx]
        if mult is None:
            mv.dual_B = None
        else:
            mv.dual_B = _expand(mult, V) if reduced else np.asarray(mult)
        mv.resubstitution = max(
            F.cone_violation(mv.optimizer_sigma - R),
            -_min_eig(out.value * R - mv.optimizer_sigma),
            F.cone_violation(mv.optimizer_sigma),
            0.0,
        )
        _clamp_state_floor(mv, R)
    elif out.status is Status.PrimalInfeasible:
        mv.value = math.inf
        mv.certificate = out.certificate
    elif out.status is Status.DualInfeasible:
        mv.value = -math.inf
        mv.certificate = out.certificate
    elif out.status is Status.NumericalTrouble:
        # support deficiency forces this variant to infinity as well (the
        # free cone sits inside the positive operators)
        cert = _certify_support_deficiency(F, V, opts)
        if cert is not None:
            mv.status = Status.PrimalInfeasible
            mv.value = math.inf
            mv.certificate = cert
    return mv


# ---------------------------------------------------------------------------
# overlap measures


def pure_overlap(phi, F: FreeSetSpec, opts: SolveOptions | None = None) -> float:
    """Best overlap of a pure target with the free set."""
    return F.max_overlap_with_projector(_mat(phi), opts)


def support_overlap(rho, F: FreeSetSpec, rank_tol: float = 1e-9,
                    opts: SolveOptions | None = None) -> float:
    """Best overlap of the support projector of rho with the free set."""
    from .operators import support_projector

    P = support_projector(HermitianOperator(_mat(rho)), rank_tol)
    return F.max_overlap_with_projector(P.mat, opts)


# ---------------------------------------------------------------------------
# bound chain


def sandwich_bounds(rho, F: FreeSetSpec, opts: SolveOptions | None = None,
                    rel_tol: float = 1e-6) -> dict:
    """Evaluate the two-sided bound chain around the projective measure.

    Returns every member and raises TheoremViolationError if the certified
    ordering fails beyond the stated tolerance (that would indicate a solver
    or extraction bug, not a legitimate numerical outcome).
    """
    R = _mat(rho)
    gen = generalized_robustness(R, F, opts)
    wgt = weight(R, F, opts)
    om = projective_robustness(R, F, opts)

    lam_min = float(np.linalg.eigvalsh((R + R.conj().T) / 2)[0])

    # weights below solver precision are zeros; their optimizers are noise
    w_eff = wgt.value if wgt.value > 1e-7 else 0.0
    lower = _ext_div(gen.value, w_eff)
    upper_eig = _ext_mul(gen.value, math.inf if lam_min <= 1e-12 else 1.0 / lam_min)

    upper_sharp = math.inf
    if gen.finite and gen.sigma is not None:
        upper_sharp = _ext_mul(gen.value, rmax(gen.sigma, R))
    upper_weight = math.inf
    if wgt.status is Status.Optimal and w_eff > 0.0 and wgt.sigma is not None:
        upper_weight = _ext_mul(1.0 / w_eff, rmax(R, wgt.sigma))

    report = {
        "generalized_robustness": gen.value,
        "weight": wgt.value,
        "omega": om.value,
        "lower": lower,
        "upper_sharp": upper_sharp,
        "upper_eig": upper_eig,
        "upper_weight": upper_weight,
        "min_eigenvalue": lam_min,
        "status": om.status,
    }
    checks = [
        ("lower<=omega", lower, om.value),
        ("omega<=upper_sharp", om.value, upper_sharp),
        ("upper_sharp<=upper_eig", upper_sharp, upper_eig),
        ("omega<=upper_weight", om.value, upper_weight),
    ]
    for name, a, b in checks:
        if not _ext_le(a, b, rel_tol):
            raise TheoremViolationError(
                f"bound chain failed at {name}: {a} vs {b} (beyond rel {rel_tol})"
            )
    report["ok"] = True
    return report


def _ext_le(a: float, b: float, rel: float) -> bool:
    if math.isinf(b) or math.isnan(a) or math.isnan(b):
        return True
    if math.isinf(a):
        return False
    return a <= b * (1 + rel) + rel


def _ext_mul(a: float, b: float) -> float:
    if math.isinf(a) or math.isinf(b):
        return math.inf
    return a * b


def _ext_div(a: float, b: float) -> float:
    if b <= 0.0:
        return math.inf
    if math.isinf(a):
        return math.inf
    return a / b


def _min_eig(M) -> float:
    M = np.asarray(M)
    return float(np.linalg.eigvalsh((M + M.conj().T) / 2)[0])


def _pt(M: np.ndarray, bp) -> np.ndarray:
    dA, dB = bp
    return M.reshape(dA, dB, dA, dB).transpose(0, 3, 2, 1).reshape(dA * dB, dA * dB)
