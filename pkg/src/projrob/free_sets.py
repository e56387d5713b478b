"""Machine representations of convex free-state families.

Each theory knows how to express three things to the solver: membership of a
variable in the cone generated by its states, membership in the dual cone,
and the affine-hull equalities.  Analytic membership tests (used when
re-checking certificates and built maps) live here too, deliberately on a
separate code path from the solver-facing constraint emitters.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import nnls

from .errors import ConfigError, DimensionError, SolverError
from .operators import HermitianOperator, QuantumState
from . import solver
from .solver import Constraint, Expr, Var, as_expr, const_expr, eq0, ge0, inner, lift, psd

_fresh = itertools.count()


def _tag(stem: str) -> str:
    return f"{stem}~{next(_fresh)}"


@dataclass(frozen=True)
class FreeSetSpec:
    """A supported resource theory on a fixed-dimension space."""

    theory: str  # 'incoherent' | 'ppt' | 'real' | 'single' | 'polytope'
    dim: int
    bipartition: tuple[int, int] | None = None
    sigma0: np.ndarray | None = None
    vertices: tuple[np.ndarray, ...] | None = None

    # -- constructors ----------------------------------------------------

    @staticmethod
    def incoherent(d: int) -> FreeSetSpec:
        return FreeSetSpec("incoherent", int(d))

    @staticmethod
    def ppt(dA: int, dB: int) -> FreeSetSpec:
        return FreeSetSpec("ppt", int(dA) * int(dB), (int(dA), int(dB)))

    @staticmethod
    def real(d: int) -> FreeSetSpec:
        return FreeSetSpec("real", int(d))

    @staticmethod
    def single_state(sigma0) -> FreeSetSpec:
        s = sigma0.mat if isinstance(sigma0, (QuantumState, HermitianOperator)) else np.asarray(sigma0, dtype=complex)
        QuantumState(HermitianOperator(s))  # validates
        return FreeSetSpec("single", s.shape[0], sigma0=s)

    @staticmethod
    def polytope(vertices) -> FreeSetSpec:
        mats = []
        for v in vertices:
            m = v.mat if isinstance(v, (QuantumState, HermitianOperator)) else np.asarray(v, dtype=complex)
            QuantumState(HermitianOperator(m))  # validates
            mats.append(m)
        if not mats:
            raise ConfigError("polytope free set needs at least one vertex")
        if len(mats) > 4096:
            raise ConfigError(f"polytope free set capped at 4096 vertices, got {len(mats)}")
        d = mats[0].shape[0]
        if any(m.shape[0] != d for m in mats):
            raise DimensionError("polytope vertices have mixed dimensions")
        return FreeSetSpec("polytope", d, vertices=tuple(mats))

    def __post_init__(self):
        if self.theory not in ("incoherent", "ppt", "real", "single", "polytope"):
            raise ConfigError(f"unknown theory {self.theory!r}")
        if self.theory == "ppt":
            if self.bipartition is None:
                raise ConfigError("ppt theory needs a bipartition")
            if int(np.prod(self.bipartition)) != self.dim:
                raise DimensionError(
                    f"bipartition {self.bipartition} does not match dim {self.dim}"
                )

    @property
    def is_affine(self) -> bool:
        """Whether the free set equals its affine hull intersected with states."""
        return self.theory in ("incoherent", "real", "single")

    def _check_dim(self, x):
        e = as_expr(x)
        if e.dim != self.dim:
            raise DimensionError(f"expression dim {e.dim} != theory dim {self.dim}")
        return e

    # -- solver-facing constraint emitters -------------------------------

    def primal_cone_constraints(self, x) -> list[Constraint]:
        """Constraints equivalent to x ∈ cone of free states."""
        e = self._check_dim(x)
        th = self.theory
        if th == "ppt":
            return [psd(e, name="cone_psd"), psd(e.pt(self.bipartition, 1), name="cone_pt")]
        if th == "incoherent":
            return [psd(e, name="cone_psd"), eq0(e - _diag_part(e), name="cone_offdiag")]
        if th == "real":
            return [psd(e, name="cone_psd"), eq0(e - e.conj(), name="cone_imag")]
        if th == "single":
            lam = Var(_tag("ray"), 1)
            return [
                eq0(e - lift(lam, self.sigma0), name="cone_ray"),
                ge0(lam.expr(), name="cone_ray_nonneg"),
            ]
        # polytope
        cs = [Var(_tag("vtx"), 1) for _ in self.vertices]
        combo: Expr | None = None
        for c, v in zip(cs, self.vertices):
            t = lift(c, v)
            combo = t if combo is None else combo + t
        out = [eq0(e - combo, name="cone_combo")]
        out += [ge0(c.expr(), name="cone_coeff") for c in cs]
        return out

    def dual_cone_constraints(self, x) -> list[Constraint]:
        """Constraints equivalent to <x, σ> ≥ 0 for every free σ."""
        e = self._check_dim(x)
        th = self.theory
        if th == "ppt":
            q = Var(_tag("dualq"), self.dim, self.bipartition)
            return [
                psd(q.expr(), name="dual_q"),
                psd(e - q.expr().pt(self.bipartition, 1), name="dual_p"),
            ]
        if th == "incoherent":
            return [
                ge0(inner(_basis_proj(i, self.dim), e), name=f"dual_diag{i}")
                for i in range(self.dim)
            ]
        if th == "real":
            return [psd((e + e.conj()) * 0.5, name="dual_re")]
        if th == "single":
            return [ge0(inner(self.sigma0, e), name="dual_overlap")]
        return [
            ge0(inner(v, e), name=f"dual_vtx{i}") for i, v in enumerate(self.vertices)
        ]

    def affine_hull_constraints(self, W, Z, t: float) -> list[Constraint]:
        """Equalities <W − Z/t, σ> = 0 on all free σ; t = inf drops the Z term."""
        We = self._check_dim(W)
        if np.isinf(t):
            e = We
        else:
            if t <= 0:
                raise SolverError(f"affine hull parameter t={t} must be positive")
            e = We - self._check_dim(Z) * (1.0 / t)
        th = self.theory
        if th == "ppt":
            return [eq0(e, name="aff_full")]
        if th == "incoherent":
            return [
                eq0(inner(_basis_proj(i, self.dim), e), name=f"aff_diag{i}")
                for i in range(self.dim)
            ]
        if th == "real":
            return [eq0((e + e.conj()) * 0.5, name="aff_re")]
        if th == "single":
            return [eq0(inner(self.sigma0, e), name="aff_overlap")]
        return [eq0(inner(v, e), name=f"aff_vtx{i}") for i, v in enumerate(self.vertices)]

    # -- analytic membership (certificate checking) ----------------------

    def cone_violation(self, X) -> float:
        """How far X is from the primal cone (0 means inside, up to round-off)."""
        M = _as_matrix(X, self.dim)
        th = self.theory
        if th == "ppt":
            g = _pt(M, self.bipartition)
            return max(0.0, -_min_eig(M), -_min_eig(g))
        if th == "incoherent":
            off = M - np.diag(np.diag(M))
            return max(0.0, float(np.max(np.abs(off))), -float(np.min(np.real(np.diag(M)))))
        if th == "real":
            return max(0.0, float(np.max(np.abs(M.imag))), -_min_eig(M))
        if th == "single":
            lam = max(0.0, float(np.real(np.trace(self.sigma0.conj().T @ M)))
                      / float(np.real(np.trace(self.sigma0.conj().T @ self.sigma0))))
            return float(np.max(np.abs(M - lam * self.sigma0)))
        # polytope: nonnegative least squares over the vertices
        cols = [np.concatenate([v.real.ravel(), v.imag.ravel()]) for v in self.vertices]
        Amat = np.stack(cols, axis=1)
        bvec = np.concatenate([M.real.ravel(), M.imag.ravel()])
        _, resid = nnls(Amat, bvec)
        return float(resid)

    def contains(self, X, tol: float = 1e-8) -> bool:
        return self.cone_violation(X) <= tol

    def dual_cone_violation(self, X, opts: solver.SolveOptions | None = None) -> float:
        """How far X is from the dual cone; PPT uses a small margin program."""
        M = _as_matrix(X, self.dim)
        th = self.theory
        if th == "incoherent":
            return max(0.0, -float(np.min(np.real(np.diag(M)))))
        if th == "real":
            return max(0.0, -_min_eig((M + M.conj()) / 2))
        if th == "single":
            return max(0.0, -float(np.real(np.trace(self.sigma0.conj().T @ M))))
        if th == "polytope":
            return max(
                0.0,
                -min(float(np.real(np.trace(v.conj().T @ M))) for v in self.vertices),
            )
        # ppt: X = P + Q^Γ with P, Q ⪰ 0 — probe the decomposition margin
        q = Var(_tag("chk"), self.dim, self.bipartition)
        blocks = [
            psd(q.expr(), name="chk_q"),
            psd(const_expr(M) - q.expr().pt(self.bipartition, 1), name="chk_p"),
        ]
        margin, _ = solver.feasibility_margin(blocks, opts)
        return max(0.0, -margin)

    def dual_contains(self, X, tol: float = 1e-8) -> bool:
        return self.dual_cone_violation(X) <= tol

    def affine_overlap_constant(self, P, tol: float = 1e-9) -> float:
        """The constant value of <P, σ> on the free set, or +inf if non-constant."""
        M = _as_matrix(P, self.dim)
        th = self.theory
        if th == "incoherent":
            dvals = np.real(np.diag(M))
            return float(dvals[0]) if np.ptp(dvals) <= tol else np.inf
        if th == "ppt":
            c = float(np.real(np.trace(M))) / self.dim
            return c if np.max(np.abs(M - c * np.eye(self.dim))) <= tol else np.inf
        if th == "real":
            R = (M + M.conj()) / 2
            c = float(np.real(np.trace(R))) / self.dim
            return c if np.max(np.abs(R - c * np.eye(self.dim))) <= tol else np.inf
        if th == "single":
            return float(np.real(np.trace(self.sigma0.conj().T @ M)))
        vals = [float(np.real(np.trace(v.conj().T @ M))) for v in self.vertices]
        return vals[0] if max(vals) - min(vals) <= tol else np.inf

    # -- overlap programs ------------------------------------------------

    def max_overlap_with_projector(self, P, opts: solver.SolveOptions | None = None) -> float:
        """max over free states σ of <P, σ>, solved conically."""
        M = _as_matrix(P, self.dim)
        x = Var(_tag("ov"), self.dim, self.bipartition)
        cons = self.primal_cone_constraints(x)
        cons.append(eq0(x.expr().trace() - const_expr(np.ones((1, 1))), name="ov_trace"))
        prob = solver.ConicProblem(inner(M, x), "max", cons)
        out = solver.solve(prob, opts)
        if out.status is not solver.Status.Optimal:
            raise SolverError(f"overlap program failed: {out.status} {out.message}")
        return float(out.value)

    # -- sampling (smoke tests only; never used for certification) -------

    def random_free_state(self, rng: np.random.Generator) -> np.ndarray:
        th = self.theory
        d = self.dim
        if th == "incoherent":
            p = rng.dirichlet(np.ones(d))
            return np.diag(p).astype(complex)
        if th == "real":
            A = rng.standard_normal((d, d))
            M = A @ A.T
            return (M / np.trace(M)).astype(complex)
        if th == "single":
            return self.sigma0.copy()
        if th == "polytope":
            w = rng.dirichlet(np.ones(len(self.vertices)))
            return sum(wi * v for wi, v in zip(w, self.vertices))
        # ppt: random mixture of product states (always PPT)
        dA, dB = self.bipartition
        k = 2 * d
        out = np.zeros((d, d), dtype=complex)
        w = rng.dirichlet(np.ones(k))
        for i in range(k):
            a = rng.standard_normal(dA) + 1j * rng.standard_normal(dA)
            b = rng.standard_normal(dB) + 1j * rng.standard_normal(dB)
            v = np.kron(a / np.linalg.norm(a), b / np.linalg.norm(b))
            out += w[i] * np.outer(v, v.conj())
        return out

    # -- JSON ------------------------------------------------------------

    def to_json(self) -> dict:
        out: dict = {"theory": self.theory}
        if self.bipartition is not None:
            out["bipartition"] = list(self.bipartition)
        if self.theory in ("incoherent", "real"):
            out["dim"] = self.dim
        if self.sigma0 is not None:
            out["sigma0"] = _mat_json(self.sigma0)
        if self.vertices is not None:
            out["vertices"] = [_mat_json(v) for v in self.vertices]
        return out

    @staticmethod
    def from_json(doc: dict) -> FreeSetSpec:
        try:
            th = doc["theory"]
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"theory spec missing 'theory' field: {exc}") from exc
        if th == "ppt":
            try:
                dA, dB = doc["bipartition"]
            except (KeyError, ValueError, TypeError) as exc:
                raise ConfigError(f"ppt theory needs 'bipartition': {exc}") from exc
            return FreeSetSpec.ppt(dA, dB)
        if th in ("incoherent", "real"):
            if "dim" not in doc:
                raise ConfigError(f"{th} theory needs 'dim'")
            return FreeSetSpec.incoherent(doc["dim"]) if th == "incoherent" else FreeSetSpec.real(doc["dim"])
        if th == "single":
            if "sigma0" not in doc:
                raise ConfigError("single-state theory needs 'sigma0'")
            return FreeSetSpec.single_state(_mat_from_json(doc["sigma0"]))
        if th == "polytope":
            if not doc.get("vertices"):
                raise ConfigError("polytope theory needs 'vertices'")
            return FreeSetSpec.polytope([_mat_from_json(v) for v in doc["vertices"]])
        raise ConfigError(f"unknown theory {th!r}")


# ---------------------------------------------------------------------------


def _diag_part(e: Expr) -> Expr:
    return Expr(
        e.dim,
        np.diag(np.diag(e.const)),
        [(v, _compose_diag(fn)) for v, fn in e.terms],
    )


def _compose_diag(fn):
    return lambda M: np.diag(np.diag(fn(M)))


def _basis_proj(i: int, d: int) -> np.ndarray:
    E = np.zeros((d, d))
    E[i, i] = 1.0
    return E


def _as_matrix(X, d: int) -> np.ndarray:
    if isinstance(X, (QuantumState, HermitianOperator)):
        M = X.mat
    else:
        M = np.asarray(X, dtype=complex)
    if M.shape != (d, d):
        raise DimensionError(f"operator shape {M.shape} != theory dim {d}")
    return M


def _pt(M: np.ndarray, bp) -> np.ndarray:
    dA, dB = bp
    return M.reshape(dA, dB, dA, dB).transpose(0, 3, 2, 1).reshape(dA * dB, dA * dB)


def _min_eig(M: np.ndarray) -> float:
    return float(np.linalg.eigvalsh((M + M.conj().T) / 2)[0])


def _mat_json(M: np.ndarray) -> dict:
    return {
        "dim": M.shape[0],
        "re": np.real(M).tolist(),
        "im": np.imag(M).tolist(),
    }


def _mat_from_json(doc: dict) -> np.ndarray:
    try:
        re = np.asarray(doc["re"], dtype=float)
        im = np.asarray(doc.get("im", np.zeros_like(re)), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad operator JSON: {exc}") from exc
    return re + 1j * im
