"""Linear conic optimisation over Hermitian matrix variables.

A small expression layer (affine matrix-valued expressions in named Hermitian
variables) compiled onto cvxopt's cone-LP kernel.  Complex Hermitian blocks
are realified by the standard doubling [[Re, -Im], [Im, Re]]; problems whose
data is entirely real are detected and solved in a symmetric-only
parametrisation, which roughly halves the variable count and quarters the
PSD block sizes.

Outcomes carry optimizers, dual multipliers, and - for infeasible or
unbounded problems - certificates that are re-verified by a separate checker
walking the original expressions, never the compiled matrices.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from cvxopt import matrix as cvxmat
from cvxopt import solvers as cvxsolvers

from .errors import DualDegenerateError, SolverError


class Status(enum.Enum):
    Optimal = "optimal"
    PrimalInfeasible = "primal_infeasible"
    DualInfeasible = "dual_infeasible"
    NumericalTrouble = "numerical_trouble"


@dataclass(frozen=True)
class SolveOptions:
    tol_gap: float = 1e-8
    tol_feas: float = 1e-8
    max_iter: int = 200
    refine: int = 1
    verbose: bool = False


class Var:
    """A Hermitian matrix variable (dim 1 = real scalar)."""

    __slots__ = ("name", "dim", "bipartition")

    def __init__(self, name: str, dim: int, bipartition=None):
        if dim < 1:
            raise SolverError(f"variable {name!r} has dimension {dim}")
        self.name = name
        self.dim = int(dim)
        self.bipartition = tuple(bipartition) if bipartition is not None else None

    def expr(self) -> Expr:
        return Expr(self.dim, terms=[(self, lambda M: M)])

    def __repr__(self):
        return f"Var({self.name!r}, {self.dim})"


class Expr:
    """Affine Hermitian-matrix-valued expression: const + sum_i fn_i(x_i).

    Each term is ``(var, fn)`` with ``fn`` a real-linear map from the
    variable's matrix value to a ``dim x dim`` matrix.
    """

    __slots__ = ("dim", "const", "terms")

    def __init__(self, dim: int, const=None, terms=()):
        self.dim = int(dim)
        if const is None:
            const = np.zeros((self.dim, self.dim), dtype=complex)
        else:
            const = np.asarray(const, dtype=complex).reshape(self.dim, self.dim)
        self.const = const
        self.terms = list(terms)

    # -- algebra ---------------------------------------------------------

    def __add__(self, other):
        other = as_expr(other, self.dim)
        if other.dim != self.dim:
            raise SolverError(f"dimension mismatch {self.dim} vs {other.dim}")
        return Expr(self.dim, self.const + other.const, self.terms + other.terms)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (as_expr(other, self.dim) * -1.0)

    def __rsub__(self, other):
        return as_expr(other, self.dim) + (self * -1.0)

    def __neg__(self):
        return self * -1.0

    def __mul__(self, scalar: float):
        a = float(scalar)
        return Expr(
            self.dim,
            self.const * a,
            [(v, _compose_scale(fn, a)) for v, fn in self.terms],
        )

    __rmul__ = __mul__

    def __truediv__(self, scalar: float):
        return self * (1.0 / float(scalar))

    # -- structural maps -------------------------------------------------

    def pt(self, bipartition, subsystem: int = 1) -> Expr:
        """Partial transpose of the expression value."""
        bp = tuple(int(d) for d in bipartition)
        return Expr(
            self.dim,
            _pt_mat(self.const, bp, subsystem),
            [(v, _compose_pt(fn, bp, subsystem)) for v, fn in self.terms],
        )

    def conj(self) -> Expr:
        return Expr(
            self.dim,
            self.const.conj(),
            [(v, _compose_conj(fn)) for v, fn in self.terms],
        )

    def contract(self, D) -> Expr:
        """Scalar expression <D, value> as a 1x1 expression."""
        D = np.asarray(D, dtype=complex)
        return Expr(
            1,
            np.trace(D.conj().T @ self.const).reshape(1, 1),
            [(v, _compose_contract(fn, D)) for v, fn in self.terms],
        )

    def trace(self) -> Expr:
        return self.contract(np.eye(self.dim))

    # -- evaluation ------------------------------------------------------

    def value(self, assignment: dict) -> np.ndarray:
        """Evaluate at an assignment mapping var name -> matrix (or scalar)."""
        out = self.const.copy()
        for v, fn in self.terms:
            out = out + fn(_as_mat(assignment[v.name]))
        return out

    def homogeneous_value(self, assignment: dict) -> np.ndarray:
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for v, fn in self.terms:
            out = out + fn(_as_mat(assignment[v.name]))
        return out

    def variables(self):
        seen = []
        for v, _ in self.terms:
            if v not in seen:
                seen.append(v)
        return seen


def _as_mat(x) -> np.ndarray:
    arr = np.asarray(x, dtype=complex)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    return arr


def _compose_scale(fn, a):
    return lambda M: fn(M) * a


def _compose_pt(fn, bp, sub):
    return lambda M: _pt_mat(fn(M), bp, sub)


def _compose_conj(fn):
    return lambda M: fn(M).conj()


def _compose_contract(fn, D):
    Dh = D.conj().T
    return lambda M: np.trace(Dh @ fn(M)).reshape(1, 1)


def _pt_mat(mat, bp, sub):
    n = len(bp)
    d = mat.shape[0]
    arr = mat.reshape(bp + bp)
    axes = list(range(2 * n))
    axes[sub], axes[n + sub] = axes[n + sub], axes[sub]
    return arr.transpose(axes).reshape(d, d)


def as_expr(x, dim=None) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, Var):
        return x.expr()
    if np.isscalar(x):
        if dim is None:
            dim = 1
        return Expr(dim, np.eye(dim) * complex(x))
    arr = np.asarray(x, dtype=complex)
    return Expr(arr.shape[0], arr)


def const_expr(mat) -> Expr:
    arr = np.asarray(mat, dtype=complex)
    return Expr(arr.shape[0], arr)


def inner(D, x) -> Expr:
    """Scalar expression <D, x> for a variable or expression x."""
    return as_expr(x).contract(D)


def lift(scalar_var: Var, mat) -> Expr:
    """Expression ``s * mat`` for a scalar variable s."""
    if scalar_var.dim != 1:
        raise SolverError("lift() expects a scalar variable")
    P = np.asarray(mat, dtype=complex)
    return Expr(P.shape[0], terms=[(scalar_var, lambda M, P=P: complex(M[0, 0]) * P)])


@dataclass
class Constraint:
    kind: str  # 'psd' | 'eq' | 'ge'
    expr: Expr
    name: str = ""


def psd(expr, name="") -> Constraint:
    expr = as_expr(expr)
    if expr.dim == 1:
        return Constraint("ge", expr, name)
    return Constraint("psd", expr, name)


def eq0(expr, name="") -> Constraint:
    return Constraint("eq", as_expr(expr), name)


def ge0(expr, name="") -> Constraint:
    expr = as_expr(expr)
    if expr.dim != 1:
        raise SolverError("ge0() expects a scalar expression; use psd() for blocks")
    return Constraint("ge", expr, name)


@dataclass
class ConicProblem:
    objective: Expr
    sense: str  # 'min' | 'max'
    constraints: list[Constraint] = field(default_factory=list)

    def __post_init__(self):
        if self.sense not in ("min", "max"):
            raise SolverError(f"unknown sense {self.sense!r}")
        if self.objective.dim != 1:
            raise SolverError("objective must be scalar")

    def variables(self) -> list[Var]:
        seen: list[Var] = []
        names = set()
        for v in self.objective.variables():
            if v.name not in names:
                seen.append(v)
                names.add(v.name)
        for con in self.constraints:
            for v in con.expr.variables():
                if v.name in names:
                    continue
                seen.append(v)
                names.add(v.name)
        return seen


@dataclass
class SolveOutcome:
    status: Status
    value: float
    primal: dict
    dual: list
    eq_dual: list
    certificate: dict | None
    iterations: int
    gap: float
    message: str = ""


# ---------------------------------------------------------------------------
# bases and realification


def hermitian_basis(d: int):
    """Orthonormal Hermitian basis; the first d(d+1)/2 elements are real."""
    out = []
    for i in range(d):
        E = np.zeros((d, d), dtype=complex)
        E[i, i] = 1.0
        out.append(E)
    r = 1.0 / math.sqrt(2.0)
    for i in range(d):
        for j in range(i + 1, d):
            E = np.zeros((d, d), dtype=complex)
            E[i, j] = r
            E[j, i] = r
            out.append(E)
    for i in range(d):
        for j in range(i + 1, d):
            E = np.zeros((d, d), dtype=complex)
            E[i, j] = 1j * r
            E[j, i] = -1j * r
            out.append(E)
    return out


def sym_dim(d: int) -> int:
    return d * (d + 1) // 2


def _double(mat: np.ndarray) -> np.ndarray:
    re, im = mat.real, mat.imag
    return np.block([[re, -im], [im, re]])


def _undouble(z2: np.ndarray, m: int) -> np.ndarray:
    z11 = z2[:m, :m]
    z12 = z2[:m, m:]
    z21 = z2[m:, :m]
    z22 = z2[m:, m:]
    return (z11 + z22) / 2 + 1j * (z21 - z12) / 2


# ---------------------------------------------------------------------------
# compilation


@dataclass
class _Compiled:
    mode: str  # 'real' | 'complex'
    vars: list
    offsets: dict
    bases: dict
    n: int
    c: np.ndarray
    sense_sign: float
    ge_cons: list
    psd_cons: list
    eq_cons: list
    G: np.ndarray
    h: np.ndarray
    dims: dict
    A: np.ndarray | None
    b: np.ndarray | None
    eq_row_map: list
    eq_svd: tuple | None
    eq_inconsistency: dict | None


def _is_real_compatible(problem: ConicProblem, variables) -> bool:
    """True when the data is invariant under entrywise conjugation.

    Checked by probing every term on random real-symmetric and
    imaginary-antisymmetric inputs (two probes each, fixed seed), plus
    realness of all constant blocks and of the objective's symmetric action.
    """
    rng = np.random.RandomState(20240811)
    probes = {}
    for v in variables:
        d = v.dim
        sym, asym = [], []
        for _ in range(2):
            S = rng.standard_normal((d, d))
            sym.append((S + S.T) / 2)
            K = rng.standard_normal((d, d))
            asym.append(1j * (K - K.T) / 2)
        probes[v.name] = (sym, asym)

    exprs = [(problem.objective, True)] + [(c.expr, False) for c in problem.constraints]
    for expr, is_obj in exprs:
        if np.max(np.abs(expr.const.imag)) > 1e-12:
            return False
        for v, fn in expr.terms:
            sym, asym = probes[v.name]
            for S in sym:
                if np.max(np.abs(fn(S).imag)) > 1e-11:
                    return False
            for K in asym:
                out = fn(K)
                if is_obj:
                    # objective must not see the antisymmetric part at all
                    if np.max(np.abs(out)) > 1e-11:
                        return False
                elif np.max(np.abs(out.real)) > 1e-11:
                    return False
    return True


def _compile(problem: ConicProblem, opts: SolveOptions) -> _Compiled:
    variables = problem.variables()
    if not variables:
        raise SolverError("problem has no variables")
    mode = "real" if _is_real_compatible(problem, variables) else "complex"

    bases, offsets = {}, {}
    n = 0
    for v in variables:
        full = hermitian_basis(v.dim)
        cnt = sym_dim(v.dim) if mode == "real" else v.dim * v.dim
        bases[v.name] = full[:cnt]
        offsets[v.name] = (n, cnt)
        n += cnt

    ge_cons, psd_cons, eq_cons = [], [], []
    for idx, con in enumerate(problem.constraints):
        kind = con.kind
        if kind == "psd" and con.expr.dim == 1:
            kind = "ge"
        if kind == "ge":
            ge_cons.append(idx)
        elif kind == "psd":
            psd_cons.append(idx)
        elif kind == "eq":
            eq_cons.append(idx)
        else:
            raise SolverError(f"unknown constraint kind {con.kind!r}")

    cons = problem.constraints
    L = len(ge_cons)
    sdims = []
    for idx in psd_cons:
        m = cons[idx].expr.dim
        sdims.append(m if mode == "real" else 2 * m)
    rows = L + sum(s * s for s in sdims)

    G = np.zeros((rows, n))
    h = np.zeros(rows)

    def col_contrib(expr, v, basis_mat):
        out = None
        for tv, fn in expr.terms:
            if tv is v or tv.name == v.name:
                t = fn(basis_mat)
                out = t if out is None else out + t
        return out

    # l rows
    for r, idx in enumerate(ge_cons):
        e = cons[idx].expr
        h[r] = e.const.real[0, 0]
        for v in e.variables():
            start, cnt = offsets[v.name]
            for k in range(cnt):
                t = col_contrib(e, v, bases[v.name][k])
                if t is not None:
                    G[r, start + k] -= t.real[0, 0]

    # PSD blocks
    row = L
    blocks = []
    for bi, idx in enumerate(psd_cons):
        e = cons[idx].expr
        m = e.dim
        s = sdims[bi]
        cm = e.const if mode == "complex" else e.const.real
        hblk = _double(e.const) if mode == "complex" else cm
        h[row:row + s * s] = np.asarray(hblk, dtype=float).flatten(order="F")
        for v in e.variables():
            start, cnt = offsets[v.name]
            for k in range(cnt):
                t = col_contrib(e, v, bases[v.name][k])
                if t is None:
                    continue
                tb = _double(t) if mode == "complex" else t.real
                G[row:row + s * s, start + k] -= np.asarray(tb, dtype=float).flatten(order="F")
        blocks.append((idx, m, row, s))
        row += s * s

    # equality rows, projected onto the block's Hermitian basis
    eq_rows, eq_rhs, eq_row_map = [], [], []
    for idx in eq_cons:
        e = cons[idx].expr
        m = e.dim
        proj = hermitian_basis(m)
        if mode == "real":
            proj = proj[:sym_dim(m)]
        nq = len(proj)
        block_rows = np.zeros((nq, n))
        for v in e.variables():
            start, cnt = offsets[v.name]
            for k in range(cnt):
                t = col_contrib(e, v, bases[v.name][k])
                if t is None:
                    continue
                for q, F in enumerate(proj):
                    block_rows[q, start + k] += np.real(np.trace(F.conj().T @ t))
        for q, F in enumerate(proj):
            rhs = -np.real(np.trace(F.conj().T @ e.const))
            if not np.any(block_rows[q]) and abs(rhs) < 1e-14:
                continue
            eq_rows.append(block_rows[q])
            eq_rhs.append(rhs)
            eq_row_map.append((idx, q, F))

    A = b = None
    eq_svd = None
    eq_inconsistency = None
    if eq_rows:
        A0 = np.vstack(eq_rows)
        b0 = np.asarray(eq_rhs)
        U, S, Vt = np.linalg.svd(A0, full_matrices=False)
        smax = S[0] if S.size else 0.0
        r = int(np.sum(S > max(1e-13 * max(smax, 1.0), 1e-300)))
        if r == 0:
            resid = b0
        else:
            proj_b = U[:, :r] @ (U[:, :r].T @ b0)
            resid = b0 - proj_b
        rn = float(np.linalg.norm(resid))
        if rn > 1e-9 * max(1.0, float(np.linalg.norm(b0))):
            yc = -resid / (rn * rn)  # A0^T yc = 0, b0 . yc = -1
            eq_inconsistency = {"y_orig": yc, "violation": 1.0, "residual": 0.0}
        if r > 0:
            A = Vt[:r, :]
            b = (U[:, :r].T @ b0) / S[:r]
            eq_svd = (U[:, :r], S[:r])
        eq_row_map_full = (A0, b0, eq_row_map)
    else:
        eq_row_map_full = (np.zeros((0, n)), np.zeros(0), [])

    # objective
    c = np.zeros(n)
    obj = problem.objective
    for v in obj.variables():
        start, cnt = offsets[v.name]
        for k in range(cnt):
            t = col_contrib(obj, v, bases[v.name][k])
            if t is not None:
                c[start + k] += t.real[0, 0]
    sense_sign = 1.0 if problem.sense == "min" else -1.0
    c = c * sense_sign

    if rows == 0:
        # degenerate: no cone part at all; give conelp a vacuous row
        G = np.zeros((1, n))
        h = np.ones(1)
        L = 1
        ge_cons = []

    return _Compiled(
        mode=mode,
        vars=variables,
        offsets=offsets,
        bases=bases,
        n=n,
        c=c,
        sense_sign=sense_sign,
        ge_cons=ge_cons,
        psd_cons=blocks,
        eq_cons=eq_cons,
        G=G,
        h=h,
        dims={"l": L if rows else 1, "q": [], "s": sdims},
        A=A,
        b=b,
        eq_row_map=eq_row_map_full,
        eq_svd=eq_svd,
        eq_inconsistency=eq_inconsistency,
    )


# ---------------------------------------------------------------------------
# solve + verification


def _assignment_from_x(comp: _Compiled, x: np.ndarray) -> dict:
    out = {}
    for v in comp.vars:
        start, cnt = comp.offsets[v.name]
        M = np.zeros((v.dim, v.dim), dtype=complex)
        for k in range(cnt):
            M = M + x[start + k] * comp.bases[v.name][k]
        M = (M + M.conj().T) / 2
        out[v.name] = M[0, 0].real if v.dim == 1 else M
    return out


def _split_duals(problem, comp: _Compiled, z: np.ndarray):
    """Map the stacked cone dual vector back to per-constraint multipliers."""
    dual = [None] * len(problem.constraints)
    for r, idx in enumerate(comp.ge_cons):
        dual[idx] = float(z[r])
    for idx, m, row, s in comp.psd_cons:
        blk = z[row:row + s * s].reshape(s, s, order="F")
        blk = (blk + blk.T) / 2
        if comp.mode == "real":
            dual[idx] = blk.astype(complex)
        else:
            dual[idx] = 2.0 * _undouble(blk, m)
    return dual


def _eq_duals(problem, comp: _Compiled, y_red):
    """Multipliers for the original (unreduced) equality rows, grouped per block."""
    A0, b0, row_map = comp.eq_row_map
    if not row_map:
        return [None] * len(problem.constraints), np.zeros(0)
    if comp.eq_svd is None or y_red is None or len(y_red) == 0:
        y_orig = np.zeros(len(row_map))
    else:
        Ur, Sr = comp.eq_svd
        y_orig = Ur @ (np.asarray(y_red).ravel() / Sr)
    eq_dual = [None] * len(problem.constraints)
    for (idx, q, F), yq in zip(row_map, y_orig):
        m = problem.constraints[idx].expr.dim
        if eq_dual[idx] is None:
            eq_dual[idx] = np.zeros((m, m), dtype=complex)
        eq_dual[idx] = eq_dual[idx] + yq * F
    return eq_dual, y_orig


def _feas_violations(problem, assignment):
    out = []
    for con in problem.constraints:
        E = con.expr.value(assignment)
        scale = 1.0 + float(np.max(np.abs(con.expr.const))) if con.expr.const.size else 1.0
        if con.kind == "eq":
            v = float(np.max(np.abs(E)))
        elif con.expr.dim == 1:
            v = max(0.0, -float(E.real[0, 0])) if con.kind in ("ge", "psd") else float(np.max(np.abs(E)))
        else:
            v = max(0.0, -float(np.linalg.eigvalsh((E + E.conj().T) / 2)[0]))
        out.append(v / scale)
    return out


def _recompute_columns(problem, comp, expr):
    """Per-coordinate contributions of expr, recomputed from the term functions."""
    cols = {}
    for v in expr.variables():
        start, cnt = comp.offsets[v.name]
        for k in range(cnt):
            t = None
            for tv, fn in expr.terms:
                if tv.name == v.name:
                    u = fn(comp.bases[v.name][k])
                    t = u if t is None else t + u
            if t is not None:
                cols[start + k] = t
    return cols


def _verify_farkas(problem, comp, dual, eq_dual_y, opts):
    """Independent re-check of a primal-infeasibility witness.

    Walks the original expressions (not the compiled G/A) and confirms the
    witness defines a nonnegative functional on the feasible set with a
    strictly negative value, i.e. genuinely contradicts feasibility.
    """
    cons = problem.constraints
    _, _, row_map = comp.eq_row_map
    y_orig = eq_dual_y

    denom = 1.0
    for idx, m, _, _ in comp.psd_cons:
        denom += float(np.linalg.norm(dual[idx]))
    for idx in comp.ge_cons:
        denom += abs(dual[idx])
    denom += float(np.linalg.norm(y_orig)) if len(y_orig) else 0.0

    # cone membership of the witness
    for idx, m, _, _ in comp.psd_cons:
        lo = float(np.linalg.eigvalsh(dual[idx])[0])
        if lo < -10 * opts.tol_feas * denom:
            return None
    for idx in comp.ge_cons:
        if dual[idx] < -10 * opts.tol_feas * denom:
            return None

    # stationarity: the witness functional kills every variable direction
    resid = np.zeros(comp.n)
    for idx, m, _, _ in comp.psd_cons:
        cols = _recompute_columns(problem, comp, cons[idx].expr)
        for j, C in cols.items():
            resid[j] += float(np.real(np.trace(dual[idx].conj().T @ C)))
    for idx in comp.ge_cons:
        cols = _recompute_columns(problem, comp, cons[idx].expr)
        for j, C in cols.items():
            resid[j] += dual[idx] * C.real[0, 0]
    eq_weights: dict[int, np.ndarray] = {}
    for (idx, q, F), yq in zip(row_map, y_orig):
        m = cons[idx].expr.dim
        eq_weights.setdefault(idx, np.zeros((m, m), dtype=complex))
        eq_weights[idx] = eq_weights[idx] + yq * F
    for idx, Y in eq_weights.items():
        cols = _recompute_columns(problem, comp, cons[idx].expr)
        for j, C in cols.items():
            resid[j] += float(np.real(np.trace(Y.conj().T @ C)))
    res = float(np.max(np.abs(resid))) if comp.n else 0.0

    # violation: value of the functional on the constants
    viol = 0.0
    for idx, m, _, _ in comp.psd_cons:
        viol -= float(np.real(np.trace(dual[idx].conj().T @ cons[idx].expr.const)))
    for idx in comp.ge_cons:
        viol -= dual[idx] * cons[idx].expr.const.real[0, 0]
    for (idx, q, F), yq in zip(row_map, y_orig):
        viol -= yq * float(np.real(np.trace(F.conj().T @ cons[idx].expr.const)))

    if viol / denom < 10 * opts.tol_feas:
        return None
    if res / denom > 1e-6 * max(1.0, viol / denom):
        return None
    return {"violation": viol / denom, "residual": res / denom}


def _verify_ray(problem, comp, assignment, opts):
    """Independent re-check of an improving (unboundedness) ray."""
    denom = 1.0 + max(
        (float(np.max(np.abs(np.atleast_2d(v)))) for v in assignment.values()),
        default=0.0,
    )
    obj = float(np.real(problem.objective.homogeneous_value(assignment)[0, 0]))
    obj *= comp.sense_sign
    if obj > -10 * opts.tol_feas * denom:
        return None
    worst = 0.0
    for con in problem.constraints:
        Eh = con.expr.homogeneous_value(assignment)
        if con.kind == "eq":
            worst = max(worst, float(np.max(np.abs(Eh))))
        elif con.expr.dim == 1:
            worst = max(worst, max(0.0, -float(Eh.real[0, 0])))
        else:
            worst = max(worst, max(0.0, -float(np.linalg.eigvalsh((Eh + Eh.conj().T) / 2)[0])))
    if worst / denom > opts.tol_feas:
        return None
    return {"objective_rate": obj / denom, "residual": worst / denom}


def solve(problem: ConicProblem, opts: SolveOptions | None = None) -> SolveOutcome:
    """Solve the conic problem; deterministic for identical inputs."""
    opts = opts or SolveOptions()
    comp = _compile(problem, opts)

    if comp.eq_inconsistency is not None:
        eq_dual, y_orig = _eq_inconsistency_duals(problem, comp)
        cert = {
            "kind": "farkas_primal",
            "violation": comp.eq_inconsistency["violation"],
            "residual": comp.eq_inconsistency["residual"],
            "verified": True,
            "dual": [None] * len(problem.constraints),
            "eq_dual": eq_dual,
        }
        val = math.inf if problem.sense == "min" else -math.inf
        return SolveOutcome(Status.PrimalInfeasible, val, {}, [None] * len(problem.constraints),
                            eq_dual, cert, 0, math.nan, "inconsistent equality system")

    kw = {}
    if comp.A is not None:
        kw["A"] = cvxmat(np.ascontiguousarray(comp.A))
        kw["b"] = cvxmat(np.ascontiguousarray(comp.b.reshape(-1, 1)))
    # very tight tolerances occasionally drive the interior-point iteration
    # into an exact-singularity breakdown; relax one notch and retry, keeping
    # the achieved gap in the outcome so callers can still judge the result
    res = last_exc = None
    for relax in (1.0, 10.0, 100.0):
        options = {
            "show_progress": opts.verbose,
            "maxiters": opts.max_iter,
            "abstol": opts.tol_gap * relax,
            "reltol": opts.tol_gap * relax,
            "feastol": opts.tol_feas * relax,
            "refinement": max(1, opts.refine),
        }
        try:
            res = cvxsolvers.conelp(
                cvxmat(comp.c.reshape(-1, 1)),
                cvxmat(np.ascontiguousarray(comp.G)),
                cvxmat(comp.h.reshape(-1, 1)),
                dims=comp.dims,
                options=options,
                **kw,
            )
            break
        except (ValueError, ArithmeticError) as exc:
            last_exc = exc
    if res is None:
        return SolveOutcome(Status.NumericalTrouble, math.nan, {}, [None] * len(problem.constraints),
                            [None] * len(problem.constraints), None, 0, math.nan,
                            f"kernel failure: {last_exc}")

    st = res["status"]
    iters = int(res.get("iterations", 0))

    if st in ("optimal", "unknown") and res["x"] is not None and res["z"] is not None:
        x = np.asarray(res["x"]).ravel()
        z = np.asarray(res["z"]).ravel()
        y = np.asarray(res["y"]).ravel() if res["y"] is not None else np.zeros(0)
        assignment = _assignment_from_x(comp, x)
        dual = _split_duals(problem, comp, z)
        eq_dual, _ = _eq_duals(problem, comp, y)
        pval = float(comp.c @ x) * comp.sense_sign + float(problem.objective.const.real[0, 0])
        rel = res.get("relative gap")
        absgap = res.get("gap")
        # the relative gap is meaningless near a zero objective, so a small
        # absolute gap is accepted as well
        gap_ok = (rel is not None and float(rel) <= 100 * opts.tol_gap) or (
            absgap is not None and float(absgap) <= 100 * opts.tol_gap * max(1.0, abs(pval))
        )
        gap = float(rel) if rel is not None else float(absgap) if absgap is not None else math.nan
        if gap_ok and absgap is not None:
            gap = min(gap, float(absgap) / max(1.0, abs(pval)))
        viols = _feas_violations(problem, assignment)
        ok = max(viols, default=0.0) <= 10 * opts.tol_feas and gap_ok
        if ok:
            return SolveOutcome(Status.Optimal, pval, assignment, dual, eq_dual,
                                None, iters, gap)
        if st == "optimal":
            return SolveOutcome(Status.NumericalTrouble, pval, assignment, dual, eq_dual,
                                None, iters, gap,
                                f"reported optimal but residuals {max(viols, default=0):.2e} / gap {gap:.2e}")
        return SolveOutcome(Status.NumericalTrouble, math.nan, assignment, dual, eq_dual,
                            None, iters, gap, "did not converge")

    if st == "primal infeasible":
        z = np.asarray(res["z"]).ravel()
        y = np.asarray(res["y"]).ravel() if res["y"] is not None else np.zeros(0)
        dual = _split_duals(problem, comp, z)
        # the witness functional wants the equality weights with the sign
        # opposite to the kernel's stationarity convention
        eq_dual, y_orig = _eq_duals(problem, comp, -y)
        check = _verify_farkas(problem, comp, dual, y_orig, opts)
        if check is None:
            return SolveOutcome(Status.NumericalTrouble, math.nan, {}, dual, eq_dual,
                                None, iters, math.nan,
                                "infeasibility reported but witness failed verification")
        cert = {"kind": "farkas_primal", "dual": dual, "eq_dual": eq_dual,
                "verified": True, **check}
        val = math.inf if problem.sense == "min" else -math.inf
        return SolveOutcome(Status.PrimalInfeasible, val, {}, dual, eq_dual,
                            cert, iters, math.nan)

    if st == "dual infeasible":
        x = np.asarray(res["x"]).ravel()
        assignment = _assignment_from_x(comp, x)
        check = _verify_ray(problem, comp, assignment, opts)
        if check is None:
            return SolveOutcome(Status.NumericalTrouble, math.nan, {},
                                [None] * len(problem.constraints),
                                [None] * len(problem.constraints), None, iters, math.nan,
                                "unboundedness reported but ray failed verification")
        cert = {"kind": "improving_ray", "ray": assignment, "verified": True, **check}
        val = -math.inf if problem.sense == "min" else math.inf
        return SolveOutcome(Status.DualInfeasible, val, {},
                            [None] * len(problem.constraints),
                            [None] * len(problem.constraints), cert, iters, math.nan)

    return SolveOutcome(Status.NumericalTrouble, math.nan, {},
                        [None] * len(problem.constraints),
                        [None] * len(problem.constraints), None, iters, math.nan,
                        f"kernel status {st!r}")


def _eq_inconsistency_duals(problem, comp):
    _, _, row_map = comp.eq_row_map
    y = comp.eq_inconsistency["y_orig"]
    eq_dual = [None] * len(problem.constraints)
    for (idx, q, F), yq in zip(row_map, y):
        m = problem.constraints[idx].expr.dim
        if eq_dual[idx] is None:
            eq_dual[idx] = np.zeros((m, m), dtype=complex)
        eq_dual[idx] = eq_dual[idx] + yq * F
    return eq_dual, y


def complementary_slackness(problem: ConicProblem, outcome: SolveOutcome) -> float:
    """Max |<E_j(x*), Z_j>| over cone constraints, scaled by 1 + |value|."""
    worst = 0.0
    for con, mult in zip(problem.constraints, outcome.dual):
        if mult is None or con.kind == "eq":
            continue
        E = con.expr.value(outcome.primal)
        if con.expr.dim == 1:
            ip = float(E.real[0, 0]) * mult
        else:
            ip = float(np.real(np.trace(mult.conj().T @ E)))
        worst = max(worst, abs(ip))
    scale = 1.0 + (abs(outcome.value) if math.isfinite(outcome.value) else 0.0)
    return worst / scale


def solve_with_dual_extraction(problem: ConicProblem, opts: SolveOptions | None = None) -> SolveOutcome:
    """As solve(), with duals refined and complementary slackness re-checked."""
    opts = opts or SolveOptions()
    opts = SolveOptions(opts.tol_gap, opts.tol_feas, opts.max_iter,
                        refine=max(2, opts.refine), verbose=opts.verbose)
    outcome = solve(problem, opts)
    if outcome.status is Status.Optimal:
        resid = complementary_slackness(problem, outcome)
        if resid > 1e-6:
            raise DualDegenerateError(
                f"complementary slackness residual {resid:.3e} exceeds 1e-6"
            )
    return outcome


def feasibility_margin(constraints: list[Constraint], opts: SolveOptions | None = None):
    """Largest m with every cone block >= m*I (capped at 1); equalities kept.

    Used as an independent feasibility probe by bisection cross-checks: a
    clearly positive margin certifies feasibility of the original system,
    a clearly negative one certifies infeasibility.
    """
    m = Var("margin__", 1)
    cons = []
    for con in constraints:
        e = con.expr
        if con.kind == "eq":
            cons.append(con)
        elif e.dim == 1 or con.kind == "ge":
            cons.append(ge0(e - m.expr(), name=con.name))
        else:
            cons.append(psd(e - lift(m, np.eye(e.dim)), name=con.name))
    cons.append(ge0(const_expr(np.ones((1, 1))) - m.expr(), name="margin_cap"))
    prob = ConicProblem(m.expr(), "max", cons)
    out = solve(prob, opts)
    if out.status is Status.Optimal:
        return out.value, out.primal
    if out.status is Status.PrimalInfeasible:
        return -math.inf, {}
    raise SolverError(f"margin probe failed: {out.status} {out.message}")


def bisect_threshold(feasible, lo: float, hi: float, rel_tol: float = 1e-9, max_steps: int = 200):
    """Smallest t in [lo, hi] with feasible(t) true, by monotone bisection.

    Assumes feasible is monotone (False below the threshold, True above);
    ``feasible(hi)`` must hold.
    """
    if not feasible(hi):
        raise SolverError("bisection bracket invalid: feasible(hi) is false")
    if feasible(lo):
        return lo
    steps = 0
    while (hi - lo) > rel_tol * max(1.0, abs(hi)) and steps < max_steps:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
        steps += 1
    return hi


def problem_to_json(problem: ConicProblem) -> dict:
    """Loss-free structural dump for offline debugging (not a stable format)."""

    def _mat(m):
        arr = np.asarray(m, dtype=complex)
        return {"re": arr.real.tolist(), "im": arr.imag.tolist()}

    return {
        "sense": problem.sense,
        "variables": [{"name": v.name, "dim": v.dim} for v in problem.variables()],
        "objective_const": _mat(problem.objective.const),
        "constraints": [
            {"kind": c.kind, "name": c.name, "dim": c.expr.dim, "const": _mat(c.expr.const),
             "vars": [v.name for v in c.expr.variables()]}
            for c in problem.constraints
        ],
    }
