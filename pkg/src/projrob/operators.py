"""Hermitian operators, states, and the small linear algebra used everywhere.

All matrices are dense complex numpy arrays.  The wrapper types exist to
centralise validation (hermiticity, positivity, trace) so the optimisation
layers can assume clean inputs.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DimensionError, DomainError

HERM_TOL = 1e-12
HERM_WARN = 1e-8
PSD_TOL = 1e-9
TRACE_TOL = 1e-9


def _as_square(mat) -> np.ndarray:
    arr = np.asarray(mat, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class HermitianOperator:
    """A Hermitian matrix, symmetrised on construction.

    An asymmetry ``max |A - A^dag|`` above 1e-8 triggers a warning; the
    stored matrix is always exactly Hermitian up to floating point.
    """

    mat: np.ndarray
    bipartition: tuple[int, ...] | None = None

    def __post_init__(self):
        arr = _as_square(self.mat)
        gap = np.max(np.abs(arr - arr.conj().T)) if arr.size else 0.0
        if gap > HERM_WARN:
            warnings.warn(
                f"operator is not Hermitian (asymmetry {gap:.3e}); symmetrising",
                stacklevel=3,
            )
        if gap > HERM_TOL:
            arr = (arr + arr.conj().T) / 2
        else:
            arr = (arr + arr.conj().T) / 2  # cheap, and kills tiny asymmetry too
        arr.setflags(write=False)
        object.__setattr__(self, "mat", arr)
        if self.bipartition is not None:
            bp = tuple(int(d) for d in self.bipartition)
            if any(d <= 0 for d in bp):
                raise DimensionError(f"bipartition {bp} has non-positive factors")
            if int(np.prod(bp)) != arr.shape[0]:
                raise DimensionError(
                    f"bipartition {bp} does not multiply to dimension {arr.shape[0]}"
                )
            object.__setattr__(self, "bipartition", bp)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def trace(self) -> float:
        return float(np.real(np.trace(self.mat)))

    def inner(self, other: HermitianOperator | np.ndarray) -> float:
        """Hilbert-Schmidt inner product <self, other>, real for Hermitian pairs."""
        o = other.mat if isinstance(other, HermitianOperator) else np.asarray(other)
        return float(np.real(np.trace(self.mat.conj().T @ o)))

    def eigvals(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.mat)

    def is_real(self, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.mat.imag)) <= tol) if self.mat.size else True

    # small operator algebra; results inherit no bipartition unless shapes agree

    def __add__(self, other):
        bp = self.bipartition if isinstance(other, HermitianOperator) and other.bipartition == self.bipartition else None
        o = other.mat if isinstance(other, HermitianOperator) else other
        return HermitianOperator(self.mat + o, bp)

    def __sub__(self, other):
        bp = self.bipartition if isinstance(other, HermitianOperator) and other.bipartition == self.bipartition else None
        o = other.mat if isinstance(other, HermitianOperator) else other
        return HermitianOperator(self.mat - o, bp)

    def __mul__(self, scalar: float):
        return HermitianOperator(self.mat * float(scalar), self.bipartition)

    __rmul__ = __mul__

    def __truediv__(self, scalar: float):
        return HermitianOperator(self.mat / float(scalar), self.bipartition)

    def __neg__(self):
        return HermitianOperator(-self.mat, self.bipartition)


@dataclass(frozen=True)
class QuantumState:
    """A density matrix: positive semidefinite with unit trace.

    Validation allows eigenvalues down to -1e-9 and a trace error of 1e-9,
    which absorbs round-off from tensor products and solver output.
    """

    op: HermitianOperator
    bipartition: tuple[int, ...] | None = field(default=None)

    def __post_init__(self):
        if not isinstance(self.op, HermitianOperator):
            object.__setattr__(self, "op", HermitianOperator(self.op, self.bipartition))
        if self.bipartition is None and self.op.bipartition is not None:
            object.__setattr__(self, "bipartition", self.op.bipartition)
        elif self.bipartition is not None:
            bp = tuple(int(d) for d in self.bipartition)
            if int(np.prod(bp)) != self.op.dim:
                raise DimensionError(
                    f"bipartition {bp} does not multiply to dimension {self.op.dim}"
                )
            object.__setattr__(self, "bipartition", bp)
        lo = float(self.op.eigvals()[0])
        if lo < -PSD_TOL:
            raise DomainError(f"state has negative eigenvalue {lo:.3e}")
        tr = self.op.trace()
        if abs(tr - 1.0) > TRACE_TOL:
            raise DomainError(f"state trace {tr!r} is not 1 within {TRACE_TOL}")

    @property
    def mat(self) -> np.ndarray:
        return self.op.mat

    @property
    def dim(self) -> int:
        return self.op.dim


def hermitian(mat, bipartition=None) -> HermitianOperator:
    """Shorthand constructor."""
    return HermitianOperator(mat, bipartition)


def state(mat, bipartition=None) -> QuantumState:
    """Shorthand constructor; validates positivity and trace."""
    return QuantumState(HermitianOperator(mat, bipartition))


def ket(i: int, d: int) -> np.ndarray:
    v = np.zeros(d, dtype=complex)
    v[i] = 1.0
    return v


def ketbra(i: int, j: int, d: int) -> np.ndarray:
    m = np.zeros((d, d), dtype=complex)
    m[i, j] = 1.0
    return m


def tensor_product(a: HermitianOperator, b: HermitianOperator) -> HermitianOperator:
    """Kronecker product; the result carries the concatenated bipartition."""
    bp = None
    if a.bipartition is not None and b.bipartition is not None:
        bp = a.bipartition + b.bipartition
    return HermitianOperator(np.kron(a.mat, b.mat), bp)


def permute_subsystems(mat: np.ndarray, dims, perm) -> np.ndarray:
    """Reorder tensor factors of a square matrix on ``dims`` by ``perm``.

    ``perm[k]`` names which original factor ends up in slot ``k``.
    """
    dims = [int(d) for d in dims]
    n = len(dims)
    arr = np.asarray(mat, dtype=complex).reshape(dims + dims)
    axes = list(perm) + [n + p for p in perm]
    arr = arr.transpose(axes)
    d = int(np.prod(dims))
    return arr.reshape(d, d)


def partial_transpose(x: HermitianOperator, bipartition=None, subsystem: int = 1) -> HermitianOperator:
    """Transpose one tensor factor of ``x``.

    The bipartition may come from the operator itself; passing one explicitly
    overrides it.  Raises DimensionError when neither is available or the
    subsystem index is out of range.
    """
    bp = tuple(bipartition) if bipartition is not None else x.bipartition
    if bp is None:
        raise DimensionError("partial transpose needs a bipartition")
    bp = tuple(int(d) for d in bp)
    if int(np.prod(bp)) != x.dim:
        raise DimensionError(f"bipartition {bp} does not multiply to dimension {x.dim}")
    if not 0 <= subsystem < len(bp):
        raise DimensionError(f"subsystem {subsystem} out of range for {bp}")
    n = len(bp)
    arr = x.mat.reshape(bp + bp)
    axes = list(range(2 * n))
    axes[subsystem], axes[n + subsystem] = axes[n + subsystem], axes[subsystem]
    out = arr.transpose(axes).reshape(x.dim, x.dim)
    return HermitianOperator(out, bp)


def min_eigenvalue(x: HermitianOperator) -> float:
    return float(np.linalg.eigvalsh(x.mat)[0])


def support_projector(x: HermitianOperator, rank_tol: float = 1e-9) -> HermitianOperator:
    """Projector onto the support (range) of a PSD operator.

    Eigenvalues below ``rank_tol * max(eigenvalue)`` count as zero.  Raises
    DomainError if ``x`` has an eigenvalue below ``-rank_tol``.
    """
    vals, vecs = np.linalg.eigh(x.mat)
    top = float(vals[-1]) if vals.size else 0.0
    if vals.size and float(vals[0]) < -rank_tol * max(top, 1.0):
        raise DomainError(f"support projector of a non-PSD operator (min eig {vals[0]:.3e})")
    cut = rank_tol * max(top, 0.0)
    keep = vecs[:, vals > cut]
    return HermitianOperator(keep @ keep.conj().T, x.bipartition)


def pure_target_fidelity(tau: QuantumState | HermitianOperator, phi: QuantumState | HermitianOperator) -> float:
    """Overlap <phi| tau |phi> with a rank-one projector phi.

    Raises DomainError if ``phi`` is not (numerically) a rank-one projector.
    """
    p = phi.mat if not isinstance(phi, np.ndarray) else phi
    t = tau.mat if not isinstance(tau, np.ndarray) else tau
    vals = np.linalg.eigvalsh(p)
    if abs(vals[-1] - 1.0) > 1e-8 or np.any(np.abs(vals[:-1]) > 1e-8):
        raise DomainError("fidelity target must be a rank-one projector")
    return float(np.real(np.trace(p @ t)))


def choi_matrix(channel, in_dim: int | None = None) -> HermitianOperator:
    """Choi matrix of a completely positive map.

    For measure-and-prepare maps ``X -> sum_i <M_i, X> P_i`` (anything with an
    ``effects`` attribute listing ``(M_i, P_i)`` pairs) the result is
    ``sum_i conj(M_i) (x) P_i``.  A plain callable is probed on the matrix
    units, which requires ``in_dim``.
    """
    effects = getattr(channel, "effects", None)
    if effects is not None:
        blocks = None
        din = dout = None
        for m, p in effects:
            mm = m.mat if isinstance(m, HermitianOperator) else np.asarray(m, dtype=complex)
            pm = p.mat if isinstance(p, HermitianOperator) else np.asarray(p, dtype=complex)
            term = np.kron(mm.conj(), pm)
            blocks = term if blocks is None else blocks + term
            din, dout = mm.shape[0], pm.shape[0]
        if blocks is None:
            raise DomainError("map has no effects")
        return HermitianOperator(blocks, (din, dout))
    if in_dim is None:
        raise DimensionError("choi_matrix of a raw callable needs in_dim")
    cols = []
    for i in range(in_dim):
        row = []
        for j in range(in_dim):
            out = channel(ketbra(i, j, in_dim))
            row.append(out.mat if isinstance(out, HermitianOperator) else np.asarray(out))
        cols.append(row)
    dout = cols[0][0].shape[0]
    J = np.zeros((in_dim * dout, in_dim * dout), dtype=complex)
    for i in range(in_dim):
        for j in range(in_dim):
            J[i * dout:(i + 1) * dout, j * dout:(j + 1) * dout] = cols[i][j]
    return HermitianOperator(J, (in_dim, dout))


def maximally_entangled(m: int) -> QuantumState:
    """|phi_m><phi_m| with phi_m = sum_i |ii> / sqrt(m), bipartition (m, m)."""
    v = np.zeros(m * m, dtype=complex)
    for i in range(m):
        v[i * m + i] = 1.0
    v /= np.sqrt(m)
    return QuantumState(HermitianOperator(np.outer(v, v.conj()), (m, m)))


def maximally_coherent(m: int) -> QuantumState:
    """Uniform-superposition projector in dimension m."""
    v = np.full(m, 1.0 / np.sqrt(m), dtype=complex)
    return QuantumState(HermitianOperator(np.outer(v, v.conj())))


def isotropic_state(gamma: float, d: int = 2) -> QuantumState:
    """(1-gamma) |phi_d><phi_d| + gamma I/d^2 on d (x) d."""
    if not 0.0 <= gamma <= 1.0:
        raise DomainError(f"mixing parameter {gamma} outside [0, 1]")
    phi = maximally_entangled(d)
    mat = (1.0 - gamma) * phi.mat + gamma * np.eye(d * d) / (d * d)
    return QuantumState(HermitianOperator(mat, (d, d)))


def _phi3_mixture(weights) -> QuantumState:
    phi = maximally_entangled(3)
    mat = 0.75 * phi.mat
    for (i, j), w in weights:
        idx = 3 * i + j
        mat = mat + w * np.real(np.outer(ket(idx, 9), ket(idx, 9)))
    return QuantumState(HermitianOperator(mat, (3, 3)))


def n_copies(rho: QuantumState, n: int) -> QuantumState:
    """Tensor power of a state.

    For a bipartite state the copies are regrouped so the result is again
    bipartite across the same cut: (A_1..A_n | B_1..B_n).
    """
    if n < 1:
        raise DomainError(f"need at least one copy, got {n}")
    if n == 1:
        return rho
    mat = rho.mat
    for _ in range(n - 1):
        mat = np.kron(mat, rho.mat)
    bp = rho.bipartition
    if bp is None:
        return QuantumState(HermitianOperator(mat))
    if len(bp) != 2:
        raise DimensionError("copy regrouping only supports two-part bipartitions")
    dims = list(bp) * n
    perm = [2 * k for k in range(n)] + [2 * k + 1 for k in range(n)]
    mat = permute_subsystems(mat, dims, perm)
    dA, dB = bp
    return QuantumState(HermitianOperator(mat, (dA ** n, dB ** n)))


def state_factory(name: str, **params) -> QuantumState:
    """Build a named state.

    Families: maximally_entangled(m), maximally_coherent(m),
    isotropic(gamma, d=2), figure3a, figure3b, mixture(components),
    n_copies(state, n).  Unknown names or bad parameters raise ConfigError.
    """
    try:
        if name == "maximally_entangled":
            return maximally_entangled(int(params["m"]))
        if name == "maximally_coherent":
            return maximally_coherent(int(params["m"]))
        if name == "isotropic":
            return isotropic_state(float(params["gamma"]), int(params.get("d", 2)))
        if name == "figure3a":
            return _phi3_mixture([((0, 1), 0.25)])
        if name == "figure3b":
            return _phi3_mixture([((0, 1), 1 / 12), ((1, 2), 1 / 12), ((2, 0), 1 / 12)])
        if name == "mixture":
            comps = params["components"]
            mat = sum(w * s.mat for w, s in comps)
            bp = comps[0][1].bipartition
            same = all(s.bipartition == bp for _, s in comps)
            return QuantumState(HermitianOperator(mat, bp if same else None))
        if name == "n_copies":
            return n_copies(params["state"], int(params["n"]))
    except KeyError as exc:
        raise ConfigError(f"state family {name!r} is missing parameter {exc}") from exc
    except (DomainError, DimensionError, ValueError, TypeError) as exc:
        raise ConfigError(f"bad parameters for state family {name!r}: {exc}") from exc
    raise ConfigError(f"unknown state family {name!r}")
