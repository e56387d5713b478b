"""Sweep engines behind the error-trade-off figures, plus CSV/JSON/PNG output.

Each figure id maps to a deterministic grid of conic solves; rows carry the
solver status so a troubled point can never hide in the data.  Rendering
goes through the Agg backend and writes a PNG next to the delimited output.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .distill import (
    eigenvalue_bound,
    error_lower_bound,
    solve_HP,
    solve_HP_aff,
    solve_HP_eps,
    solve_Theta_p,
)
from .errors import ConfigError, ProjrobError, SolverError
from .free_sets import FreeSetSpec
from .operators import (
    isotropic_state,
    ket,
    maximally_entangled,
    n_copies,
    permute_subsystems,
    state_factory,
)
from .solver import SolveOptions

FIGURE_2_COLUMNS = ("gamma", "eigenvalue_bound", "omega_bound",
                    "E_p1", "E_p075", "E_p05", "status")
FIGURE_3_COLUMNS = ("p", "E", "status")
SWEEP_COLUMNS = ("param", "p", "eps", "value", "status", "wall_ms")

GAMMA_GRID_1 = tuple(np.round(np.arange(0.05, 0.651, 0.01), 4))
GAMMA_GRID_2 = tuple(np.round(np.arange(0.05, 0.651, 0.025), 4))
GAMMA_GRID_3 = tuple(np.round(np.arange(0.05, 0.651, 0.1), 4))
P_GRID = tuple(np.round(np.arange(0.02, 1.0001, 0.02), 4))

FIGURES = ("2a", "2b", "2c", "3a", "3b")
SLOW_FIGURES = ("2c",)


@dataclass
class SweepResult:
    """Rows plus enough metadata to reproduce them."""

    columns: tuple
    rows: list
    metadata: dict = field(default_factory=dict)


def _pmap(fn, xs, jobs: int):
    """Map preserving grid order; a thread pool when jobs > 1."""
    if jobs <= 1 or len(xs) <= 1:
        return [fn(x) for x in xs]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, xs))


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if x is None:
        return ""
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    if isinstance(x, float) and math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.10g}"


def write_csv(result: SweepResult, path) -> None:
    lines = [",".join(result.columns)]
    for row in result.rows:
        lines.append(",".join(_fmt(x) for x in row))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def write_json(result: SweepResult, path) -> None:
    doc = {
        "columns": list(result.columns),
        "rows": [[x if not isinstance(x, float) or math.isfinite(x) else _fmt(x)
                  for x in row] for row in result.rows],
        "metadata": result.metadata,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def render_png(result: SweepResult, path) -> None:
    """Draw the sweep: bound curves for the error figures, E(p) otherwise."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5.0, 3.4), dpi=150)
    cols = result.columns
    if cols == FIGURE_2_COLUMNS:
        g = [r[0] for r in result.rows]
        ax.plot(g, [r[2] for r in result.rows], "-", color="tab:blue",
                label="projective bound")
        ax.plot(g, [r[1] for r in result.rows], "--", color="tab:gray",
                label="eigenvalue bound")
        for idx, p, mk in ((3, "1", "o"), (4, "0.75", "s"), (5, "0.5", "^")):
            ax.plot(g, [r[idx] for r in result.rows], mk, ms=3.2, ls="none",
                    label=f"E at p={p}")
        ax.set_xlabel("noise parameter")
        ax.set_ylabel("distillation error")
    elif cols == FIGURE_3_COLUMNS:
        ax.plot([r[0] for r in result.rows], [r[1] for r in result.rows],
                "o-", ms=3.2, color="tab:red", label="E(p)")
        ax.set_xlabel("success probability")
        ax.set_ylabel("distillation error")
    else:
        ax.plot([r[0] for r in result.rows], [r[3] for r in result.rows],
                "o-", ms=3.2, label="value")
        ax.set_xlabel(cols[0])
        ax.set_ylabel("program value")
    title = result.metadata.get("figure") or result.metadata.get("program", "")
    if title:
        ax.set_title(str(title))
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


# ---------------------------------------------------------------------------
# figure grids


def embedded_bell_pair(copies: int) -> np.ndarray:
    """Maximally entangled qubit pair on the first copy slot of n, the rest
    pinned to |00>, regrouped across the same (A...|B...) cut as the input."""
    mat = maximally_entangled(2).mat
    zero = np.kron(ket(0, 2), ket(0, 2))
    p00 = np.outer(zero, zero.conj())
    for _ in range(copies - 1):
        mat = np.kron(mat, p00)
    if copies == 1:
        return mat
    dims = [2, 2] * copies
    perm = [2 * k for k in range(copies)] + [2 * k + 1 for k in range(copies)]
    return permute_subsystems(mat, dims, perm)


def _error_figure_rows(gammas, copies: int, opts: SolveOptions | None, jobs: int):
    F = FreeSetSpec.ppt(2 ** copies, 2 ** copies)
    phi = embedded_bell_pair(copies)

    def point(g):
        rho = n_copies(isotropic_state(float(g)), copies).mat
        try:
            floors = eigenvalue_bound(rho, phi, F, opts)
            omega_bound = error_lower_bound(rho, phi, F, opts)
            errs = [1.0 - solve_Theta_p(rho, phi, F, p=p, opts=opts).value
                    for p in (1.0, 0.75, 0.5)]
            return (float(g), floors.eigenvalue, omega_bound,
                    errs[0], errs[1], errs[2], "optimal")
        except SolverError as exc:
            return (float(g), math.nan, math.nan, math.nan, math.nan,
                    math.nan, f"trouble: {exc}")

    return _pmap(point, list(gammas), jobs)


def _probability_figure_rows(which: str, ps, opts: SolveOptions | None, jobs: int):
    rho = state_factory(which).mat
    phi = maximally_entangled(3).mat
    F = FreeSetSpec.ppt(3, 3)

    def point(p):
        try:
            res = solve_Theta_p(rho, phi, F, p=float(p), opts=opts)
            return (float(p), 1.0 - res.value, "optimal")
        except SolverError as exc:
            return (float(p), math.nan, f"trouble: {exc}")

    return _pmap(point, list(ps), jobs)


def figure_sweep(figure: str, opts: SolveOptions | None = None,
                 gammas=None, ps=None, jobs: int = 1) -> SweepResult:
    """Compute the data grid behind one named figure."""
    if figure not in FIGURES:
        raise ConfigError(f"unknown figure {figure!r}; pick one of {FIGURES}")
    t0 = time.perf_counter()
    if figure in ("2a", "2b", "2c"):
        copies = {"2a": 1, "2b": 2, "2c": 3}[figure]
        grid = tuple(gammas) if gammas is not None else \
            {"2a": GAMMA_GRID_1, "2b": GAMMA_GRID_2, "2c": GAMMA_GRID_3}[figure]
        rows = _error_figure_rows(grid, copies, opts, jobs)
        columns = FIGURE_2_COLUMNS
        extra = {"copies": copies, "theory": f"ppt {2**copies}x{2**copies}"}
    else:
        grid = tuple(ps) if ps is not None else P_GRID
        rows = _probability_figure_rows("figure3a" if figure == "3a" else "figure3b",
                                        grid, opts, jobs)
        columns = FIGURE_3_COLUMNS
        extra = {"theory": "ppt 3x3"}
    o = opts or SolveOptions()
    meta = {
        "figure": figure,
        "version": __version__,
        "grid_points": len(rows),
        "tolerances": {"gap": o.tol_gap, "feasibility": o.tol_feas},
        "wall_time_s": round(time.perf_counter() - t0, 3),
        **extra,
    }
    return SweepResult(columns, rows, meta)


# ---------------------------------------------------------------------------
# generic trade-off sweeps

_PROGRAMS = ("H_P", "H_P_aff", "H_eps", "Theta_p")


def _one_point(program, rho, phi, F, p, eps, t, opts):
    # returned as (value, probability, error) regardless of which quantity
    # the program optimises
    if program in ("H_P", "H_P_aff"):
        solve = solve_HP if program == "H_P" else solve_HP_aff
        res = solve(rho, F, t, opts)
        return res.value, res.value, 0.0
    if program == "H_eps":
        res = solve_HP_eps(rho, phi, F, eps, t, opts=opts)
        return res.value, res.value, res.eps
    res = solve_Theta_p(rho, phi, F, p, t, opts=opts)
    return res.value, res.p, 1.0 - res.value


def tradeoff_sweep(program: str, F: FreeSetSpec, sweep: str, grid,
                   rho=None, phi=None, p: float | None = None,
                   eps: float | None = None, t=None,
                   gamma_copies: int = 1,
                   opts: SolveOptions | None = None, jobs: int = 1) -> SweepResult:
    """Sweep one trade-off program along a parameter grid.

    ``sweep`` picks the swept quantity: "gamma" rebuilds a (possibly
    multi-copy) isotropic input per point, "p"/"eps" hold the state fixed
    and move the program parameter.
    """
    if program not in _PROGRAMS:
        raise ConfigError(f"unknown program {program!r}; pick one of {_PROGRAMS}")
    if sweep not in ("gamma", "p", "eps"):
        raise ConfigError(f"sweep parameter must be gamma, p, or eps, not {sweep!r}")
    if sweep == "gamma" and gamma_copies < 1:
        raise ConfigError("gamma sweeps need at least one copy")
    if sweep != "gamma" and rho is None:
        raise ConfigError(f"{sweep} sweeps need a fixed input state")
    if program in ("H_P", "H_P_aff") and t is None:
        raise ConfigError(f"{program} sweeps need an explicit cover scale t")
    if program == "H_eps" and eps is None and sweep != "eps":
        raise ConfigError("H_eps sweeps need the error parameter eps")
    if program == "Theta_p" and p is None and sweep != "p":
        raise ConfigError("Theta_p sweeps need the probability parameter p")
    grid = [float(x) for x in grid]
    if not grid:
        raise ConfigError("empty sweep grid")
    t0 = time.perf_counter()

    def point(x):
        r, pp, ee = rho, p, eps
        if sweep == "gamma":
            r = n_copies(isotropic_state(x), gamma_copies).mat
        elif sweep == "p":
            pp = x
        else:
            ee = x
        tick = time.perf_counter()
        try:
            value, pv, ev = _one_point(program, r, phi, F, pp, ee, t, opts)
            status = "optimal"
        except ProjrobError as exc:
            value, pv, ev, status = math.nan, math.nan, math.nan, f"trouble: {exc}"
        wall = (time.perf_counter() - tick) * 1000.0
        return (x, pv, ev, value, status, round(wall, 3))

    rows = _pmap(point, grid, jobs)
    o = opts or SolveOptions()
    meta = {
        "program": program,
        "sweep": sweep,
        "version": __version__,
        "grid_points": len(rows),
        "tolerances": {"gap": o.tol_gap, "feasibility": o.tol_feas},
        "wall_time_s": round(time.perf_counter() - t0, 3),
    }
    return SweepResult(SWEEP_COLUMNS, rows, meta)
