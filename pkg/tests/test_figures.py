"""Sweep grids, file writers, and determinism of the figure engines."""

from __future__ import annotations

import json
import math

import numpy as np
import pytest

from projrob.errors import ConfigError
from projrob.figures import (
    FIGURE_2_COLUMNS,
    FIGURE_3_COLUMNS,
    SWEEP_COLUMNS,
    SweepResult,
    embedded_bell_pair,
    figure_sweep,
    render_png,
    tradeoff_sweep,
    write_csv,
    write_json,
)
from projrob.free_sets import FreeSetSpec
from projrob.operators import isotropic_state, maximally_entangled, state_factory

PPT = FreeSetSpec.ppt(2, 2)


# ---- grids -----------------------------------------------------------------


def test_figure_2a_closed_forms():
    res = figure_sweep("2a", gammas=(0.2, 0.4, 0.6))
    assert res.columns == FIGURE_2_COLUMNS
    assert res.metadata["copies"] == 1
    for row, g in zip(res.rows, (0.2, 0.4, 0.6)):
        gamma, eig, omega, e1, e075, e05, status = row
        assert gamma == g and status == "optimal"
        assert eig == pytest.approx(g / (16 - 12 * g), rel=1e-5)
        assert omega == pytest.approx(0.75 * g, rel=1e-5)
        # the one-copy isotropic trade-off is flat in the success probability
        for e in (e1, e075, e05):
            assert e == pytest.approx(0.75 * g, abs=1e-4)


def test_figure_3a_perfect_point_and_decay():
    res = figure_sweep("3a", ps=(0.3, 0.5))
    assert res.columns == FIGURE_3_COLUMNS
    (p1, e1, s1), (p2, e2, s2) = res.rows
    assert s1 == s2 == "optimal"
    assert e1 <= 1e-6
    assert e2 > 1e-4


def test_figure_3b_error_bounded_away():
    res = figure_sweep("3b", ps=(0.2,))
    _, err, status = res.rows[0]
    assert status == "optimal"
    assert 1e-4 < err < 1.0


def test_embedded_bell_pair_regroups():
    one = embedded_bell_pair(1)
    np.testing.assert_allclose(one, maximally_entangled(2).mat, atol=1e-12)
    two = embedded_bell_pair(2)
    assert two.shape == (16, 16)
    assert np.trace(two).real == pytest.approx(1.0)
    # still rank one and pure
    evals = np.linalg.eigvalsh(two)
    assert evals[-1] == pytest.approx(1.0, abs=1e-12)


def test_figure_guards():
    with pytest.raises(ConfigError, match="unknown figure"):
        figure_sweep("7f")


def test_parallel_rows_match_serial():
    serial = figure_sweep("2a", gammas=(0.2, 0.35, 0.5), jobs=1)
    threaded = figure_sweep("2a", gammas=(0.2, 0.35, 0.5), jobs=2)
    assert serial.rows == threaded.rows


# ---- trade-off sweeps ------------------------------------------------------


def test_tradeoff_sweep_probability_grid():
    rho = isotropic_state(0.4).mat
    phi = maximally_entangled(2).mat
    res = tradeoff_sweep("Theta_p", PPT, "p", (0.5, 1.0), rho=rho, phi=phi, t=2.0)
    assert res.columns == SWEEP_COLUMNS
    for x, p, eps, value, status, wall in res.rows:
        assert p == x and status == "optimal"
        assert value == pytest.approx(0.7, abs=1e-6)
        assert eps == pytest.approx(0.3, abs=1e-6)
        assert wall >= 0.0


def test_tradeoff_sweep_eps_grid():
    rho = state_factory("figure3a").mat
    phi = maximally_entangled(3).mat
    res = tradeoff_sweep("H_eps", FreeSetSpec.ppt(3, 3), "eps", (0.0, 1.0),
                         rho=rho, phi=phi, t=3.0)
    (x0, p0, e0, v0, s0, _), (x1, p1, e1, v1, s1, _) = res.rows
    assert s0 == s1 == "optimal"
    assert v0 == pytest.approx(0.30481, abs=2e-4)
    assert v1 == pytest.approx(1.0, abs=1e-6)
    assert (e0, e1) == (0.0, 1.0)


def test_tradeoff_sweep_guards():
    rho = isotropic_state(0.4).mat
    with pytest.raises(ConfigError, match="unknown program"):
        tradeoff_sweep("Xi", PPT, "gamma", (0.2,), t=1.0)
    with pytest.raises(ConfigError, match="gamma, p, or eps"):
        tradeoff_sweep("H_P", PPT, "q", (0.2,), t=1.0)
    with pytest.raises(ConfigError, match="fixed input state"):
        tradeoff_sweep("H_P", PPT, "p", (0.5,), t=1.0)
    with pytest.raises(ConfigError, match="cover scale"):
        tradeoff_sweep("H_P", PPT, "gamma", (0.2,))
    with pytest.raises(ConfigError, match="eps"):
        tradeoff_sweep("H_eps", PPT, "gamma", (0.2,), t=1.0)
    with pytest.raises(ConfigError, match="probability"):
        tradeoff_sweep("Theta_p", PPT, "gamma", (0.2,), t=1.0)
    with pytest.raises(ConfigError, match="empty"):
        tradeoff_sweep("H_P", PPT, "gamma", (), t=1.0)
    with pytest.raises(ConfigError, match="at least one copy"):
        tradeoff_sweep("H_P", PPT, "gamma", (0.2,), t=1.0, gamma_copies=0)


# ---- writers ---------------------------------------------------------------


def test_csv_formatting(tmp_path):
    res = SweepResult(("a", "b", "c"),
                      [(0.25, math.inf, "ok"), (math.nan, None, "x")])
    out = tmp_path / "t.csv"
    write_csv(res, out)
    assert out.read_text() == "a,b,c\n0.25,inf,ok\nnan,,x\n"


def test_json_round_trip(tmp_path):
    res = figure_sweep("3a", ps=(0.3,))
    out = tmp_path / "t.json"
    write_json(res, out)
    doc = json.loads(out.read_text())
    assert doc["columns"] == list(FIGURE_3_COLUMNS)
    assert doc["metadata"]["figure"] == "3a"
    assert doc["rows"][0][0] == 0.3


def test_figure_csv_is_byte_stable(tmp_path):
    paths = []
    for k in range(2):
        res = figure_sweep("2a", gammas=(0.2, 0.5))
        p = tmp_path / f"run{k}.csv"
        write_csv(res, p)
        paths.append(p)
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_tradeoff_rows_stable_once_timing_masked():
    rho = isotropic_state(0.4).mat
    phi = maximally_entangled(2).mat
    runs = [tradeoff_sweep("Theta_p", PPT, "p", (0.4, 0.8), rho=rho, phi=phi,
                           t=2.0) for _ in range(2)]
    masked = [[row[:5] for row in r.rows] for r in runs]
    assert masked[0] == masked[1]


def test_render_png(tmp_path):
    for res in (figure_sweep("2a", gammas=(0.2, 0.4)),
                figure_sweep("3a", ps=(0.3, 0.5)),
                tradeoff_sweep("Theta_p", PPT, "p", (0.5, 1.0),
                               rho=isotropic_state(0.4).mat,
                               phi=maximally_entangled(2).mat, t=2.0)):
        out = tmp_path / "plot.png"
        render_png(res, out)
        assert out.stat().st_size > 1000
        out.unlink()
