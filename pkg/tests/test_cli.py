"""End-to-end command-line checks through main(argv) return codes."""

from __future__ import annotations

import json

import pytest

from projrob.cli import main
from projrob.distill import overhead_bound
from projrob.free_sets import FreeSetSpec
from projrob.operators import isotropic_state, maximally_entangled


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# ---- monotone --------------------------------------------------------------


def test_monotone_finite_value(capsys):
    code, out, _ = run(capsys, "monotone", "omega",
                       "--state", "isotropic:0.4", "--theory", "ppt:2,2")
    assert code == 0
    assert out.splitlines()[0].startswith("value: 2.333333333")
    assert "status: optimal" in out


def test_monotone_certified_infinite(capsys):
    code, out, _ = run(capsys, "monotone", "omega",
                       "--state", "bell:2", "--theory", "ppt:2,2")
    assert code == 0
    assert "value: infinite (certified)" in out
    assert "witness: independently verified" in out


def test_monotone_json_mode(capsys):
    code, out, _ = run(capsys, "monotone", "robustness", "--json",
                       "--state", "isotropic:0.4", "--theory", "ppt:2,2")
    assert code == 0
    doc = json.loads(out)
    assert doc["monotone"] == "robustness"
    assert doc["value"] == pytest.approx(1.4, rel=1e-6)
    assert doc["certified_infinite"] is False


def test_scalar_monotone(capsys):
    code, out, _ = run(capsys, "monotone", "pure-overlap", "--json",
                       "--state", "bell:2", "--theory", "ppt:2,2")
    assert code == 0
    assert json.loads(out)["value"] == pytest.approx(0.5, rel=1e-6)


def test_monotone_optimizers_flag(capsys):
    code, out, _ = run(capsys, "monotone", "omega", "--optimizers",
                       "--state", "isotropic:0.4", "--theory", "ppt:2,2")
    assert code == 0
    assert "optimizer:" in out and "dual_A:" in out


# ---- error handling --------------------------------------------------------


def test_malformed_state_json_exits_one(capsys):
    code, _, err = run(capsys, "monotone", "omega",
                       "--state", "{not json", "--theory", "ppt:2,2")
    assert code == 1
    assert "config error" in err


def test_bad_usage_exits_one(capsys):
    code, _, err = run(capsys, "monotone", "omega", "--no-such-flag")
    assert code == 1
    assert "config error" in err
    code, _, err = run(capsys, "frobnicate")
    assert code == 1


def test_missing_t_exits_one(capsys):
    code, _, err = run(capsys, "tradeoff", "--program", "H_P",
                       "--state", "isotropic:0.4", "--theory", "ppt:2,2")
    assert code == 1
    assert "needs --t" in err


def test_help_raises_systemexit_zero(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--help"])
    assert exc.value.code == 0


def test_config_file_merge(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"state": "isotropic:0.4", "theory": "ppt:2,2"}))
    code, out, _ = run(capsys, "monotone", "omega", "--config", str(cfg))
    assert code == 0
    assert out.startswith("value: 2.333333333")


# ---- bound -----------------------------------------------------------------


def test_bound_report(capsys):
    code, out, _ = run(capsys, "bound", "--json",
                       "--state", "isotropic:0.4", "--theory", "ppt:2,2",
                       "--target", "bell:2", "--eps", "1e-3")
    assert code == 0
    doc = json.loads(out)
    assert doc["error_floor"] == pytest.approx(0.3, rel=1e-5)
    assert doc["achievable_error"] == pytest.approx(0.3, rel=1e-5)
    assert doc["exact"] is True
    want = overhead_bound(isotropic_state(0.4).mat, maximally_entangled(2).mat,
                          FreeSetSpec.ppt(2, 2), 1e-3)
    assert doc["copies_needed"] == pytest.approx(want, rel=1e-9)


def test_bound_nogo_audit(capsys):
    code, out, _ = run(capsys, "bound", "--json",
                       "--state", "isotropic:0.4", "--theory", "ppt:2,2",
                       "--target", "bell:2", "--nogo", "0.3", "0.2")
    assert code == 0
    nogo = json.loads(out)["nogo"]
    assert nogo["verdict"] == "impossible"
    assert nogo["available"] == pytest.approx(7 / 3, rel=1e-5)
    assert nogo["required"] == pytest.approx(4.0, rel=1e-5)


# ---- tradeoff --------------------------------------------------------------


def test_tradeoff_theta(capsys):
    code, out, _ = run(capsys, "tradeoff", "--program", "Theta_p", "--json",
                       "--state", "isotropic:0.4", "--theory", "ppt:2,2",
                       "--target", "bell:2", "--p", "1", "--t", "2")
    assert code == 0
    doc = json.loads(out)
    assert doc["value"] == pytest.approx(0.7, abs=1e-6)
    assert doc["p"] == pytest.approx(1.0)
    assert doc["eps"] is None  # only the smoothed-cover program reports eps
    assert doc["gap"] < 1e-6


def test_tradeoff_infinite_cover(capsys):
    code, out, _ = run(capsys, "tradeoff", "--program", "H_P", "--json",
                       "--state", "isotropic:0.4", "--theory", "ppt:2,2",
                       "--t", "inf")
    assert code == 0
    assert json.loads(out)["t"] == "inf"


# ---- sweep -----------------------------------------------------------------


def test_sweep_figure_writes_files(tmp_path, capsys):
    code, out, _ = run(capsys, "sweep", "--figure", "2a", "--grid", "0.2,0.4",
                       "--out", str(tmp_path), "--format", "csv", "--jobs", "2")
    assert code == 0
    assert (tmp_path / "figure_2a.csv").exists()
    assert (tmp_path / "figure_2a.png").exists()
    assert not (tmp_path / "figure_2a.json").exists()
    assert "rows: 2  troubled: 0" in out
    body = (tmp_path / "figure_2a.csv").read_text().splitlines()
    assert body[0].startswith("gamma,")
    assert body[1].startswith("0.2,")


def test_sweep_program_writes_files(tmp_path, capsys):
    code, out, _ = run(capsys, "sweep", "--program", "Theta_p", "--sweep", "p",
                       "--grid", "0.5:1:2", "--state", "isotropic:0.4",
                       "--target", "bell:2", "--theory", "ppt:2,2", "--t", "2",
                       "--out", str(tmp_path), "--format", "json")
    assert code == 0
    doc = json.loads((tmp_path / "sweep_Theta_p_p.json").read_text())
    assert doc["metadata"]["program"] == "Theta_p"
    for row in doc["rows"]:
        assert row[3] == pytest.approx(0.7, abs=1e-6)
    assert (tmp_path / "sweep_Theta_p_p.png").exists()


def test_sweep_slow_gate(capsys):
    code, _, err = run(capsys, "sweep", "--figure", "2c")
    assert code == 1
    assert "--slow" in err


# ---- decide / protocol / discriminate --------------------------------------


def test_decide_verdicts(capsys):
    code, out, _ = run(capsys, "decide", "--state", "isotropic:0.4",
                       "--target", "isotropic:0.55", "--theory", "ppt:2,2")
    assert code == 0
    assert "verdict: Yes-with-map" in out
    code, out, _ = run(capsys, "decide", "--state", "isotropic:0.4",
                       "--target", "isotropic:0.2", "--theory", "ppt:2,2")
    assert code == 0
    assert "verdict: No" in out


def test_protocol_round_trip(tmp_path, capsys):
    dest = tmp_path / "map.json"
    code, out, _ = run(capsys, "protocol", "build", "--kind", "distill",
                       "--state", "isotropic:0.4", "--target", "bell:2",
                       "--theory", "ppt:2,2", "--p", "1", "--t", "2",
                       "--out", str(dest))
    assert code == 0
    assert dest.exists()
    assert "passed: True" in out

    code, out, _ = run(capsys, "protocol", "verify", "--map", str(dest),
                       "--theory", "ppt:2,2")
    assert code == 0
    assert "passed: True" in out

    code, out, _ = run(capsys, "protocol", "apply", "--map", str(dest),
                       "--state", "isotropic:0.4", "--json")
    assert code == 0
    doc = json.loads(out)
    assert doc["probability"] == pytest.approx(1.0, abs=1e-6)


def test_protocol_build_nogo_reported(capsys):
    code, out, _ = run(capsys, "protocol", "build", "--kind", "convert",
                       "--state", "isotropic:0.4", "--target", "isotropic:0.2",
                       "--theory", "ppt:2,2", "--out", "/dev/null")
    assert code == 0
    assert "no-go:" in out


def test_discriminate_finite(capsys):
    code, out, _ = run(capsys, "discriminate", "--state", "isotropic:0.4",
                       "--theory", "ppt:2,2", "--random", "4")
    assert code == 0
    assert out.startswith("omega: 2.333333333")
    assert "constructed ratio:" in out
    assert "audit: 4 random instances" in out


def test_discriminate_unbounded(capsys):
    code, out, _ = run(capsys, "discriminate", "--state", "bell:2",
                       "--theory", "ppt:2,2")
    assert code == 0
    assert "omega: infinite (certified)" in out
    assert "advantage: unbounded" in out
