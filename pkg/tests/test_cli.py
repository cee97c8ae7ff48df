import copy
import json

import pytest

from canard_fractal import cli
from canard_fractal.cli import (EXIT_ASSUMPTION, EXIT_CONSISTENT, EXIT_INCONSISTENT, EXIT_NUMERIC,
                                dumps, load_config, main, run, shipped_configs)

SHIPPED = [
    ("hopf", "gbar_cubic", "consistent"),
    ("hopf", "asymmetric_linear", "consistent"),
    ("hopf", "symmetric", "inconclusive"),
    ("canard", "balanced_quartic", "consistent"),
    ("infinity", "unbounded_mismatch", "consistent"),
    ("infinity", "unbounded_n4k2", "consistent"),
    ("blowup", "blowup_quartic", "consistent"),
    ("blowup", "blowup_flat", "consistent"),
    ("verify", "verify_quartic", "consistent"),
    ("verify", "verify_unbounded", "consistent"),
    ("simulate", "relaxation_smooth", "consistent"),
    ("simulate", "saddle_node_eps02", "consistent"),
]


def test_every_shipped_config_is_exercised():
    names = {n for _, n, _ in SHIPPED} | {"saddle_node"}
    assert names == {p[:-5] for p in shipped_configs()}


@pytest.mark.parametrize("command,name,verdict", SHIPPED, ids=[n for _, n, _ in SHIPPED])
def test_shipped_configs(tmp_path, command, name, verdict):
    rep = run(command, name, tmp_path)
    assert rep.verdict == verdict, rep.error
    assert rep.exit_code == EXIT_CONSISTENT
    d = json.loads((tmp_path / "report.json").read_text())
    assert d["verdict"] == verdict and d["config"]["system_id"] == name
    assert "quad_tol" in d["config"]["analysis"] and d["config"]["seed"] == 0


def test_hopf_outputs_and_values(tmp_path):
    rep = run("hopf", "gbar_cubic", tmp_path)
    assert rep.invariants["m0"] == 3 and rep.predicted_dim == 0.5
    gap = rep.estimated_dims["start"]["gap_exponent"]
    assert abs(gap["value"] - 0.5) < 0.02
    for f in ("report.json", "orbit.csv", "sdi.csv", "ladder.csv"):
        assert (tmp_path / f).is_file()


def test_symmetric_reports_identity(tmp_path):
    rep = run("hopf", "symmetric", tmp_path)
    assert rep.invariants["m0"] is None and rep.invariants["m0_label"].startswith(">=")
    assert rep.details["degenerate"]["slow_relation"] == "identity"


def test_report_is_deterministic(tmp_path):
    run("blowup", "blowup_quartic", tmp_path / "a", seed=7)
    run("blowup", "blowup_quartic", tmp_path / "b", seed=7)
    a = (tmp_path / "a" / "report.json").read_bytes()
    assert a == (tmp_path / "b" / "report.json").read_bytes()
    run("blowup", "blowup_quartic", tmp_path / "c", seed=8)
    assert a != (tmp_path / "c" / "report.json").read_bytes()


def test_overrides_recorded(tmp_path):
    rep = run("hopf", "asymmetric_linear", tmp_path, quad_tol=1e-11, max_iter=500)
    assert rep.config["analysis"]["quad_tol"] == 1e-11
    assert rep.config["analysis"]["max_iter"] == 500


def test_inconsistent_exit_code(tmp_path):
    cfg = load_config("blowup_quartic")
    cfg["analysis"]["expect"]["beta_minus"] = 2.3
    rep = run("blowup", cfg, tmp_path)
    assert rep.verdict == "inconsistent" and rep.exit_code == EXIT_INCONSISTENT


def test_hopf_violation_exit_code(tmp_path):
    cfg = load_config("gbar_cubic")
    cfg["side"]["plus"]["G"]["poly"] = [0, 1]
    rep = run("hopf", cfg, tmp_path)
    assert rep.exit_code == EXIT_ASSUMPTION and "Hopf" in rep.error
    assert json.loads((tmp_path / "report.json").read_text())["exit_code"] == EXIT_ASSUMPTION


def test_unsupported_k0_exit_code(tmp_path):
    cfg = load_config("unbounded_mismatch")
    cfg["classical"]["a1_minus"] = 1.0
    rep = run("infinity", cfg, tmp_path)
    assert rep.exit_code == EXIT_ASSUMPTION and "UnsupportedCase" in rep.error


def test_bad_config(tmp_path):
    assert run("hopf", tmp_path / "missing.json", tmp_path).exit_code == EXIT_ASSUMPTION
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run("hopf", bad, tmp_path).exit_code == EXIT_ASSUMPTION
    cfg = copy.deepcopy(load_config("gbar_cubic"))
    del cfg["system_id"]
    assert run("hopf", cfg, tmp_path).exit_code == EXIT_ASSUMPTION


def test_numeric_failure_at_small_eps(tmp_path):
    rep = run("simulate", "saddle_node", tmp_path)
    assert rep.exit_code == EXIT_NUMERIC and rep.verdict == "inconclusive"
    cyc = json.loads((tmp_path / "cycles.json").read_text())
    assert all(c == -1 for c in cyc["sweep"]["counts"])
    assert all(c == 0 for v in cyc["controls"].values() for c in v["counts"])


def test_main_entry_point(tmp_path, capsys):
    code = main(["verify", "--config", "verify_quartic", "--out", str(tmp_path), "--seed", "3"])
    assert code == 0
    assert "consistent" in capsys.readouterr().out
    with pytest.raises(SystemExit):
        main(["verify", "--config", "verify_quartic", "--seed", "-1"])


def test_dumps_formatting():
    s = dumps({"b": 0.1, "a": [1, float("nan"), True, None], "c": 1e-300})
    assert s.index('"a"') < s.index('"b"')
    assert "0.10000000000000001" in s and "null" in s and '"c": 1e-300' in s
    assert json.loads(s)["a"] == [1, None, True, None]


def test_config_from_file(tmp_path):
    src = load_config("asymmetric_linear")
    p = tmp_path / "c.json"
    p.write_text(json.dumps(src))
    assert run("hopf", p, tmp_path / "o").verdict == "consistent"
    assert cli.build_system(src)[0].name == "asymmetric_linear"
