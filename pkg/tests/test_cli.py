import csv
import json
import shutil
from pathlib import Path

import numpy as np
import pytest

from qnsym.cli import main
from qnsym.config import ConfigError, load_config, make_grid, parse_config

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
SHORT = ["--grid-start", "2.05", "--grid-stop", "3.0", "--grid-step", "0.05"]


def _base_config(**over):
    cfg = {
        "model": {"kind": "tfim", "n_sites": 4, "coupling": 1.5},
        "state": {"kind": "thermal", "beta": 1.0},
        "observable": {"kind": "collective-z"},
        "times": [0.0, 2.0, None],
        "grid": {"start": 2.05, "stop": 2.5, "step": 0.05},
        "correlations": ["W:213"],
    }
    cfg.update(over)
    return cfg


# --- grids and config parsing -----------------------------------------------

def test_make_grid_inclusive():
    g = make_grid(2.05, 8.0, 0.05)
    assert len(g) == 120 and g[0] == 2.05 and g[-1] == 8.0
    assert np.all(np.diff(g) > 0)


def test_parse_minimal():
    cfg = parse_config(_base_config())
    assert cfg.axis == 3
    assert cfg.model.n_sites == 4 and cfg.state.beta == 1.0


@pytest.mark.parametrize("mutation, path", [
    ({"model": {"kind": "tfim", "n_sites": "eight"}}, "model.n_sites"),
    ({"model": {"kind": "heisenberg"}}, "model.kind"),
    ({"state": {"kind": "thermal", "beta": -1}}, "state.beta"),
    ({"times": [0.0, None, None]}, "times"),
    ({"correlations": ["C:+-"]}, "times"),
    ({"correlations": [{"label": "C:+-", "times": [0.0]}]}, "correlations[0].times"),
    ({"correlations": ["W:113"]}, "correlations[0]"),
    ({"grid": {"start": 1.0, "stop": 3.0, "step": 0.1}}, "correlations[0]"),
    ({"grid": {"start": 3.0, "stop": 2.5, "step": 0.1}}, "grid"),
    ({"bogus": 1}, "bogus"),
])
def test_config_errors_name_the_field(mutation, path):
    with pytest.raises(ConfigError) as info:
        parse_config(_base_config(**mutation))
    assert info.value.path.startswith(path)


def test_load_config_bad_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(p)


def test_shipped_configs_parse():
    for p in CONFIGS.glob("*.json"):
        load_config(p)


# --- ranks ------------------------------------------------------------------

def test_ranks_output(tmp_path, capsys):
    assert main(["ranks", "5", "--out", str(tmp_path)]) == 0
    rows = list(csv.reader((tmp_path / "ranks_5.csv").open(encoding="utf-8")))
    assert rows == [["rank", "count"], ["1", "16"], ["2", "88"], ["3", "16"]]
    assert "120 orderings" in capsys.readouterr().out


def test_ranks_guard():
    assert main(["ranks", "9"]) == 2


def test_help_lists_defaults(capsys):
    with pytest.raises(SystemExit):
        main(["fig4", "--help"])
    text = capsys.readouterr().out
    assert "default: 1.0" in text and "default: 2.05" in text


def test_negative_beta_rejected():
    with pytest.raises(SystemExit) as info:
        main(["fig4", "b", "--beta", "-1"])
    assert info.value.code == 2


# --- table1 / fig4 ----------------------------------------------------------

def test_table1_small_chain(tmp_path):
    assert main(["table1", "--n", "6", "--out", str(tmp_path), *SHORT]) == 0
    report = json.loads((tmp_path / "table1.json").read_text(encoding="utf-8"))
    assert report["confirmed"] and len(report["rows"]) == 12
    for name in ("table1.csv", "table1_antisymmetric.csv", "table1_symmetric.csv"):
        assert (tmp_path / name).exists()


def test_fig4a_small_chain(tmp_path):
    assert main(["fig4", "a", "--n", "4", "--out", str(tmp_path), *SHORT]) == 0
    header = (tmp_path / "fig4a.csv").read_text(encoding="utf-8").splitlines()[0]
    assert header == "t3,C:+--,C:++-,C:+-+,C:+++"


def test_fig4b_output_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["fig4", "b", "--n", "4", "--out", str(out), *SHORT]) == 0
    assert (a / "fig4b.csv").read_bytes() == (b / "fig4b.csv").read_bytes()
    assert (a / "fig4b.json").read_bytes() == (b / "fig4b.json").read_bytes()
    header = (a / "fig4b.csv").read_text(encoding="utf-8").splitlines()[0]
    assert header == "t3,W:213.re,W:213.im,W:21'3.re,W:21'3.im"


def test_fig4b_negative_control_fails(tmp_path):
    assert main(["fig4", "b", "--n", "4", "--t-breaking", "0.3", *SHORT]) == 1


def test_csv_full_precision(tmp_path):
    main(["fig4", "b", "--n", "4", "--out", str(tmp_path), *SHORT])
    rows = list(csv.reader((tmp_path / "fig4b.csv").open(encoding="utf-8")))
    for cell in rows[5][1:]:
        digits = cell.lstrip("-").split("e")[0].replace(".", "").lstrip("0")
        assert len(digits) >= 15, cell


# --- eval -------------------------------------------------------------------

def test_eval_toy_closed_form(tmp_path):
    assert main(["eval", str(CONFIGS / "toy_spin.json"), "--out", str(tmp_path)]) == 0
    rows = list(csv.DictReader((tmp_path / "toy_spin.csv").open(encoding="utf-8")))
    t = np.array([float(r["t2"]) for r in rows])
    np.testing.assert_allclose([float(r["C:++"]) for r in rows], np.cos(2 * t), atol=1e-13)
    np.testing.assert_allclose([float(r["C:+-"]) for r in rows], 0.0, atol=1e-13)


def test_eval_theorem_config(tmp_path):
    cfg = _base_config(theorems=[{"theorem": "T", "sigma": "213", "times": [0.0, 2.0, 5.0]},
                                 {"theorem": "S", "sigma": "12", "times": [0.0, 1.0]}],
                       route_checks={"instances": 20, "seed": 1})
    cfg["state"] = {"kind": "maximally-mixed"}
    p = tmp_path / "run.json"
    p.write_text(json.dumps(cfg), encoding="utf-8")
    assert main(["eval", "--config", str(p), "--seed", "4"]) == 0
    report = json.loads((tmp_path / "eval.json").read_text(encoding="utf-8"))
    assert [t["passed"] for t in report["theorems"]] == [True, True]
    assert report["route_check"]["seed"] == 4


def test_eval_reports_unmet_precondition(tmp_path):
    # C-symmetry fails for a thermal state; the run completes and reports a violation
    cfg = _base_config(theorems=[{"theorem": "C", "sigma": "12", "times": [0.0, 1.0]}])
    p = tmp_path / "run.json"
    p.write_text(json.dumps(cfg), encoding="utf-8")
    assert main(["eval", str(p)]) == 1
    report = json.loads((tmp_path / "eval.json").read_text(encoding="utf-8"))
    assert "error" in report["theorems"][0]


def test_eval_invalid_config_exit_code(tmp_path, capsys):
    p = tmp_path / "run.json"
    p.write_text(json.dumps(_base_config(grid={"start": 1.0, "stop": 2.5, "step": 0.5})),
                 encoding="utf-8")
    assert main(["eval", str(p)]) == 2
    assert "violates time ordering" in capsys.readouterr().err


def test_eval_grid_override_checked(tmp_path):
    shutil.copy(CONFIGS / "toy_spin.json", tmp_path / "toy.json")
    assert main(["eval", str(tmp_path / "toy.json"), "--grid-start", "-1"]) == 2


def test_eval_needs_path():
    with pytest.raises(SystemExit):
        main(["eval"])
