import json
import subprocess
import sys
from fractions import Fraction
from pathlib import Path

import pytest

from factprob import cli, runner
from factprob.errors import GridBoundsError
from factprob.painting import factual_law, generate_painting
from factprob.scenario import KINDS, load_scenario, parse_scenario

SCENARIOS = Path(__file__).resolve().parents[1] / "scripts" / "scenarios"
PAINTING = {"seed": 7, "colour_counts": {"1": 10, "2": 2, "3": 88}}


def _write(tmp_path, doc, name="s.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return p


def _run(path, out, *extra):
    return cli.main(["run", str(path), "--out-dir", str(out), *extra])


def test_every_kind_has_an_example_scenario():
    kinds = {json.loads(p.read_text())["kind"] for p in SCENARIOS.glob("*.json")}
    assert kinds == set(KINDS)


@pytest.mark.parametrize("path", sorted(SCENARIOS.glob("*.json")), ids=lambda p: p.stem)
def test_example_scenarios_validate(path, capsys):
    assert cli.main(["validate", str(path)]) == 0
    assert capsys.readouterr().out.startswith("ok:")


def test_probability_game_is_byte_identical(tmp_path):
    doc = {"kind": "probability-game", "seed": 42, "painting": PAINTING, "params": {"N": 20000}}
    path = _write(tmp_path, doc)
    assert _run(path, tmp_path / "a") == 0 and _run(path, tmp_path / "b") == 0
    for name in ("report.json", "convergence.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    head = (tmp_path / "a" / "convergence.csv").read_text().splitlines()[0]
    assert head == "N,label,freq"


def test_manifest_records_run(tmp_path):
    doc = {"kind": "puzzle-coords", "seed": 3, "painting": PAINTING}
    path = _write(tmp_path, doc)
    assert _run(path, tmp_path / "o") == 0
    man = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert man["seed"] == 3 and man["outputs"] == ["report.json"]
    assert len(man["scenario_digest"]) == 64 and man["started"] <= man["finished"]
    rep = json.loads((tmp_path / "o" / "report.json").read_text())
    assert rep["scenario_digest"] == man["scenario_digest"]
    assert "started" not in json.dumps(rep)


def test_seed_override(tmp_path):
    doc = {"kind": "probability-game", "seed": 1, "painting": PAINTING, "params": {"N": 500}}
    path = _write(tmp_path, doc)
    _run(path, tmp_path / "a")
    _run(path, tmp_path / "b", "--seed", "2")
    a = json.loads((tmp_path / "a" / "report.json").read_text())
    b = json.loads((tmp_path / "b" / "report.json").read_text())
    assert b["seed"] == 2 and a["scenario_digest"] != b["scenario_digest"]
    assert a["result"]["counts"] != b["result"]["counts"]


def test_semint_urn_report_matches_factual_law(tmp_path):
    assert _run(SCENARIOS / "semint_urn.json", tmp_path) == 0
    rep = json.loads((tmp_path / "report.json").read_text())["result"]
    law = factual_law(generate_painting(7, {1: 10, 2: 2, 3: 88}))
    got = {e["label"]: Fraction(e["num"], e["den"]) for e in rep["estimate"]}
    assert got == dict(law.items())
    d = rep["decomposition"]
    assert d["N"] == d["K"] * d["n_T"] + d["N_prime"]
    assert all(v["equal"] for v in rep["residuals"].values())


def test_lln_scenario_passes(tmp_path):
    assert _run(SCENARIOS / "lln_die.json", tmp_path) == 0
    rep = json.loads((tmp_path / "report.json").read_text())["result"]
    assert rep["pass"] is True and {"fraction", "bound", "pass", "empirical_N0"} <= set(rep)
    assert rep["bound"] == {"num": 19, "den": 20}


def test_plot_kinds(tmp_path, capsys):
    _run(SCENARIOS / "semint_die.json", tmp_path / "s")
    capsys.readouterr()
    assert cli.main(["plot", str(tmp_path / "s" / "report.json"), "--kind", "saturation"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "trial,replica,cells_on_Y1" and len(lines) == 2001
    assert (tmp_path / "s" / "saturation.csv").read_text().splitlines() == lines


def test_plot_compare_round_trips(tmp_path):
    doc = {"kind": "compare", "seed": 4, "phenomenon": {"type": "dice", "zone": [0, 10, 0, 10],
                                                        "orientation_unit": None},
           "params": {"schedule": [200, 1500], "runs": 2}}
    path = _write(tmp_path, doc)
    assert _run(path, tmp_path / "c") == 0
    out = tmp_path / "plot.csv"
    assert cli.main(["plot", str(tmp_path / "c" / "report.json"), "--kind", "compare", "--out", str(out)]) == 0
    assert out.read_text() == (tmp_path / "c" / "compare.csv").read_text()
    assert out.read_text().splitlines()[0] == "N,estimator,l1,saturated,K"


def test_plot_errors(tmp_path, capsys):
    _run(SCENARIOS / "puzzle_coords.json", tmp_path)
    assert cli.main(["plot", str(tmp_path / "report.json"), "--kind", "nope"]) == 2
    assert cli.main(["plot", str(tmp_path / "report.json"), "--kind", "saturation"]) == 2
    assert cli.main(["plot", str(tmp_path / "missing.json"), "--kind", "compare"]) == 2


@pytest.mark.parametrize(
    "doc,path",
    [
        ({"kind": "lln-check", "seed": 1, "phenomenon": {"type": "dice"},
          "params": {"epsilon": 1.5, "label": 3}}, "params.epsilon"),
        ({"kind": "lln-check", "phenomenon": {"type": "dice"}, "params": {"label": 3}}, "seed"),
        ({"kind": "semint-run", "seed": 1, "phenomenon": {"type": "dice", "unit": -1}}, "phenomenon.unit"),
        ({"kind": "bogus", "seed": 1}, "kind"),
        ({"kind": "puzzle-borders", "seed": 1, "painting": {"seed": 1, "colour_counts": {"1": 50}}},
         "painting.colour_counts"),
        ({"kind": "semint-run", "seed": 1, "phenomenon": {"type": "dice"}, "params": {"inflation": 1.1}},
         "params.inflation"),
        ({"kind": "semint-run", "seed": 1, "phenomenon": {"type": "dice"}, "params": {"Nq": 3}}, "params.Nq"),
        ({"kind": "pre-tree", "seed": 1, "channels": [{"id": "B", "universe": [],
                                                      "sampler": {"type": "constant"}}]},
         "channels[0].universe"),
        ({"kind": "lln-check", "seed": 1, "phenomenon": {"type": "dice"}, "params": {"label": 9}},
         "params.label"),
    ],
)
def test_validation_errors_name_the_field(tmp_path, capsys, doc, path):
    p = _write(tmp_path, doc)
    assert cli.main(["validate", str(p)]) == 2
    assert cli.main(["run", str(p), "--out-dir", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    assert f"error: {path}:" in err
    assert not (tmp_path / "o").exists()


def test_malformed_json_is_a_validation_error(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert cli.main(["validate", str(p)]) == 2
    assert "scenario:" in capsys.readouterr().err


def test_painting_file_reference(tmp_path):
    generate_painting(7, {1: 10, 2: 2, 3: 88}).save(tmp_path / "p.json")
    sc = parse_scenario({"kind": "puzzle-coords", "seed": 1, "painting": {"file": "p.json"}}, tmp_path)
    assert sc.build_painting() == generate_painting(7, {1: 10, 2: 2, 3: 88})


def test_invariant_breach_exit_code(tmp_path, capsys, monkeypatch):
    def boom(sc, jobs):
        raise GridBoundsError("outcome outside the points-grid")

    monkeypatch.setitem(runner.RUNNERS, "semint-run", boom)
    assert _run(SCENARIOS / "semint_die.json", tmp_path) == 3
    assert "invariant breach [grid-bounds]" in capsys.readouterr().err


def test_jobs_do_not_change_reports(tmp_path):
    doc = json.loads((SCENARIOS / "lln_die.json").read_text())
    doc["params"]["M"] = 60
    p = _write(tmp_path, doc)
    _run(p, tmp_path / "a")
    _run(p, tmp_path / "b", "--jobs", "2")
    assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "factprob", "validate", str(SCENARIOS / "pre_tree.json")],
                         capture_output=True, text=True)
    assert out.returncode == 0 and "pre-tree" in out.stdout


def test_digest_ignores_key_order(tmp_path):
    a = _write(tmp_path, {"seed": 1, "kind": "puzzle-coords", "painting": PAINTING}, "a.json")
    b = _write(tmp_path, {"painting": PAINTING, "kind": "puzzle-coords", "seed": 1}, "b.json")
    assert load_scenario(a).digest() == load_scenario(b).digest()
