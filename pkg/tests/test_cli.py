import csv
import io
import json
import re

import pytest

from latent_fpr import report
from latent_fpr.cli import ConfigError, main, parse_config
from latent_fpr.model import MDPD_OBSERVED, PRESET_NAMES, StudyDesign, preset_rate_vectors
from latent_fpr.simulator import CellSummary, SimulationSummary, run_study


@pytest.fixture(scope="module")
def small_summary():
    return run_study(5, StudyDesign(), preset_rate_vectors("observed"), 40, keep_per_iteration=True)


def write_json(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def test_parse_simulate_flags():
    cfg = parse_config(["simulate", "--rates", "mdpd", "--iterations", "1000", "--seed", "7"])
    assert (cfg.command, cfg.rate_preset, cfg.iterations, cfg.seed) == ("simulate", "mdpd", 1000, 7)
    assert cfg.rates == preset_rate_vectors("mdpd")


def test_parse_defaults():
    cfg = parse_config(["report-all"])
    assert cfg.rate_preset == "observed"
    assert (cfg.iterations, cfg.seed, cfg.output_format) == (1000, 0, "table")
    assert cfg.repartition and not cfg.keep_per_iteration


def test_quick_flag():
    assert parse_config(["simulate", "--quick"]).iterations == 50


def test_file_config_and_precedence(tmp_path):
    file_cfg = {"iterations": 20, "seed": 3, "rates": "osac", "design": {"phase1_packets": 10}}
    cfg = parse_config(["simulate", "--seed", "9"], file_cfg)
    assert (cfg.iterations, cfg.seed, cfg.rate_preset) == (20, 9, "osac")
    assert cfg.design.phase1_packets == 10
    path = write_json(tmp_path, "cfg.json", file_cfg)
    cfg = parse_config(["simulate", "--config", path])
    assert cfg.seed == 3


def test_rate_file_bad_sum(tmp_path):
    doc = preset_rate_vectors("observed").to_dict()
    doc["rSP"]["correct_id"] += 0.05
    path = write_json(tmp_path, "rates.json", doc)
    with pytest.raises(ConfigError, match="rSP"):
        parse_config(["simulate", "--rates", path])


def test_rate_file_structural_violation(tmp_path):
    doc = preset_rate_vectors("observed").to_dict()
    doc["rSA"]["correct_id"] = 0.1
    doc["rSA"]["correct_exclusion"] -= 0.1
    path = write_json(tmp_path, "rates.json", doc)
    with pytest.raises(ConfigError, match="rSA"):
        parse_config(["simulate", "--rates", path])


def test_rate_file_round_trip(tmp_path):
    rates = preset_rate_vectors("altCommon")
    path = write_json(tmp_path, "rates.json", rates.to_dict())
    cfg = parse_config(["simulate", "--rates", path])
    assert cfg.rate_file == path
    assert cfg.rates.as_array().tolist() == rates.as_array().tolist()


def test_malformed_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError, match="counts"):
        parse_config(["estimate", "--counts", str(path)])


def test_unknown_preset_and_config_key():
    with pytest.raises(ConfigError, match="rates"):
        parse_config(["simulate", "--rates", "pcast"])
    with pytest.raises(ConfigError, match="colour"):
        parse_config(["simulate"], {"colour": "red"})


def test_main_exit_codes(tmp_path, capsys):
    doc = preset_rate_vectors("observed").to_dict()
    doc["rSP"]["inconclusive"] = 0.5
    path = write_json(tmp_path, "rates.json", doc)
    assert main(["simulate", "--rates", path]) == 2
    assert "rSP" in capsys.readouterr().err
    zero = {"scenarios": {"present": {"correct_id": 5}, "absent": {"inconclusive": 4}}}
    path = write_json(tmp_path, "counts.json", zero)
    assert main(["estimate", "--counts", path]) == 3
    assert main(["estimate"]) == 0


def test_table_cell_format():
    cells = {row: {col: CellSummary(1.0, 1, 1) for col in ("present", "absent", "total")} for row in report.ROWS}
    cells["wrong_finger_id"]["present"] = CellSummary(35.38, 24, 47)
    cells["correct_id"]["absent"] = None
    text = report.render_table(SimulationSummary(cells, 1000, label="Observed frequencies", seed=0))
    assert "35.38 [24, 47]" in text
    line = next(l for l in text.splitlines() if l.startswith("Correct IDs"))
    assert "N/A" in line


def test_json_round_trip(small_summary):
    doc = json.loads(report.emit_summary_table(small_summary, "json"))
    assert doc["cells"]["correct_id"]["absent"] is None
    back = report.summary_from_dict(doc)
    for row in report.ROWS:
        for col in ("present", "absent", "total"):
            a, b = small_summary[row, col], back[row, col]
            if a is None:
                assert b is None
            else:
                assert b.mean == pytest.approx(a.mean, rel=1e-12) and (b.lower, b.upper) == (a.lower, a.upper)
    assert len(doc["perIteration"]) == 40


def test_table_values_are_rounded_json(small_summary):
    text = report.render_table(small_summary)
    doc = report.summary_to_dict(small_summary)
    for row in report.TABLE_ROWS:
        label = report.ROW_LABELS[row]
        line = next(l for l in text.splitlines() if l.startswith(label))
        cells = re.findall(r"(\d+\.\d{2}) \[(\d+), (\d+)\]|(N/A)", line[len(label):])
        assert len(cells) == 3
        for col, m in zip(("present", "absent", "total"), cells):
            v = doc["cells"][row][col]
            if v is None:
                assert m[3] == "N/A"
            else:
                assert m[0] == f"{v['mean']:.2f}" and int(m[1]) == v["lower"] and int(m[2]) == v["upper"]


def test_csv_matches_summary(small_summary):
    rows = list(csv.DictReader(io.StringIO(report.render_csv(small_summary))))
    assert len(rows) == len(report.ROWS) * 3
    for r in rows:
        cell = small_summary[r["row"], r["column"]]
        if cell is None:
            assert r["mean"] == ""
        else:
            assert float(r["mean"]) == cell.mean and int(r["lower"]) == cell.lower


def test_iterations_csv(small_summary):
    rows = list(csv.DictReader(io.StringIO(report.iterations_csv(small_summary))))
    assert len(rows) == 80
    first = small_summary.per_iteration[0]
    assert int(rows[0]["correct_id"]) == first[0, 0]


def test_simulate_csv_with_iterations(tmp_path):
    out = tmp_path / "sim.csv"
    assert main(["simulate", "--iterations", "5", "--format", "csv", "--keep-iterations", "--out", str(out)]) == 0
    assert out.read_text().startswith("row,column,mean,lower,upper")
    assert (tmp_path / "sim.iterations.csv").read_text().startswith("iteration,scenario")


def test_report_all_structure():
    doc = report.report_all(MDPD_OBSERVED, seed=1, n_iterations=10)
    assert [s["preset"] for s in doc["simulations"]] == list(PRESET_NAMES)
    assert len(doc["estimates"]) == 4
    assert len(doc["bayes"]) == 2
    assert doc["proportionTest"]["x1"] == 4 and doc["proportionTest"]["x2"] == 3
    text = report.render_report_table(doc)
    assert text.count("# of Latent Prints") == 7


def test_report_all_seed_variation():
    a = report.report_all(seed=1, n_iterations=10)
    b = report.report_all(seed=2, n_iterations=10)
    for sa, sb in zip(a["simulations"], b["simulations"]):
        ca = sa["summary"]["cells"]["decisions"]["total"]
        cb = sb["summary"]["cells"]["decisions"]["total"]
        assert ca["mean"] != cb["mean"]
        width = max(ca["upper"] - ca["lower"], cb["upper"] - cb["lower"])
        assert abs(ca["mean"] - cb["mean"]) <= width


@pytest.mark.parametrize("command", ["estimate", "bayes", "test-proportions"])
@pytest.mark.parametrize("fmt", ["table", "json", "csv"])
def test_small_commands(command, fmt, capsys):
    assert main([command, "--format", fmt]) == 0
    out = capsys.readouterr().out
    if fmt == "json":
        json.loads(out)
    assert out


def test_test_proportions_explicit(capsys):
    assert main(["test-proportions", "--x1", "5", "--n1", "100", "--x2", "5", "--n2", "100", "--format", "json"]) == 0
    assert json.loads(capsys.readouterr().out)["pValue"] == pytest.approx(1.0)
    assert main(["test-proportions", "--x1", "5"]) == 2


def test_report_all_cli_csv(capsys):
    assert main(["report-all", "--iterations", "3", "--format", "csv"]) == 0
    out = capsys.readouterr().out
    assert "simulation:altCommon" in out and "proportionTest" in out


def test_module_entry_point():
    import subprocess
    import sys

    res = subprocess.run([sys.executable, "-m", "latent_fpr", "bayes", "--format", "json"], capture_output=True, text=True)
    assert res.returncode == 0
    assert json.loads(res.stdout)["solutionOne"][0]["successes"] == 39


def test_exact_rates_flag():
    cfg = parse_config(["simulate", "--rates", "alt", "--exact-rates", "--quick"])
    assert cfg.exact_rates
    assert cfg.rates == preset_rate_vectors("alt", exact=True)
    assert not parse_config(["simulate", "--rates", "alt"]).exact_rates
