import csv
import json
import re

import pytest

from qoeplan.cli import UsageError, main, parse_range
from qoeplan.problem_io import data_path, read_problem_doc

W = {k: str(data_path(f"weights_{k}.json")) for k in ("w1", "w2", "w3")}


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_parse_range():
    assert parse_range("70:130:10") == [70, 80, 90, 100, 110, 120, 130]
    assert parse_range("1:2:0.25") == [1.0, 1.25, 1.5, 1.75, 2.0]
    assert parse_range("64.5") == [64.5]
    for bad in ("1:2", "a:b:c", "5:1:1", "1:5:0"):
        with pytest.raises(UsageError):
            parse_range(bad)


# ---- synth ----------------------------------------------------------------


def test_synth_fixture(tmp_path, capsys):
    code, out, _ = run(capsys, "synth", "--problem", "fixture", "--out", str(tmp_path / "a"))
    assert code == 0
    files = sorted((tmp_path / "a").glob("*.csv"))
    assert len(files) == 4
    for f in files:
        rows = read_csv(f)
        assert rows[0] == ["epoch", "loss", "mae", "mse"] and len(rows) == 1001
    assert len(out.strip().splitlines()) == 4


def test_synth_is_byte_identical(tmp_path, capsys):
    for d in ("a", "b"):
        run(capsys, "synth", "--problem", "fixture", "--seed", "3", "--out", str(tmp_path / d))
    for f in (tmp_path / "a").iterdir():
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()


def test_synth_rejects_bad_tau(tmp_path, capsys):
    doc, _ = read_problem_doc("fixture")
    doc["models"][2]["synth"]["mae"]["tau"] = 0
    spec = tmp_path / "bad.json"
    spec.write_text(json.dumps(doc))
    code, _, err = run(capsys, "synth", "--problem", str(spec), "--out", str(tmp_path / "o"))
    assert code != 0
    assert "SANet" in err


def test_synth_json_traces_round_trip(tmp_path, capsys):
    run(capsys, "synth", "--problem", "fixture", "--format", "json", "--out", str(tmp_path))
    doc = json.loads((tmp_path / "BL.json").read_text())
    assert doc["meta"]["name"] == "BL" and len(doc["records"]) == 1000


# ---- predict --------------------------------------------------------------


def test_predict_curvefit_on_fixture(tmp_path, capsys):
    out = tmp_path / "f.csv"
    code, _, err = run(capsys, "predict", "--problem", "fixture", "--model", "SANet",
                       "--method", "curvefit", "--observe", "500", "--horizon", "500", "--out", str(out))
    assert code == 0
    rows = read_csv(out)
    assert rows[0][:2] == ["epoch", "predicted"] and "actual" in rows[0]
    assert len(rows) == 501 and rows[1][0] == "501"
    mape = float(re.search(r"MAPE=([0-9.]+)%", err).group(1))
    assert mape <= 1.0


def test_predict_lstm_from_trace_file(tmp_path, capsys):
    run(capsys, "synth", "--problem", "fixture", "--out", str(tmp_path))
    out = tmp_path / "f.csv"
    code, _, err = run(capsys, "predict", "--trace", str(tmp_path / "BL.csv"), "--observe", "500",
                       "--horizon", "500", "--iters", "30", "--hidden-size", "4",
                       "--save-model", str(tmp_path / "net.json"), "--out", str(out))
    assert code == 0
    assert len(read_csv(out)) == 501
    assert "MAPE=" in err
    assert "w_out" in json.loads((tmp_path / "net.json").read_text())


def test_predict_without_ground_truth(tmp_path, capsys):
    run(capsys, "synth", "--problem", "fixture", "--out", str(tmp_path))
    out = tmp_path / "f.csv"
    code, _, err = run(capsys, "predict", "--trace", str(tmp_path / "MCNN.csv"), "--method", "curvefit",
                       "--observe", "1000", "--horizon", "100", "--out", str(out))
    assert code == 0
    rows = read_csv(out)
    assert rows[0] == ["epoch", "predicted"] and len(rows) == 101
    assert "MAPE" not in err


def test_predict_prefix_too_short(tmp_path, capsys):
    trace = tmp_path / "t.csv"
    trace.write_text("epoch,loss,mae,mse\n" + "".join(f"{k},1,{100 - k},{200 - k}\n" for k in range(1, 16)))
    code, _, err = run(capsys, "predict", "--trace", str(trace), "--observe", "15", "--horizon", "5")
    assert code != 0
    assert "need at least" in err


# ---- plan -----------------------------------------------------------------


def test_plan_average_generous_budget(tmp_path, capsys):
    out = tmp_path / "p.json"
    code, stdout, _ = run(capsys, "plan", "--problem", "fixture", "--method", "average",
                          "--budget", "500", "--out", str(out))
    assert code == 0
    doc = json.loads(out.read_text())
    assert [m["epochs"] for m in doc["models"]] == [1000] * 4
    assert "average" in stdout and "total_experience=" in stdout


def test_plan_ga_is_reproducible(tmp_path, capsys):
    for name in ("a.json", "b.json"):
        run(capsys, "plan", "--problem", "fixture", "--budget", "95", "--seed", "4", "--out", str(tmp_path / name))
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_plan_ga_near_exhaustive(tmp_path, capsys):
    run(capsys, "plan", "--problem", "fixture", "--method", "exhaustive", "--grid-step", "100",
        "--budget", "100", "--out", str(tmp_path / "ex.json"))
    run(capsys, "plan", "--problem", "fixture", "--budget", "100", "--out", str(tmp_path / "ga.json"))
    ex = json.loads((tmp_path / "ex.json").read_text())["total_experience"]
    ga = json.loads((tmp_path / "ga.json").read_text())["total_experience"]
    assert ga >= 0.98 * ex


def test_plan_infeasible_reports_minimum(capsys):
    code, _, err = run(capsys, "plan", "--problem", "fixture", "--budget", "50")
    assert code != 0
    assert "64.5" in err


def test_plan_unknown_method(capsys):
    code, _, err = run(capsys, "plan", "--problem", "fixture", "--method", "greedy")
    assert code == 2 and "greedy" in err


# ---- sweep ----------------------------------------------------------------


def test_sweep_row_count(tmp_path, capsys):
    out = tmp_path / "s.csv"
    code, _, _ = run(capsys, "sweep", "--problem", "fixture", "--budgets", "70:130:10",
                     "--method", "ga,random,fcfs,average", "--seeds", "0,1,2",
                     "--generations", "30", "--out", str(out))
    assert code == 0
    rows = read_csv(out)
    assert rows[0][:4] == ["budget_hours", "method", "seed", "total_experience"]
    assert rows[0][4] == "BL_epochs"
    assert len(rows) - 1 == 7 * (3 + 3 + 1 + 1)


def test_sweep_weight_variants(tmp_path, capsys):
    out = tmp_path / "s.csv"
    code, _, _ = run(capsys, "sweep", "--problem", "fixture", "--budgets", "80:100:10", "--method", "fcfs",
                     "--weights", W["w1"], "--weights", W["w2"], "--out", str(out))
    assert code == 0
    rows = read_csv(out)
    assert rows[0][-1] == "w_variant"
    assert {r[-1] for r in rows[1:]} == {"weights_w1", "weights_w2"}


def test_sweep_epoch_curves(tmp_path, capsys):
    out = tmp_path / "c.csv"
    argv = ["sweep", "--problem", "fixture", "--model", "SANet", "--epochs", "500:1000:100", "--out", str(out)]
    for w in W.values():
        argv += ["--weights", w]
    assert main(argv) == 0
    rows = read_csv(out)
    assert rows[0][:2] == ["epoch", "e_all"] and rows[0][-1] == "w_variant"
    assert len(rows) - 1 == 3 * 6


def test_sweep_empty_method_list(capsys):
    code, _, err = run(capsys, "sweep", "--problem", "fixture", "--method", "")
    assert code != 0
    assert "usage" in err


def test_sweep_flagged_rows_exit_nonzero(tmp_path, capsys):
    out = tmp_path / "s.csv"
    code, _, err = run(capsys, "sweep", "--problem", "fixture", "--budgets", "60:70:10", "--method", "fcfs",
                       "--out", str(out))
    assert code == 1
    assert "InfeasibleProblem" in out.read_text() and "flagged" in err


# ---- score ----------------------------------------------------------------


def test_score_bl(capsys):
    code, out, _ = run(capsys, "score", "--problem", "fixture", "--model", "BL", "--epochs", "1000",
                       "--weights", W["w1"])
    assert code == 0
    doc = json.loads(out)
    assert doc["e_all"] == pytest.approx(0.811604, abs=1e-6)
    assert set(doc["factors"]) == {"e_mae", "e_mse", "e_train", "e_load", "e_test"}


def test_score_unknown_model(capsys):
    code, _, err = run(capsys, "score", "--problem", "fixture", "--model", "ResNet", "--epochs", "600")
    assert code == 2 and "ResNet" in err
