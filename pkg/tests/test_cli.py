import csv
import io
import math
import time

import numpy as np
import pytest

from asrl import metrics
from asrl.cli import main
from asrl.errors import InvariantError
from asrl.metrics import EvalReport
from asrl.report import BenchReport, format_report, parse_report, read_report


@pytest.fixture
def toy_csv(tmp_path):
    rng = np.random.default_rng(0)
    x1, x2 = rng.uniform(0, 1, 20), rng.uniform(0, 1, 20)
    y = 3 * x1 - x2 + rng.normal(0, 0.1, 20)
    p = tmp_path / "toy.csv"
    with open(p, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x1", "x2", "target"])
        w.writerows(zip(x1, x2, y))
    return p


def strip_timing(text):
    return "\n".join(line for line in text.splitlines() if ".train_seconds" not in line)


def test_bench_toy_file(toy_csv, tmp_path, capsys):
    out = tmp_path / "r.txt"
    t0 = time.perf_counter()
    rc = main(["bench", "--dataset", str(toy_csv), "--target", "target", "--out", str(out)])
    assert rc == 0 and time.perf_counter() - t0 < 1.0
    table = capsys.readouterr().out
    for label in ("ASRL", "MSE (LS)", "MAE (LS)", "Huber", "Recall", "Time (s)"):
        assert label in table
    rep = read_report(out)
    assert list(rep.results) == ["asrl", "squared", "absolute", "huber"]
    assert rep.meta["n_train"] == "16" and rep.meta["n_test"] == "4"
    assert len(set(rep.split_hashes.values())) == 1
    assert len(set(rep.config_hashes.values())) == 1


def test_bench_reports_reproducible(toy_csv, tmp_path):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    for p in (a, b):
        assert main(["bench", "--dataset", str(toy_csv), "--target", "target", "--out", str(p), "--seed", "3"]) == 0
    assert strip_timing(a.read_text()) == strip_timing(b.read_text())


def test_bench_concurrent_matches_sequential(toy_csv, tmp_path):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    main(["bench", "--dataset", str(toy_csv), "--target", "target", "--out", str(a)])
    main(["bench", "--dataset", str(toy_csv), "--target", "target", "--out", str(b), "--jobs", "4"])
    ra, rb = read_report(a), read_report(b)
    assert rb.meta["concurrent"] == "true"
    assert {k: (v.mse, v.mae, v.r2) for k, v in ra.results.items()} == {
        k: (v.mse, v.mae, v.r2) for k, v in rb.results.items()
    }


def test_bench_zero_rounds_rows_identical(toy_csv, tmp_path):
    out = tmp_path / "r.txt"
    main(["bench", "--dataset", str(toy_csv), "--target", "target", "--rounds", "0", "--out", str(out)])
    rows = {(e.mse, e.mae, e.r2, e.recall) for e in read_report(out).results.values()}
    assert len(rows) == 1


def test_bench_saves_models(toy_csv, tmp_path):
    mdir = tmp_path / "models"
    main(["bench", "--dataset", str(toy_csv), "--target", "target", "--rounds", "3", "--save-models", str(mdir)])
    assert sorted(p.name for p in mdir.iterdir()) == [f"toy_{n}.json" for n in ("absolute", "asrl", "huber", "squared")]


def test_losscurve_example(capsys):
    rc = main(["losscurve", "--delta1", "1", "--delta2", "3", "--alpha", "1", "--beta", "1", "--gamma", "1",
               "--range", "5", "--step", "1"])
    assert rc == 0
    lines = [l for l in capsys.readouterr().out.splitlines() if not l.startswith("#")]
    rows = list(csv.DictReader(io.StringIO("\n".join(lines))))
    assert len(rows) == 11
    val = {float(r["r"]): float(r["loss"]) for r in rows}
    assert val[0.0] == 0.0
    assert val[2.0] == 2.0
    assert val[4.0] == pytest.approx(math.log(5))
    assert val[4.0] == pytest.approx(1.609, abs=5e-4)
    region = {float(r["r"]): r["region"] for r in rows}
    assert (region[1.0], region[3.0], region[4.0]) == ("small", "medium", "large")


def test_losscurve_invalid_state(capsys):
    rc = main(["losscurve", "--delta1", "3", "--delta2", "1", "--alpha", "1", "--beta", "1", "--gamma", "1"])
    assert rc == 2
    assert capsys.readouterr().err.startswith("error[E_USAGE]")


def test_scatter_matches_bench_mse(toy_csv, tmp_path):
    rep_path, sc_path = tmp_path / "r.txt", tmp_path / "s.csv"
    main(["bench", "--dataset", str(toy_csv), "--target", "target", "--out", str(rep_path)])
    main(["scatter", "--dataset", str(toy_csv), "--target", "target", "--loss", "asrl", "--out", str(sc_path)])
    with open(sc_path) as fh:
        pairs = [(float(r["y_test"]), float(r["y_pred"])) for r in csv.DictReader(fh)]
    y, y_hat = map(np.array, zip(*pairs))
    assert len(pairs) == 4
    assert metrics.mse(y, y_hat) == read_report(rep_path).results["asrl"].mse


def test_scatter_zero_rounds(toy_csv, capsys):
    main(["scatter", "--dataset", str(toy_csv), "--target", "target", "--rounds", "0"])
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert len({r["y_pred"] for r in rows}) == 1


def _report(name, mse):
    ev = EvalReport(mse, 1.0, 0.5, 0.5, 0.1)
    return BenchReport(name, {k: ev for k in ("asrl", "squared", "absolute", "huber")})


def test_summary_grid_and_duplicates(tmp_path, capsys, caplog):
    paths = []
    for i, (name, mse) in enumerate([("concrete", 1.0), ("airfoil", 2.0), ("concrete", 3.0)]):
        p = tmp_path / f"r{i}.txt"
        p.write_text(format_report(_report(name, mse)))
        paths.append(str(p))
    assert main(["summary", *paths[:1]]) == 0
    assert len(capsys.readouterr().out.strip().splitlines()) == 2
    assert main(["summary", *paths]) == 0
    out = capsys.readouterr().out.strip().splitlines()
    assert out[0] == "dataset,ASRL,MSE (LS),MAE (LS),Huber"
    assert out[1] == "concrete,3.0,3.0,3.0,3.0"
    assert len(out) == 3
    assert "duplicate dataset 'concrete'" in caplog.text


def test_summary_unreadable_report(tmp_path, capsys):
    rc = main(["summary", str(tmp_path / "missing.txt")])
    err = capsys.readouterr().err
    assert rc == 3 and err.startswith("error[E_DATA]") and "missing.txt" in err


def test_data_error_exit_code(tmp_path, capsys):
    p = tmp_path / "bad.csv"
    p.write_text("a,b\n1,2\n")
    rc = main(["bench", "--dataset", str(p), "--target", "y"])
    err = capsys.readouterr().err.strip()
    assert rc == 3 and err.startswith("error[E_DATA]") and "'y'" in err
    assert len(err.splitlines()) == 1


def test_unknown_dataset_exit_code(capsys, monkeypatch, tmp_path):
    monkeypatch.chdir(tmp_path)
    assert main(["bench", "--dataset", "nope"]) == 3
    assert main(["bench", "--dataset", "concrete", "--data-dir", str(tmp_path)]) == 3
    assert "not found" in capsys.readouterr().err


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        main(["bench"])
    assert exc.value.code == 2


def test_report_round_trip():
    rep = _report("x", 0.125)
    rep.meta = {"split.seed": 0, "concurrent": False}
    back = parse_report(format_report(rep))
    assert back.results["asrl"] == rep.results["asrl"]
    assert back.meta == {"split.seed": "0", "concurrent": "false"}


def test_controlled_check_fires():
    rep = _report("x", 1.0)
    rep.split_hashes = {"asrl": "aa", "squared": "bb"}
    with pytest.raises(InvariantError):
        rep.check_controlled()
