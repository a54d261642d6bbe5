import json
import math

import numpy as np
import pytest

from spcaclust import bench
from spcaclust.bench import (
    ExperimentConfig,
    ResultsRow,
    ResultsTable,
    cluster_file,
    emit_report,
    load_csv,
    parse_csv_report,
    run_grid,
    summarize,
)
from spcaclust.cli import main
from spcaclust.errors import CsvParseError, InvalidConfig
from spcaclust.synth import GridPoint, Replicate, SynthConfig, generate


def _small(**kw):
    base = dict(n=40, p=60, r_values=[0.5], v_values=[0.6], n_reps=2, seed=1, tau=1.5)
    base.update(kw)
    return ExperimentConfig(**base)


# --- config ----------------------------------------------------------------

def test_config_rejects_bad_values():
    for bad in [dict(r_values=[]), dict(n_reps=0), dict(r_values=[1.2]), dict(method="lda"),
                dict(beta=-1.0), dict(s_prime=0), dict(n=2)]:
        with pytest.raises(InvalidConfig):
            _small(**bad).validate()


def test_config_from_json(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"n": 50, "p": 70, "r_values": [0.35]}))
    cfg = ExperimentConfig.from_json(path)
    assert (cfg.n, cfg.p, cfg.r_values) == (50, 70, [0.35])
    path.write_text(json.dumps({"nn": 1}))
    with pytest.raises(InvalidConfig):
        ExperimentConfig.from_json(path)
    path.write_text("{not json")
    with pytest.raises(InvalidConfig):
        ExperimentConfig.from_json(path)


def test_default_initializer_uses_screen_size():
    cfg = ExperimentConfig(p=4000)
    assert cfg.spca_params(0.6).init.s_prime == 37
    assert cfg.spca_params(None).init.kind == "diagonal-threshold"
    assert ExperimentConfig(init="diag").spca_params(0.6).init.kind == "diagonal-threshold"


# --- grid ------------------------------------------------------------------

def test_single_cell_matches_direct_call():
    cfg = _small(n_reps=1, method="spca")
    table = run_grid(cfg, write=False)
    assert len(table) == 1
    rep = bench.run_one(cfg.synth_config(), GridPoint(0.5, 0.6), bench.make_method(cfg, "spca", 0.6), 0,
                        key=(0, 0), method_id=1)
    assert table.rows[0].mean_error == rep.error


def test_grid_shape_and_ranges():
    cfg = _small(r_values=[0.25, 0.65], v_values=[0.6, 0.8], n_reps=2, tau=None)
    table = run_grid(cfg, write=False)
    assert len(table) == 8
    for row in table:
        assert 0 <= row.mean_error <= 1 or math.isnan(row.mean_error)
        assert row.std_error >= 0 or math.isnan(row.std_error)
        assert row.n_reps == 2


def test_methods_share_datasets():
    cfg = _small(n_reps=3, tau=100.0)
    table = run_grid(cfg, write=False)
    assert table.get(0.5, 0.6, "spca").mean_error == 0.0
    assert table.get(0.5, 0.6, "pca").mean_error == 0.0


def test_summarize_counts_failures():
    reps = [Replicate(0.1, 1.0), Replicate(0.3, 1.0), Replicate(math.nan, 0.5, "X")]
    row = summarize(reps, 0.5, 0.6, "spca")
    assert row.mean_error == pytest.approx(0.2)
    assert row.std_error == pytest.approx(np.std([0.1, 0.3], ddof=1) / math.sqrt(2))
    assert row.failures == 1 and row.n_reps == 3 and row.seconds == 2.5
    assert summarize(reps, 0.5, 0.6, "spca", timing=False).seconds == 0.0
    assert math.isnan(summarize([Replicate(math.nan, 0, "X")], 0.5, 0.6, "spca").mean_error)


# --- reports ---------------------------------------------------------------

def _table():
    return ResultsTable([
        ResultsRow(0.25, 0.6, "spca", 0.4, 0.01, 10, 0, 1.5),
        ResultsRow(0.25, 0.8, "spca", 0.45, 0.02, 10, 1, 1.25),
        ResultsRow(0.65, 0.6, "spca", 0.0123456789, 0.001, 10, 0, 0.5),
        ResultsRow(0.65, 0.8, "spca", 0.3, 0.03, 10, 0, 0.5),
    ])


def test_single_row_csv():
    text = emit_report(ResultsTable(_table().rows[:1]))
    assert text == (
        "r,v,method,mean_error,std_error,n_reps,failures,seconds\n"
        "0.250000,0.600000,spca,0.400000,0.010000,10,0,1.500000\n"
    )


def test_csv_round_trip():
    table = _table()
    parsed = parse_csv_report(emit_report(table))
    assert parsed.rows == table.rounded().rows
    assert emit_report(parsed) == emit_report(table)


def test_markdown_layout():
    md = emit_report(_table(), "markdown")
    lines = md.splitlines()
    assert lines[0] == "### spca"
    assert lines[2] == "| r \\ v | 0.8 | 0.6 |"
    assert lines[4].startswith("| 0.25 | 0.4500 ± 0.0200 (1 failed) | 0.4000 ± 0.0100 |")
    assert len([ln for ln in lines if ln.startswith("| 0.")]) == 2


def test_empty_report_rejected():
    with pytest.raises(InvalidConfig):
        emit_report(ResultsTable())


# --- CSV ingestion -----------------------------------------------------------

def test_load_plain_csv(tmp_path):
    f = tmp_path / "a.csv"
    f.write_text("1,2\n3,4\n5,6\n")
    X, y = load_csv(f)
    assert X.values.shape == (3, 2) and y is None


def test_load_string_labels(tmp_path):
    f = tmp_path / "a.csv"
    f.write_text("g1,g2,class\n1,2,A\n3,4,B\n5,6,A\n")
    X, y = load_csv(f, label_column="class")
    assert y.labels.tolist() == [1, 2, 1]
    assert X.values.tolist() == [[1, 2], [3, 4], [5, 6]]
    X2, y2 = load_csv(f, has_labels=True)
    assert y2.labels.tolist() == [1, 2, 1]


def test_integer_labels_sorted(tmp_path):
    f = tmp_path / "a.csv"
    f.write_text("7,1,0.5\n3,2,0.25\n7,3,1\n")
    X, y = load_csv(f, label_column=0)
    assert y.labels.tolist() == [2, 1, 2]
    assert X.values.shape == (3, 2)


def test_parse_error_location(tmp_path):
    f = tmp_path / "a.csv"
    rows = ["a,b,c,d"] + ["1,2,3,4"] * 5 + ["1,2,x,4"]
    f.write_text("\n".join(rows) + "\n")
    with pytest.raises(CsvParseError) as info:
        load_csv(f)
    assert (info.value.row, info.value.column) == (7, 3)
    assert "row 7, column 3" in str(info.value)


def test_ragged_and_missing(tmp_path):
    f = tmp_path / "a.csv"
    f.write_text("1,2\n3\n")
    with pytest.raises(CsvParseError) as info:
        load_csv(f)
    assert info.value.row == 2
    with pytest.raises(CsvParseError):
        load_csv(tmp_path / "nope.csv")


def _export(tmp_path, tau=6.0, seed=0):
    ds = generate(SynthConfig(n=60, p=80, seed=seed, tau_override=tau), GridPoint(0.5, 0.6))
    path = tmp_path / "data.csv"
    header = ",".join(f"f{j}" for j in range(80)) + ",label"
    body = "\n".join(
        ",".join(repr(float(x)) for x in row) + f",{'AB'[k - 1]}" for row, k in zip(ds.X.values, ds.labels.labels)
    )
    path.write_text(header + "\n" + body + "\n")
    return path, ds


def test_cluster_file_round_trip(tmp_path):
    path, _ = _export(tmp_path)
    out = cluster_file(path, 2, has_labels=True)
    assert out.report.hamming == 0
    with pytest.raises(InvalidConfig):
        cluster_file(path, 3, has_labels=True)


# --- CLI -------------------------------------------------------------------

def test_cli_cluster_outputs(tmp_path, capsys):
    path, _ = _export(tmp_path)
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    assert main(["cluster", str(path), "--k", "2", "--labels", "label", "--out", str(a)]) == 0
    assert "hamming=0 " in capsys.readouterr().err
    assert main(["cluster", str(path), "--k", "2", "--labels", "label", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().splitlines()[0] == "sample,label"


def test_cli_exit_codes(tmp_path, capsys):
    path, _ = _export(tmp_path)
    assert main(["cluster", str(path), "--k", "3", "--labels", "label"]) == 2
    assert main(["cluster", str(tmp_path / "missing.csv"), "--k", "2"]) == 4
    assert main(["simulate", "--n", "40", "--p", "60", "--r", "1.5", "--v", "0.6", "--reps", "1"]) == 2
    blocked = tmp_path / "dir"
    blocked.mkdir()
    assert main(["simulate", "--n", "40", "--p", "60", "--r", "0.5", "--v", "0.6", "--reps", "1",
                 "--tau", "2", "--out", str(blocked)]) == 4
    noise = tmp_path / "noise.csv"
    noise.write_text("\n".join(",".join(str(x) for x in row)
                               for row in np.random.default_rng(0).normal(size=(30, 200))) + "\n")
    assert main(["cluster", str(noise), "--k", "2", "--on-empty", "raise"]) == 3
    capsys.readouterr()


def test_cli_simulate_writes_table(tmp_path, capsys):
    out = tmp_path / "t.csv"
    code = main(["simulate", "--n", "40", "--p", "60", "--r", "0.5", "--v", "0.6", "--reps", "2",
                 "--tau", "100", "--out", str(out), "--no-timing"])
    assert code == 0
    table = parse_csv_report(out.read_text())
    assert [row.method for row in table] == ["spca", "pca"]
    assert all(row.mean_error == 0.0 and row.seconds == 0.0 for row in table)


def test_cli_config_file_with_override(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"n": 40, "p": 60, "r_values": [0.5], "v_values": [0.6],
                               "n_reps": 1, "method": "pca", "tau": 100.0}))
    assert main(["simulate", "--config", str(cfg), "--format", "markdown", "--no-timing"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("### pca")


def test_cli_fisher_demo(capsys):
    assert main(["fisher-demo", "--draws", "20000"]) == 0
    out = capsys.readouterr().out
    assert "quad_form_full      1.562500000000" in out
    assert "quad_form_subset    1.000000000000" in out
    assert main(["fisher-demo", "--contrast", "1,0,0"]) == 2


def test_cli_selftest(capsys):
    assert main(["selftest"]) == 0
    assert "FAIL" not in capsys.readouterr().out


def test_detection_calibration_shows_trends():
    # under the weaker calibration every cell is near chance, so check trends here
    cfg = ExperimentConfig(n=145, p=1000, n_reps=25, seed=2024, method="spca", calibration="detection",
                           r_values=[0.25, 0.65], v_values=[0.6, 0.8])
    table = run_grid(cfg, write=False)
    strong, weak = table.get(0.65, 0.6, "spca"), table.get(0.25, 0.8, "spca")
    assert weak.mean_error - strong.mean_error > 3 * math.hypot(weak.std_error, strong.std_error)
    assert table.get(0.65, 0.6, "spca").mean_error < table.get(0.65, 0.8, "spca").mean_error
    assert table.get(0.65, 0.6, "spca").mean_error < table.get(0.25, 0.6, "spca").mean_error
