import json
from pathlib import Path

import pytest

from aqdetect import cli, pipeline


def run_cli(*args):
    return cli.main([str(a) for a in args])


def synth_dir(tmp_path, days=20, seed=6, anomalies=0, noise=1.0):
    tmp_path.mkdir(parents=True, exist_ok=True)
    out = tmp_path / "synthdata"
    spec = {"days": days, "seed": seed, "noise_sigma": noise, "anomalies": anomalies}
    spec_file = tmp_path / "spec.json"
    spec_file.write_text(json.dumps(spec))
    assert run_cli("synth", "--spec", spec_file, "--out", out) == 0
    return out


def fast_config_file(tmp_path):
    cfg = pipeline.default_config()
    idx = next(i for i, b in enumerate(cfg.blocks) if b.name == "lstm_regressor")
    cfg.blocks[idx] = pipeline.BlockSpec("persistence_regressor")
    cfg.block("find_anomaly").hyperparameters.update({"h": 120, "stride": 60})
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg.to_dict()))
    return path


class TestSynthCommand:
    def test_writes_all_files(self, tmp_path):
        out = synth_dir(tmp_path, anomalies=5)
        for name in ("readings.csv", "stations.csv", "labels.csv", "spec.json"):
            assert (out / name).exists()
        labels = (out / "labels.csv").read_text().strip().splitlines()
        assert len(labels) == 6  # header + 5 planted anomalies

    def test_same_seed_byte_identical(self, tmp_path):
        a = synth_dir(tmp_path / "a", seed=9, anomalies=3)
        b = synth_dir(tmp_path / "b", seed=9, anomalies=3)
        assert (a / "readings.csv").read_bytes() == (b / "readings.csv").read_bytes()
        assert (a / "labels.csv").read_bytes() == (b / "labels.csv").read_bytes()


class TestIngestCommand:
    def test_ingest_prints_id_and_counts(self, tmp_path, capsys):
        data = synth_dir(tmp_path)
        code = run_cli("ingest", "--readings", data / "readings.csv",
                       "--stations", data / "stations.csv", "--data", tmp_path / "store")
        assert code == 0
        out = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert out["dataset_id"].startswith("d")
        assert out["rows"] == 20 * 24 * 5

    def test_bad_file_exits_nonzero(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("station_id,timestamp,attribute,value\nA1,xxx,PM25,1\n")
        stations = tmp_path / "stations.csv"
        stations.write_text("station_id,name,latitude,longitude,kind\nA1,X,0,0,general\n")
        code = run_cli("ingest", "--readings", bad, "--stations", stations,
                       "--data", tmp_path / "store")
        assert code == 1
        assert "error" in capsys.readouterr().err


class TestRunCommand:
    def test_run_writes_report_and_summary(self, tmp_path, capsys):
        data = synth_dir(tmp_path, anomalies=3)
        storedir = tmp_path / "store"
        run_cli("ingest", "--readings", data / "readings.csv",
                "--stations", data / "stations.csv", "--data", storedir)
        ds_id = json.loads(capsys.readouterr().out.strip().splitlines()[-1])["dataset_id"]

        report = tmp_path / "report.json"
        code = run_cli("run", "--config", fast_config_file(tmp_path), "--dataset", ds_id,
                       "--seed", 3, "--data", storedir, "--out", report)
        assert code == 0
        out = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert out["status"] == "done"
        blob = json.loads(report.read_text())
        assert blob["summary"]["model_count"] == 1
        assert blob["seed"] == 3

    def test_run_byte_identical_reports_across_fresh_stores(self, tmp_path, capsys):
        data = synth_dir(tmp_path, anomalies=3)
        reports = []
        for name in ("s1", "s2"):
            storedir = tmp_path / name
            run_cli("ingest", "--readings", data / "readings.csv",
                    "--stations", data / "stations.csv", "--data", storedir)
            ds_id = json.loads(capsys.readouterr().out.strip().splitlines()[-1])["dataset_id"]
            report = tmp_path / f"report_{name}.json"
            run_cli("run", "--config", fast_config_file(tmp_path), "--dataset", ds_id,
                    "--seed", 3, "--data", storedir, "--out", report)
            capsys.readouterr()
            reports.append(report.read_bytes())
        assert reports[0] == reports[1]


class TestEvalCommand:
    def test_eval_reports_metrics(self, tmp_path, capsys):
        data = synth_dir(tmp_path, days=30, seed=8, anomalies=4, noise=1.0)
        storedir = tmp_path / "store"
        run_cli("ingest", "--readings", data / "readings.csv",
                "--stations", data / "stations.csv", "--data", storedir)
        ds_id = json.loads(capsys.readouterr().out.strip().splitlines()[-1])["dataset_id"]
        run_cli("run", "--config", fast_config_file(tmp_path), "--dataset", ds_id,
                "--seed", 3, "--data", storedir)
        exp_id = json.loads(capsys.readouterr().out.strip().splitlines()[-1])["experiment_id"]

        report = tmp_path / "metrics.json"
        code = run_cli("eval", "--experiment", exp_id, "--labels", data / "labels.csv",
                       "--beta", 0.5, "--data", storedir, "--out", report)
        assert code == 0
        text = capsys.readouterr().out
        assert "precision" in text and "mean" in text
        blob = json.loads(report.read_text())
        assert blob["beta"] == 0.5
        assert len(blob["rows"]) == 1
        assert blob["rows"][0]["station_id"] == "S1"

    def test_eval_unknown_experiment_fails(self, tmp_path, capsys):
        data = synth_dir(tmp_path, anomalies=2)
        code = run_cli("eval", "--experiment", "x-nope", "--labels", data / "labels.csv",
                       "--data", tmp_path / "store")
        assert code == 1


class TestLabelsCsv:
    def test_round_trip(self, tmp_path):
        data = synth_dir(tmp_path, days=60, seed=13, anomalies=7)
        rows = cli.read_labels_csv(data / "labels.csv")
        assert len(rows) == 7
        sid, attr, start, end = rows[0]
        assert sid == "S1"
        assert attr == "PM25"
        assert start < end

    def test_bad_header_rejected(self, tmp_path):
        bad = tmp_path / "labels.csv"
        bad.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(Exception):
            cli.read_labels_csv(bad)
