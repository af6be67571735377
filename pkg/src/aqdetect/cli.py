"""Command-line interface.

    aqdetect synth  --spec spec.json --out data/
    aqdetect ingest --readings data/readings.csv --stations data/stations.csv --data store/
    aqdetect run    --config pipeline.json --dataset d1234 --seed 7 --data store/ --out report.json
    aqdetect eval   --experiment x1234 --labels data/labels.csv --beta 0.5 --data store/
    aqdetect serve  --port 8787 --data store/

Every subcommand exits 0 on success; run/eval write machine-readable JSON
reports when --out is given.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import evaluation, pipeline, synth
from .errors import AqError
from .store import Store
from .timefmt import parse_iso


def _cmd_synth(args) -> int:
    spec_dict = json.loads(Path(args.spec).read_text(encoding="utf-8")) if args.spec else {}
    if args.anomalies is not None:
        spec_dict["anomalies"] = args.anomalies
    if args.days is not None:
        spec_dict["days"] = args.days
    if args.seed is not None:
        spec_dict["seed"] = args.seed
    if args.noise is not None:
        spec_dict["noise_sigma"] = args.noise
    spec = synth.spec_from_dict(spec_dict)
    result = synth.generate(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "readings.csv").write_text(synth.readings_csv(result), encoding="utf-8")
    (out / "stations.csv").write_text(synth.stations_csv(result), encoding="utf-8")
    (out / "labels.csv").write_text(synth.labels_csv(result), encoding="utf-8")
    (out / "spec.json").write_text(
        json.dumps(synth.spec_to_dict(spec), indent=2) + "\n", encoding="utf-8"
    )
    print(json.dumps({
        "out": str(out),
        "steps": spec.n_steps,
        "anomalies": len(spec.anomalies),
        "files": ["readings.csv", "stations.csv", "labels.csv", "spec.json"],
    }))
    return 0


def _cmd_ingest(args) -> int:
    store = Store(args.data)
    readings = Path(args.readings).read_text(encoding="utf-8")
    stations = Path(args.stations).read_text(encoding="utf-8")
    out = store.ingest(readings, stations, provenance={
        "readings_file": str(args.readings), "stations_file": str(args.stations),
    })
    print(json.dumps(out))
    return 0


def _cmd_run(args) -> int:
    store = Store(args.data)
    if args.config:
        config_dict = json.loads(Path(args.config).read_text(encoding="utf-8"))
    else:
        config_dict = pipeline.default_config().to_dict()
    out = store.run_experiment_sync(
        config_dict, args.dataset, stations=args.stations,
        pollutants=args.pollutants, seed=args.seed,
    )
    exp_id = out["experiment_id"]
    if args.out:
        report = store.root / "experiments" / exp_id / "result.json"
        Path(args.out).write_bytes(report.read_bytes())
    print(json.dumps({
        "experiment_id": exp_id,
        "status": out["status"],
        "cached": out["cached"],
        "summary": out["summary"],
        "result_hash": out["result_hash"],
    }))
    return 0


def read_labels_csv(path) -> list:
    """Ground-truth rows (station_id, attribute, start_epoch, end_epoch)."""
    import csv

    rows = []
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        expected = ["station_id", "attribute", "start", "end"]
        if header is None or [h.strip() for h in header] != expected:
            raise AqError(f"labels CSV header must be {','.join(expected)}")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 4:
                raise AqError(f"labels CSV line {lineno}: expected 4 fields")
            sid, attr, start, end = [f.strip() for f in row]
            rows.append((sid, attr, parse_iso(start), parse_iso(end)))
    return rows


def evaluate_experiment(store: Store, exp_id: str, labels: list, beta: float) -> dict:
    """Compare detected events against labels per (station, pollutant) model."""
    result = store.result(exp_id)
    gt_by_model: dict = {}
    for sid, attr, start, end in labels:
        gt_by_model.setdefault((sid, attr), []).append((start, end))

    rows = []
    for model in result["models"]:
        key = (model["station_id"], model["attribute"])
        if key not in gt_by_model or model["status"] != "done":
            continue
        ts = model.get("timestamps", [])
        if not ts:
            continue
        eval_range = (parse_iso(ts[0]), parse_iso(ts[-1]))
        det = [(parse_iso(ev["start"]), parse_iso(ev["end"])) for ev in model["events"]]
        li = evaluation.build_intervals(gt_by_model[key], det, eval_range)
        rows.append((key[0], key[1], evaluation.weighted_metrics(li, beta)))

    report = evaluation.summarize(rows)
    report["experiment_id"] = exp_id
    return report


def _format_pct(v) -> str:
    return "-" if v is None else f"{100 * v:6.2f}%"


def _cmd_eval(args) -> int:
    store = Store(args.data)
    labels = read_labels_csv(args.labels)
    report = evaluate_experiment(store, args.experiment, labels, args.beta)
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n",
                                  encoding="utf-8")
    print(f"experiment {args.experiment}  (beta = {args.beta})")
    header = f"{'station':<14}{'attribute':<12}{'precision':>10}{'recall':>10}{'f_beta':>10}"
    print(header)
    print("-" * len(header))
    for row in report["rows"]:
        print(f"{row['station_id']:<14}{row['attribute']:<12}"
              f"{_format_pct(row['precision']):>10}{_format_pct(row['recall']):>10}"
              f"{_format_pct(row['f_beta']):>10}")
    mean = report["mean"]
    print(f"{'mean':<14}{'':<12}{_format_pct(mean['precision']):>10}"
          f"{_format_pct(mean['recall']):>10}{_format_pct(mean['f_beta']):>10}")
    return 0


def _cmd_serve(args) -> int:
    from .server import serve_forever

    store = Store(args.data)
    serve_forever(store, port=args.port, host=args.host, ui_dir=args.ui)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aqdetect",
                                     description="air-quality anomaly detection toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate synthetic readings with planted anomalies")
    p.add_argument("--spec", help="JSON generator spec (defaults apply if omitted)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--anomalies", type=int, default=None, help="auto-plant this many anomalies")
    p.add_argument("--days", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--noise", type=float, default=None)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("ingest", help="validate and store a readings/stations CSV pair")
    p.add_argument("--readings", required=True)
    p.add_argument("--stations", required=True)
    p.add_argument("--data", required=True, help="store directory")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("run", help="run a pipeline experiment on an ingested dataset")
    p.add_argument("--config", help="pipeline config JSON (default pipeline if omitted)")
    p.add_argument("--dataset", required=True)
    p.add_argument("--stations", nargs="*", default=None)
    p.add_argument("--pollutants", nargs="*", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--data", required=True)
    p.add_argument("--out", help="write the result report to this file")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("eval", help="score an experiment against ground-truth labels")
    p.add_argument("--experiment", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--beta", type=float, default=0.5)
    p.add_argument("--data", required=True)
    p.add_argument("--out", help="write the metric report to this file")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("serve", help="serve the HTTP API (and optionally the UI build)")
    p.add_argument("--port", type=int, default=8787)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--data", required=True)
    p.add_argument("--ui", help="directory with a built frontend to serve at /")
    p.set_defaults(func=_cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except AqError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
