#!/usr/bin/env python3
"""End-to-end benchmark on synthetic data with planted anomalies.

Generates a 120-day hourly series, ingests it into a scratch store, trains
the default pipeline, and scores the detected events against the planted
ground truth. Prints the per-model table plus timing.

Usage:
    python scripts/run_benchmark.py [--days 120] [--anomalies 10]
                                    [--data-seed 101] [--run-seed 1]
                                    [--workdir /tmp/aqdetect-bench]
"""

import argparse
import json
import shutil
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from aqdetect import cli  # noqa: E402


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--days", type=int, default=120)
    ap.add_argument("--anomalies", type=int, default=10)
    ap.add_argument("--noise", type=float, default=2.0)
    ap.add_argument("--data-seed", type=int, default=101)
    ap.add_argument("--run-seed", type=int, default=1)
    ap.add_argument("--workdir", default="/tmp/aqdetect-bench")
    args = ap.parse_args()

    work = Path(args.workdir)
    if work.exists():
        shutil.rmtree(work)
    work.mkdir(parents=True)
    data = work / "data"
    storedir = work / "store"

    spec = {
        "days": args.days,
        "noise_sigma": args.noise,
        "seed": args.data_seed,
        "anomalies": args.anomalies,
    }
    spec_file = work / "spec.json"
    spec_file.write_text(json.dumps(spec))

    t0 = time.perf_counter()
    cli.main(["synth", "--spec", str(spec_file), "--out", str(data)])
    cli.main([
        "ingest", "--readings", str(data / "readings.csv"),
        "--stations", str(data / "stations.csv"), "--data", str(storedir),
    ])
    dataset_id = None
    for ds_dir in (storedir / "datasets").iterdir():
        dataset_id = ds_dir.name
    cli.main([
        "run", "--dataset", dataset_id, "--seed", str(args.run_seed),
        "--data", str(storedir), "--out", str(work / "report.json"),
    ])
    report = json.loads((work / "report.json").read_text())
    exp_id = None
    for exp_dir in (storedir / "experiments").iterdir():
        exp_id = exp_dir.name
    cli.main([
        "eval", "--experiment", exp_id, "--labels", str(data / "labels.csv"),
        "--beta", "0.5", "--data", str(storedir), "--out", str(work / "metrics.json"),
    ])
    elapsed = time.perf_counter() - t0

    print(f"\nmodels: {report['summary']['model_count']}, "
          f"events: {report['summary']['event_count']}, "
          f"elapsed: {elapsed:.1f}s, workdir: {work}")


if __name__ == "__main__":
    main()
